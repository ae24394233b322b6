//! Dense symmetric and SPD matrix numerics.

mod eigen;
mod matrix;
mod spd;
mod symmetric;
mod tangent;

pub use eigen::{sym_eig, EigenDecomposition, MAX_SWEEPS};
pub use matrix::{gemm, Matrix};
pub(crate) use matrix::{axpy, dot};
pub use spd::{spd_exp, spd_log, SpdMatrix};
pub use symmetric::{triangular_dim, triangular_len, SymmetricMatrix};
pub use tangent::{half_vec, half_vec_inverse, TangentVector, ISOMETRIC_SCALE};
