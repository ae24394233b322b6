//! Log and exp maps on SPD matrices, and the isometric half-vectorization.
//!
//! Run with `cargo run --example spd_log_map`.

use logcov::linalg::{half_vec, half_vec_inverse, spd_exp, spd_log, sym_eig, Matrix, SpdMatrix, SymmetricMatrix, ISOMETRIC_SCALE};

fn main() -> logcov::Result<()> {
    let a = Matrix::from_rows(&[[2.0, 0.5, 0.0], [0.5, 1.0, 0.2], [0.0, 0.2, 0.5]])?;
    let x = SpdMatrix::new(SymmetricMatrix::from_matrix_symmetrized(&a)?)?;
    let eig = sym_eig(x.as_symmetric())?;
    println!("eigenvalues of X: {:?}", eig.eigenvalues());

    let log_x = spd_log(&x)?;
    println!("log(X):\n{:?}", log_x.to_matrix());

    let back = spd_exp(&log_x)?;
    let err = back.as_symmetric().to_matrix().sub(&a).frobenius_norm() / a.frobenius_norm();
    println!("exp(log(X)) relative error: {err:.2e}");

    // Off-diagonals are scaled by sqrt(2) so vector and matrix norms agree.
    let v = half_vec(&log_x, ISOMETRIC_SCALE)?;
    let norm = v.values().iter().map(|x| x * x).sum::<f64>().sqrt();
    println!("tangent vector ({} values): {:?}", v.len(), v.values());
    println!("||v|| = {norm:.12}, ||log X||_F = {:.12}", log_x.frobenius_norm());

    let again = half_vec(&half_vec_inverse(&v)?, ISOMETRIC_SCALE)?;
    println!("half_vec(half_vec_inverse(v)) == v: {}", again == v);
    Ok(())
}
