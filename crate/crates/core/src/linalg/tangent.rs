use serde::{Deserialize, Serialize};

use super::symmetric::{triangular_dim, triangular_len};
use super::SymmetricMatrix;
use crate::error::{Error, Result};

/// Scale that makes half-vectorization a Frobenius isometry.
pub const ISOMETRIC_SCALE: f64 = std::f64::consts::SQRT_2;

/// Half-vectorized symmetric matrix: the lower triangle in row-major order,
/// off-diagonal entries multiplied by `offdiag_scale`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TangentVector {
    dim_source: usize,
    values: Vec<f64>,
    offdiag_scale: f64,
}

impl TangentVector {
    pub fn new(values: Vec<f64>, offdiag_scale: f64) -> Result<Self> {
        let dim_source = triangular_dim(values.len()).ok_or(Error::BadLength(values.len()))?;
        if !offdiag_scale.is_finite() || offdiag_scale == 0.0 {
            return Err(Error::NonFinite("offdiag_scale"));
        }
        if values.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("tangent vector"));
        }
        Ok(TangentVector {
            dim_source,
            values,
            offdiag_scale,
        })
    }

    pub fn dim_source(&self) -> usize {
        self.dim_source
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn offdiag_scale(&self) -> f64 {
        self.offdiag_scale
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Row-major lower-triangle traversal (`i ≥ j`), off-diagonals scaled.
pub fn half_vec(s: &SymmetricMatrix, offdiag_scale: f64) -> Result<TangentVector> {
    if !offdiag_scale.is_finite() || offdiag_scale == 0.0 {
        return Err(Error::NonFinite("offdiag_scale"));
    }
    let d = s.dim();
    let mut values = Vec::with_capacity(triangular_len(d));
    for i in 0..d {
        for j in 0..i {
            values.push(s.get(i, j) * offdiag_scale);
        }
        values.push(s.get(i, i));
    }
    if values.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("tangent vector"));
    }
    Ok(TangentVector {
        dim_source: d,
        values,
        offdiag_scale,
    })
}

/// Rebuilds the symmetric matrix from its half-vectorization.
///
/// Off-diagonal entries are chosen so that `half_vec` of the result
/// reproduces `v` exactly whenever such a preimage exists (always the case for
/// vectors produced by [`half_vec`]).
pub fn half_vec_inverse(v: &TangentVector) -> Result<SymmetricMatrix> {
    let d = triangular_dim(v.values.len()).ok_or(Error::BadLength(v.values.len()))?;
    let scale = v.offdiag_scale;
    let mut out = SymmetricMatrix::zeros(d);
    let mut k = 0;
    for i in 0..d {
        for j in 0..i {
            out.set(i, j, unscale(v.values[k], scale));
            k += 1;
        }
        out.set(i, i, v.values[k]);
        k += 1;
    }
    out.check_finite()?;
    Ok(out)
}

/// Finds `x` with `x * scale == target` in floating point, searching a few
/// ulps around `target / scale`.
fn unscale(target: f64, scale: f64) -> f64 {
    let guess = target / scale;
    if scale == 1.0 || guess * scale == target || !guess.is_finite() || guess == 0.0 {
        return guess;
    }
    let mut lo = guess;
    let mut hi = guess;
    for _ in 0..4 {
        lo = next_down(lo);
        hi = next_up(hi);
        if lo * scale == target {
            return lo;
        }
        if hi * scale == target {
            return hi;
        }
    }
    guess
}

fn next_up(x: f64) -> f64 {
    let bits = x.to_bits();
    if x > 0.0 {
        f64::from_bits(bits + 1)
    } else {
        f64::from_bits(bits - 1)
    }
}

fn next_down(x: f64) -> f64 {
    -next_up(-x)
}
