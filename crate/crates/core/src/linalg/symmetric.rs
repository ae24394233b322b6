use serde::{Deserialize, Serialize};

use super::Matrix;
use crate::error::{Error, Result};

#[inline]
pub(crate) fn packed_index(i: usize, j: usize) -> usize {
    let (r, c) = if i >= j { (i, j) } else { (j, i) };
    r * (r + 1) / 2 + c
}

/// Number of entries on and below the diagonal of a `dim × dim` matrix.
#[inline]
pub fn triangular_len(dim: usize) -> usize {
    dim * (dim + 1) / 2
}

/// Inverse of [`triangular_len`], if `len` is a triangular number.
pub fn triangular_dim(len: usize) -> Option<usize> {
    // d = (sqrt(8 len + 1) - 1) / 2, checked exactly in integers
    let d = ((((8 * len + 1) as f64).sqrt() - 1.0) / 2.0).round() as usize;
    (d.saturating_sub(1)..=d + 1).find(|&k| triangular_len(k) == len)
}

/// Real symmetric matrix stored as its packed lower triangle.
///
/// The upper triangle is never stored, so `get(i, j) == get(j, i)` holds
/// bit-for-bit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymmetricMatrix {
    dim: usize,
    lower: Vec<f64>,
}

impl SymmetricMatrix {
    pub fn zeros(dim: usize) -> Self {
        SymmetricMatrix {
            dim,
            lower: vec![0.0; triangular_len(dim)],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut s = SymmetricMatrix::zeros(dim);
        for i in 0..dim {
            s.set(i, i, 1.0);
        }
        s
    }

    pub fn from_diag(diag: &[f64]) -> Result<Self> {
        let mut s = SymmetricMatrix::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            s.set(i, i, d);
        }
        s.check_finite()?;
        Ok(s)
    }

    /// Packed lower triangle in row-major order: (0,0), (1,0), (1,1), (2,0), ...
    pub fn from_packed(dim: usize, lower: Vec<f64>) -> Result<Self> {
        if lower.len() != triangular_len(dim) {
            return Err(Error::DimensionMismatch {
                expected: triangular_len(dim),
                actual: lower.len(),
            });
        }
        let s = SymmetricMatrix { dim, lower };
        s.check_finite()?;
        Ok(s)
    }

    /// Takes the lower triangle of a square matrix; the upper triangle is ignored.
    pub fn from_lower(m: &Matrix) -> Result<Self> {
        if m.rows() != m.cols() {
            return Err(Error::DimensionMismatch {
                expected: m.rows(),
                actual: m.cols(),
            });
        }
        let dim = m.rows();
        let mut lower = Vec::with_capacity(triangular_len(dim));
        for i in 0..dim {
            lower.extend_from_slice(&m.row(i)[..=i]);
        }
        SymmetricMatrix::from_packed(dim, lower)
    }

    /// Symmetrizes `(m + mᵀ) / 2`.
    pub fn from_matrix_symmetrized(m: &Matrix) -> Result<Self> {
        if m.rows() != m.cols() {
            return Err(Error::DimensionMismatch {
                expected: m.rows(),
                actual: m.cols(),
            });
        }
        let dim = m.rows();
        let mut lower = Vec::with_capacity(triangular_len(dim));
        for i in 0..dim {
            for j in 0..=i {
                lower.push(0.5 * (m[(i, j)] + m[(j, i)]));
            }
        }
        SymmetricMatrix::from_packed(dim, lower)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.lower[packed_index(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.lower[packed_index(i, j)] = value;
    }

    pub fn packed(&self) -> &[f64] {
        &self.lower
    }

    pub fn to_matrix(&self) -> Matrix {
        let mut m = Matrix::zeros(self.dim, self.dim);
        for i in 0..self.dim {
            for j in 0..=i {
                let v = self.get(i, j);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        m
    }

    pub fn frobenius_norm(&self) -> f64 {
        let mut sum = 0.0;
        for i in 0..self.dim {
            for j in 0..i {
                let v = self.get(i, j);
                sum += 2.0 * v * v;
            }
            let d = self.get(i, i);
            sum += d * d;
        }
        sum.sqrt()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    pub(crate) fn check_finite(&self) -> Result<()> {
        if self.lower.iter().all(|x| x.is_finite()) {
            Ok(())
        } else {
            Err(Error::NonFinite("symmetric matrix"))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triangular_dim_inverts_len() {
        for d in 0..300 {
            assert_eq!(triangular_dim(triangular_len(d)), Some(d));
        }
        assert_eq!(triangular_dim(4), None);
        assert_eq!(triangular_dim(2), None);
    }

    #[test]
    fn storage_is_symmetric() {
        let m = Matrix::from_rows(&[[1.0, 9.0], [2.0, 3.0]]).unwrap();
        let s = SymmetricMatrix::from_lower(&m).unwrap();
        assert_eq!(s.get(0, 1), 2.0);
        assert_eq!(s.get(1, 0), 2.0);
        assert_eq!(s.to_matrix(), Matrix::from_rows(&[[1.0, 2.0], [2.0, 3.0]]).unwrap());
    }

    #[test]
    fn rejects_non_finite() {
        assert!(matches!(
            SymmetricMatrix::from_packed(1, vec![f64::NAN]),
            Err(Error::NonFinite(_))
        ));
    }
}
