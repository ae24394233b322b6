//! Symmetric eigendecomposition by cyclic Jacobi rotations.

use super::matrix::gemm;
use super::{Matrix, SymmetricMatrix};
use crate::error::{Error, Result};

/// Sweep cap; well-conditioned inputs converge in under 15.
pub const MAX_SWEEPS: usize = 100;

/// Components at or below this magnitude are skipped when fixing eigenvector signs.
const SIGN_THRESHOLD: f64 = 1e-12;

/// `S = U diag(λ) Uᵀ` with λ sorted descending and unit-norm eigenvector columns.
#[derive(Clone, Debug, PartialEq)]
pub struct EigenDecomposition {
    eigenvalues: Vec<f64>,
    eigenvectors: Matrix,
}

impl EigenDecomposition {
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Column `k` is the eigenvector for `eigenvalues()[k]`.
    pub fn eigenvectors(&self) -> &Matrix {
        &self.eigenvectors
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn min_eigenvalue(&self) -> Option<f64> {
        self.eigenvalues.last().copied()
    }

    /// `U diag(f(λ)) Uᵀ`.
    pub fn map_eigenvalues(&self, f: impl Fn(f64) -> f64) -> Result<SymmetricMatrix> {
        let d = self.dim();
        let mapped: Vec<f64> = self.eigenvalues.iter().map(|&l| f(l)).collect();
        if mapped.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("mapped eigenvalues"));
        }
        let mut scaled = self.eigenvectors.clone();
        for i in 0..d {
            for (x, m) in scaled.row_mut(i).iter_mut().zip(&mapped) {
                *x *= m;
            }
        }
        let mut full = Matrix::zeros(d, d);
        gemm(1.0, &scaled, false, &self.eigenvectors, true, 0.0, &mut full);
        SymmetricMatrix::from_lower(&full)
    }

    pub fn reconstruct(&self) -> SymmetricMatrix {
        self.map_eigenvalues(|l| l)
            .expect("eigenvalues are finite by construction")
    }
}

/// Eigendecomposition of a real symmetric matrix.
///
/// Deterministic: identical input gives bit-identical output. Eigenvector
/// columns are oriented so their first non-negligible component is positive.
pub fn sym_eig(s: &SymmetricMatrix) -> Result<EigenDecomposition> {
    s.check_finite()?;
    let d = s.dim();
    let mut a = s.to_matrix();
    // rows of `vt` are the eigenvectors being accumulated
    let mut vt = Matrix::identity(d);

    let norm = a.frobenius_norm();
    if norm > 0.0 {
        jacobi_sweeps(&mut a, &mut vt, norm)?;
    }

    let diag: Vec<f64> = (0..d).map(|i| a[(i, i)]).collect();
    let mut order: Vec<usize> = (0..d).collect();
    // stable: equal eigenvalues keep their sweep order
    order.sort_by(|&x, &y| diag[y].total_cmp(&diag[x]));

    let eigenvalues = order.iter().map(|&k| diag[k]).collect();
    let mut eigenvectors = Matrix::zeros(d, d);
    for (col, &k) in order.iter().enumerate() {
        let v = vt.row(k);
        let flip = v
            .iter()
            .find(|x| x.abs() > SIGN_THRESHOLD)
            .is_some_and(|&x| x < 0.0);
        for (i, &x) in v.iter().enumerate() {
            eigenvectors[(i, col)] = if flip { -x } else { x };
        }
    }
    Ok(EigenDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

fn off_diagonal_norm(a: &Matrix) -> f64 {
    let d = a.rows();
    let mut sum = 0.0;
    for i in 0..d {
        for j in 0..i {
            sum += a[(i, j)] * a[(i, j)];
        }
    }
    (2.0 * sum).sqrt()
}

fn jacobi_sweeps(a: &mut Matrix, vt: &mut Matrix, norm: f64) -> Result<()> {
    let d = a.rows();
    let tol = f64::EPSILON * norm;
    for sweep in 0..MAX_SWEEPS {
        let off = off_diagonal_norm(a);
        if off <= tol {
            return Ok(());
        }
        for p in 0..d {
            for q in p + 1..d {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let app = a[(p, p)];
                let aqq = a[(q, q)];
                // late sweeps: drop rotations that cannot change the diagonal
                let g = 100.0 * apq.abs();
                if sweep > 3 && app.abs() + g == app.abs() && aqq.abs() + g == aqq.abs() {
                    a[(p, q)] = 0.0;
                    a[(q, p)] = 0.0;
                    continue;
                }
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                rotate(a, vt, p, q, c, s, t * apq);
            }
        }
    }
    if off_diagonal_norm(a) <= tol {
        Ok(())
    } else {
        Err(Error::NoConvergence { sweeps: MAX_SWEEPS })
    }
}

/// Applies `A ← Jᵀ A J` for the (p, q) plane rotation and accumulates it into `vt`.
#[inline]
fn rotate(a: &mut Matrix, vt: &mut Matrix, p: usize, q: usize, c: f64, s: f64, t_apq: f64) {
    let d = a.rows();
    for k in 0..d {
        if k == p || k == q {
            continue;
        }
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        let np = c * apk - s * aqk;
        let nq = s * apk + c * aqk;
        a[(p, k)] = np;
        a[(k, p)] = np;
        a[(q, k)] = nq;
        a[(k, q)] = nq;
    }
    a[(p, p)] -= t_apq;
    a[(q, q)] += t_apq;
    a[(p, q)] = 0.0;
    a[(q, p)] = 0.0;

    let cols = vt.cols();
    let data = vt.as_mut_slice();
    let (lo, hi) = data.split_at_mut(q * cols);
    let vp = &mut lo[p * cols..(p + 1) * cols];
    let vq = &mut hi[..cols];
    for (x, y) in vp.iter_mut().zip(vq.iter_mut()) {
        let (xp, xq) = (*x, *y);
        *x = c * xp - s * xq;
        *y = s * xp + c * xq;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::test_support::random_symmetric;

    fn sym(rows: &[&[f64]]) -> SymmetricMatrix {
        SymmetricMatrix::from_lower(&Matrix::from_rows(rows).unwrap()).unwrap()
    }

    #[test]
    fn diagonal_input_is_returned_sorted() {
        let e = sym_eig(&SymmetricMatrix::from_diag(&[1.0, 3.0]).unwrap()).unwrap();
        assert_eq!(e.eigenvalues(), &[3.0, 1.0]);
        let u = e.eigenvectors();
        assert_eq!(u.column(0), vec![0.0, 1.0]);
        assert_eq!(u.column(1), vec![1.0, 0.0]);

        let e = sym_eig(&SymmetricMatrix::from_diag(&[3.0, 1.0]).unwrap()).unwrap();
        assert_eq!(e.eigenvectors(), &Matrix::identity(2));
    }

    #[test]
    fn two_by_two_matches_characteristic_polynomial() {
        // λ² - 4λ + 3 = 0  →  λ ∈ {3, 1}
        let e = sym_eig(&sym(&[&[2.0, 1.0], &[1.0, 2.0]])).unwrap();
        assert!((e.eigenvalues()[0] - 3.0).abs() < 1e-14);
        assert!((e.eigenvalues()[1] - 1.0).abs() < 1e-14);
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let u = e.eigenvectors();
        // sign convention: first component positive
        assert!((u[(0, 0)] - r).abs() < 1e-14 && (u[(1, 0)] - r).abs() < 1e-14);
        assert!((u[(0, 1)] - r).abs() < 1e-14 && (u[(1, 1)] + r).abs() < 1e-14);
    }

    #[test]
    fn random_8x8_reconstructs() {
        let s = random_symmetric(8, 42);
        let e = sym_eig(&s).unwrap();
        let err = e.reconstruct().to_matrix().sub(&s.to_matrix()).frobenius_norm();
        assert!(err <= 1e-8 * s.frobenius_norm(), "err {err}");
    }

    #[test]
    fn zero_and_one_by_one() {
        let e = sym_eig(&SymmetricMatrix::zeros(3)).unwrap();
        assert_eq!(e.eigenvalues(), &[0.0, 0.0, 0.0]);
        let e = sym_eig(&SymmetricMatrix::from_diag(&[-2.5]).unwrap()).unwrap();
        assert_eq!(e.eigenvalues(), &[-2.5]);
        assert_eq!(e.eigenvectors()[(0, 0)], 1.0);
    }

    #[test]
    fn nan_is_rejected() {
        let r = SymmetricMatrix::from_packed(2, vec![1.0, f64::NAN, 1.0]);
        assert!(matches!(r, Err(Error::NonFinite(_))));
    }

    #[test]
    fn deterministic() {
        let s = random_symmetric(20, 3);
        assert_eq!(sym_eig(&s).unwrap(), sym_eig(&s).unwrap());
    }

    #[test]
    fn repeated_eigenvalues_reconstruct() {
        let s = SymmetricMatrix::identity(5);
        let e = sym_eig(&s).unwrap();
        assert_eq!(e.eigenvalues(), &[1.0; 5]);
        let m = sym(&[&[2.0, 0.0, 1.0], &[0.0, 3.0, 0.0], &[1.0, 0.0, 2.0]]);
        let e = sym_eig(&m).unwrap();
        assert!((e.eigenvalues()[0] - 3.0).abs() < 1e-14);
        assert!((e.eigenvalues()[1] - 3.0).abs() < 1e-14);
        let err = e.reconstruct().to_matrix().sub(&m.to_matrix()).frobenius_norm();
        assert!(err < 1e-13);
    }
}
