use super::eigen::sym_eig;
use super::SymmetricMatrix;
use crate::error::{Error, Result};

/// Symmetric positive definite matrix. The smallest eigenvalue is checked to
/// be strictly positive at construction.
#[derive(Clone, Debug, PartialEq)]
pub struct SpdMatrix {
    base: SymmetricMatrix,
}

impl SpdMatrix {
    pub fn new(base: SymmetricMatrix) -> Result<Self> {
        let eig = sym_eig(&base)?;
        if let Some((index, &value)) = eig
            .eigenvalues()
            .iter()
            .enumerate()
            .find(|(_, &l)| l <= 0.0)
        {
            return Err(Error::NonPositiveEigenvalue { index, value });
        }
        Ok(SpdMatrix { base })
    }

    pub fn as_symmetric(&self) -> &SymmetricMatrix {
        &self.base
    }

    pub fn into_symmetric(self) -> SymmetricMatrix {
        self.base
    }

    pub fn dim(&self) -> usize {
        self.base.dim()
    }
}

/// Matrix logarithm `U diag(log λ) Uᵀ`.
pub fn spd_log(x: &SpdMatrix) -> Result<SymmetricMatrix> {
    symmetric_log(x.as_symmetric())
}

/// Logarithm of a symmetric matrix whose eigenvalues must all be positive.
fn symmetric_log(s: &SymmetricMatrix) -> Result<SymmetricMatrix> {
    let eig = sym_eig(s)?;
    if let Some((index, &value)) = eig
        .eigenvalues()
        .iter()
        .enumerate()
        .find(|(_, &l)| l <= 0.0)
    {
        return Err(Error::NonPositiveEigenvalue { index, value });
    }
    eig.map_eigenvalues(f64::ln)
}

/// Matrix exponential `U diag(exp λ) Uᵀ`; inverse of [`spd_log`].
pub fn spd_exp(s: &SymmetricMatrix) -> Result<SpdMatrix> {
    let eig = sym_eig(s)?;
    if let Some((index, &value)) = eig
        .eigenvalues()
        .iter()
        .enumerate()
        .find(|(_, &l)| l.exp() <= 0.0)
    {
        // exp underflowed to zero
        return Err(Error::NonPositiveEigenvalue { index, value });
    }
    let base = eig.map_eigenvalues(f64::exp)?;
    Ok(SpdMatrix { base })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::test_support::random_spd;
    use crate::linalg::Matrix;

    #[test]
    fn log_of_identity_is_zero() {
        let l = spd_log(&SpdMatrix::new(SymmetricMatrix::identity(4)).unwrap()).unwrap();
        assert_eq!(l, SymmetricMatrix::zeros(4));
    }

    #[test]
    fn log_of_diagonal_is_scalar_log() {
        let e = std::f64::consts::E;
        let x = SpdMatrix::new(SymmetricMatrix::from_diag(&[e, e * e]).unwrap()).unwrap();
        let l = spd_log(&x).unwrap();
        assert!((l.get(0, 0) - 1.0).abs() < 1e-15);
        assert!((l.get(1, 1) - 2.0).abs() < 1e-15);
        assert_eq!(l.get(1, 0), 0.0);
    }

    #[test]
    fn log_of_two_by_two() {
        // eigenpairs (3, (1,1)/√2), (1, (1,-1)/√2): every entry = log(3)/2
        let m = Matrix::from_rows(&[[2.0, 1.0], [1.0, 2.0]]).unwrap();
        let x = SpdMatrix::new(SymmetricMatrix::from_lower(&m).unwrap()).unwrap();
        let l = spd_log(&x).unwrap();
        let half_log3 = 3f64.ln() / 2.0;
        assert!((half_log3 - 0.5493).abs() < 1e-4);
        for (i, j) in [(0, 0), (1, 0), (1, 1)] {
            assert!((l.get(i, j) - half_log3).abs() < 1e-14);
        }
    }

    #[test]
    fn exp_inverts_simple_cases() {
        assert_eq!(
            spd_exp(&SymmetricMatrix::zeros(3)).unwrap().into_symmetric(),
            SymmetricMatrix::identity(3)
        );
        let x = spd_exp(&SymmetricMatrix::from_diag(&[1.0, 2.0]).unwrap()).unwrap();
        let e = std::f64::consts::E;
        assert!((x.as_symmetric().get(0, 0) - e).abs() < 1e-15);
        assert!((x.as_symmetric().get(1, 1) - e * e).abs() < 1e-14);
    }

    #[test]
    fn roundtrip_random_spd() {
        let x = random_spd(12, 9);
        let back = spd_exp(&spd_log(&x).unwrap()).unwrap();
        let err = back
            .as_symmetric()
            .to_matrix()
            .sub(&x.as_symmetric().to_matrix())
            .frobenius_norm();
        assert!(err <= 1e-8 * x.as_symmetric().frobenius_norm());
    }

    #[test]
    fn non_positive_input_is_rejected() {
        let s = SymmetricMatrix::from_diag(&[1.0, 0.0]).unwrap();
        assert!(matches!(
            SpdMatrix::new(s.clone()),
            Err(Error::NonPositiveEigenvalue { index: 1, .. })
        ));
        assert!(matches!(
            symmetric_log(&s),
            Err(Error::NonPositiveEigenvalue { .. })
        ));
    }

    #[test]
    fn exp_overflow_is_non_finite() {
        let s = SymmetricMatrix::from_diag(&[1000.0]).unwrap();
        assert!(matches!(spd_exp(&s), Err(Error::NonFinite(_))));
    }
}
