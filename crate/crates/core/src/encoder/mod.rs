//! Sequence → covariance → shifted matrix log → tangent vector.
//!
//! Both stages are parameter-free; the only knobs are the eigenvalue shift,
//! the off-diagonal scale and the centering convention.

mod cache;

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use cache::EncodingCache;

use crate::data::SkeletonSequence;
use crate::error::{Error, Result};
use crate::linalg::{gemm, half_vec, sym_eig, Matrix, SymmetricMatrix, TangentVector, ISOMETRIC_SCALE};

pub const DEFAULT_EIGENVALUE_SHIFT: f64 = 1e-4;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Centering {
    /// `P (I − 11ᵀ/T) Pᵀ / (T − 1)`: the sample covariance of the frames.
    #[default]
    Standard,
    /// `P (I/T − 11ᵀ) Pᵀ / (T − 1)`, the centering factor taken literally.
    /// Not positive semidefinite in general.
    LiteralFactor,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EncoderConfig {
    pub eigenvalue_shift: f64,
    pub offdiag_scale: f64,
    pub centering: Centering,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        EncoderConfig {
            eigenvalue_shift: DEFAULT_EIGENVALUE_SHIFT,
            offdiag_scale: ISOMETRIC_SCALE,
            centering: Centering::Standard,
        }
    }
}

impl EncoderConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eigenvalue_shift > 0.0 && self.eigenvalue_shift.is_finite()) {
            return Err(Error::Config(format!(
                "eigenvalue_shift must be positive, got {}",
                self.eigenvalue_shift
            )));
        }
        if !(self.offdiag_scale.is_finite() && self.offdiag_scale != 0.0) {
            return Err(Error::Config(format!(
                "offdiag_scale must be finite and non-zero, got {}",
                self.offdiag_scale
            )));
        }
        Ok(())
    }

    pub(crate) fn fingerprint_bytes(&self) -> Vec<u8> {
        let mut b = Vec::with_capacity(17);
        b.extend_from_slice(&self.eigenvalue_shift.to_le_bytes());
        b.extend_from_slice(&self.offdiag_scale.to_le_bytes());
        b.push(match self.centering {
            Centering::Standard => 0,
            Centering::LiteralFactor => 1,
        });
        b
    }
}

/// Covariance of the sequence's frames, `3J × 3J`.
pub fn covariance(seq: &SkeletonSequence, centering: Centering) -> Result<SymmetricMatrix> {
    let t = seq.frames();
    if t < 2 {
        return Err(Error::TooShort(t));
    }
    let p = seq.coords();
    let d = p.rows();
    let tf = t as f64;
    let mut out = Matrix::zeros(d, d);
    match centering {
        Centering::Standard => {
            let mut centered = p.clone();
            for i in 0..d {
                let row = centered.row_mut(i);
                let mean = row.iter().sum::<f64>() / tf;
                row.iter_mut().for_each(|x| *x -= mean);
            }
            gemm(1.0 / (tf - 1.0), &centered, false, &centered, true, 0.0, &mut out);
        }
        Centering::LiteralFactor => {
            gemm(1.0 / (tf * (tf - 1.0)), p, false, p, true, 0.0, &mut out);
            let sums: Vec<f64> = (0..d).map(|i| p.row(i).iter().sum()).collect();
            for i in 0..d {
                for j in 0..d {
                    out[(i, j)] -= sums[i] * sums[j] / (tf - 1.0);
                }
            }
        }
    }
    SymmetricMatrix::from_lower(&out)
}

/// Eigendecompose, shift every eigenvalue by `shift`, take the log.
pub fn regularize_and_log(s: &SymmetricMatrix, shift: f64) -> Result<SymmetricMatrix> {
    if !(shift > 0.0) {
        return Err(Error::Config(format!("eigenvalue shift must be positive, got {shift}")));
    }
    let eig = sym_eig(s)?;
    if let Some(&value) = eig.eigenvalues().iter().find(|&&l| l + shift <= 0.0) {
        return Err(Error::StillNonPositive { value, shift });
    }
    eig.map_eigenvalues(|l| (l + shift).ln())
}

/// Full encoding of one sequence. Root-joint subtraction is the caller's job.
pub fn encode(seq: &SkeletonSequence, cfg: &EncoderConfig) -> Result<TangentVector> {
    let cov = covariance(seq, cfg.centering)?;
    let log = regularize_and_log(&cov, cfg.eigenvalue_shift)?;
    half_vec(&log, cfg.offdiag_scale)
}

/// Encodes many sequences in parallel, consulting `cache` when given.
/// Output order follows input order.
pub fn encode_all(
    seqs: &[SkeletonSequence],
    cfg: &EncoderConfig,
    cache: Option<&EncodingCache>,
) -> Result<Vec<TangentVector>> {
    cfg.validate()?;
    seqs.par_iter()
        .map(|s| match cache {
            Some(c) => c.get_or_encode(s, cfg),
            None => encode(s, cfg),
        })
        .collect()
}

/// Stacks tangent vectors into an `N × n` matrix.
pub fn to_feature_matrix(vectors: &[TangentVector]) -> Result<Matrix> {
    let rows: Vec<&[f64]> = vectors.iter().map(TangentVector::values).collect();
    Matrix::from_rows(&rows)
}

/// One CSV row per sequence: label first, then the encoded values.
pub fn write_features_csv(path: &Path, labels: &[String], vectors: &[TangentVector]) -> Result<()> {
    if labels.len() != vectors.len() {
        return Err(Error::LengthMismatch {
            predictions: vectors.len(),
            labels: labels.len(),
        });
    }
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for (label, v) in labels.iter().zip(vectors) {
        let mut line = csv_field(label);
        for x in v.values() {
            line.push(',');
            line.push_str(&x.to_string());
        }
        line.push('\n');
        w.write_all(line.as_bytes()).map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub(crate) fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(rows: &[&[f64]]) -> SkeletonSequence {
        let m = Matrix::from_rows(rows).unwrap();
        SkeletonSequence::new("s", rows.len() / 3, m).unwrap()
    }

    #[test]
    fn identical_columns_have_zero_covariance() {
        let s = seq(&[&[1.0, 1.0, 1.0], &[2.0, 2.0, 2.0], &[-3.0, -3.0, -3.0]]);
        assert_eq!(covariance(&s, Centering::Standard).unwrap(), SymmetricMatrix::zeros(3));
    }

    #[test]
    fn sample_variance_uses_t_minus_one() {
        // mean 2.5, squared deviations 2.25+0.25+0.25+2.25 = 5, / 3 = 5/3
        let s = seq(&[&[1.0, 2.0, 3.0, 4.0], &[0.0; 4], &[0.0; 4]]);
        let c = covariance(&s, Centering::Standard).unwrap();
        assert!((c.get(0, 0) - 5.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn literal_factor_matches_formula() {
        let s = seq(&[&[1.0, 2.0, 4.0], &[0.5, -1.0, 0.0], &[3.0, 3.0, 1.0]]);
        let p = s.coords();
        let t = 3.0;
        // (1/(T-1)) P ((1/T) I − 1) Pᵀ evaluated with an explicit T×T factor
        let mut factor = Matrix::zeros(3, 3);
        for i in 0..3 {
            for j in 0..3 {
                factor[(i, j)] = if i == j { 1.0 / t } else { 0.0 } - 1.0;
            }
        }
        let mut expect = p.matmul(&factor).unwrap().matmul(&p.transpose()).unwrap();
        expect.scale(1.0 / (t - 1.0));
        let got = covariance(&s, Centering::LiteralFactor).unwrap().to_matrix();
        assert!(got.sub(&expect).frobenius_norm() < 1e-12);
    }

    #[test]
    fn zero_matrix_log_is_log_shift() {
        let l = regularize_and_log(&SymmetricMatrix::zeros(3), 1e-4).unwrap();
        for i in 0..3 {
            assert!((l.get(i, i) - (-9.2103)).abs() < 1e-4);
            assert!((l.get(i, i) - 1e-4f64.ln()).abs() < 1e-15);
        }
        assert_eq!(l.get(1, 0), 0.0);
    }

    #[test]
    fn identity_log_is_log_one_plus_shift() {
        let l = regularize_and_log(&SymmetricMatrix::identity(2), 1e-4).unwrap();
        assert!((l.get(0, 0) - 1.0001f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn rank_one_is_rescued_by_shift() {
        let v = [1.0, -2.0, 0.5];
        let mut m = Matrix::zeros(3, 3);
        for i in 0..3 {
            for j in 0..3 {
                m[(i, j)] = v[i] * v[j];
            }
        }
        let l = regularize_and_log(&SymmetricMatrix::from_lower(&m).unwrap(), 1e-4).unwrap();
        assert!(l.packed().iter().all(|x| x.is_finite()));
    }

    #[test]
    fn too_negative_is_still_non_positive() {
        let s = SymmetricMatrix::from_diag(&[1.0, -1.0]).unwrap();
        assert!(matches!(
            regularize_and_log(&s, 1e-4),
            Err(Error::StillNonPositive { .. })
        ));
    }

    #[test]
    fn encoded_length_for_nineteen_joints() {
        let mut coords = Matrix::zeros(57, 5);
        for i in 0..57 {
            for t in 0..5 {
                coords[(i, t)] = ((i * 7 + t * 3) % 11) as f64;
            }
        }
        let s = SkeletonSequence::new("s", 19, coords).unwrap();
        assert_eq!(encode(&s, &EncoderConfig::default()).unwrap().len(), 1653);
    }

    #[test]
    fn config_validation() {
        let mut c = EncoderConfig::default();
        assert!(c.validate().is_ok());
        c.eigenvalue_shift = 0.0;
        assert!(c.validate().is_err());
    }
}
