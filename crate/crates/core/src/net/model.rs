use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{gemm, Matrix};

/// FC layer with sigmoid activation: `σ(W v + b)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FcModel {
    pub weights: Matrix,
    pub bias: Vec<f64>,
}

/// Softmax classifier stacked on the FC layer during pretraining only.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SoftmaxHead {
    pub weights: Matrix,
    pub bias: Vec<f64>,
}

/// Kept strictly inside (0, 1): saturated values are pulled to the nearest
/// representable interior point.
#[inline]
pub(crate) fn sigmoid(z: f64) -> f64 {
    (1.0 / (1.0 + (-z).exp())).clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)
}

impl FcModel {
    pub fn zeros(input_dim: usize, hidden_dim: usize) -> Self {
        FcModel {
            weights: Matrix::zeros(hidden_dim, input_dim),
            bias: vec![0.0; hidden_dim],
        }
    }

    /// Uniform in `[−1/√n, 1/√n]`, zero bias.
    pub fn random(input_dim: usize, hidden_dim: usize, rng: &mut impl Rng) -> Self {
        let s = 1.0 / (input_dim.max(1) as f64).sqrt();
        let data = (0..input_dim * hidden_dim).map(|_| rng.gen_range(-s..=s)).collect();
        FcModel {
            weights: Matrix::from_vec(hidden_dim, input_dim, data).expect("sized above"),
            bias: vec![0.0; hidden_dim],
        }
    }

    pub fn input_dim(&self) -> usize {
        self.weights.cols()
    }

    pub fn hidden_dim(&self) -> usize {
        self.weights.rows()
    }

    pub fn is_finite(&self) -> bool {
        self.weights.is_finite() && self.bias.iter().all(|x| x.is_finite())
    }
}

impl SoftmaxHead {
    pub fn random(hidden_dim: usize, num_classes: usize, rng: &mut impl Rng) -> Self {
        let s = 1.0 / (hidden_dim.max(1) as f64).sqrt();
        let data = (0..hidden_dim * num_classes).map(|_| rng.gen_range(-s..=s)).collect();
        SoftmaxHead {
            weights: Matrix::from_vec(num_classes, hidden_dim, data).expect("sized above"),
            bias: vec![0.0; num_classes],
        }
    }

    pub fn zeros(hidden_dim: usize, num_classes: usize) -> Self {
        SoftmaxHead {
            weights: Matrix::zeros(num_classes, hidden_dim),
            bias: vec![0.0; num_classes],
        }
    }

    pub fn num_classes(&self) -> usize {
        self.weights.rows()
    }

    /// Class probabilities for one hidden activation vector.
    pub fn probabilities(&self, hidden: &[f64]) -> Vec<f64> {
        let logits: Vec<f64> = (0..self.num_classes())
            .map(|k| crate::linalg::dot(self.weights.row(k), hidden) + self.bias[k])
            .collect();
        softmax(&logits)
    }
}

pub(crate) fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&l| (l - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// `σ(W v + b)`; every component lies in (0, 1) for finite pre-activations.
pub fn fc_forward(model: &FcModel, v: &[f64]) -> Result<Vec<f64>> {
    if v.len() != model.input_dim() {
        return Err(Error::DimensionMismatch {
            expected: model.input_dim(),
            actual: v.len(),
        });
    }
    Ok((0..model.hidden_dim())
        .map(|j| sigmoid(crate::linalg::dot(model.weights.row(j), v) + model.bias[j]))
        .collect())
}

/// Hidden activations for every row of `features` (`N × n` → `N × h`).
pub fn extract_features(model: &FcModel, features: &Matrix) -> Result<Matrix> {
    if features.cols() != model.input_dim() {
        return Err(Error::DimensionMismatch {
            expected: model.input_dim(),
            actual: features.cols(),
        });
    }
    Ok(hidden_activations(model, features))
}

pub(crate) fn hidden_activations(model: &FcModel, x: &Matrix) -> Matrix {
    let h = model.hidden_dim();
    let mut z = Matrix::zeros(x.rows(), h);
    gemm(1.0, x, false, &model.weights, true, 0.0, &mut z);
    for i in 0..x.rows() {
        for (zj, bj) in z.row_mut(i).iter_mut().zip(&model.bias) {
            *zj = sigmoid(*zj + bj);
        }
    }
    z
}

/// Per-dimension z-scoring with statistics from the training features.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    /// Dimensions with zero spread get scale 1.
    pub fn fit(features: &Matrix) -> Result<Self> {
        let n = features.rows();
        if n == 0 {
            return Err(Error::Empty);
        }
        let d = features.cols();
        let mut mean = vec![0.0; d];
        for row in features.row_iter() {
            for (m, x) in mean.iter_mut().zip(row) {
                *m += x;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n as f64);
        let mut var = vec![0.0; d];
        for row in features.row_iter() {
            for ((v, x), m) in var.iter_mut().zip(row).zip(&mean) {
                *v += (x - m) * (x - m);
            }
        }
        let scale = var
            .into_iter()
            .map(|v| {
                let sd = (v / n as f64).sqrt();
                if sd > 1e-12 {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Ok(Standardizer { mean, scale })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn transform(&self, features: &Matrix) -> Result<Matrix> {
        let mut out = features.clone();
        self.transform_in_place(&mut out)?;
        Ok(out)
    }

    pub fn transform_in_place(&self, features: &mut Matrix) -> Result<()> {
        if features.cols() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: features.cols(),
            });
        }
        for i in 0..features.rows() {
            for ((x, m), s) in features.row_mut(i).iter_mut().zip(&self.mean).zip(&self.scale) {
                *x = (*x - m) / s;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_weights_give_one_half() {
        let m = FcModel::zeros(4, 3);
        assert_eq!(fc_forward(&m, &[1.0, -2.0, 3.0, 0.5]).unwrap(), vec![0.5; 3]);
    }

    #[test]
    fn bias_only_sigmoid_values() {
        let mut m = FcModel::zeros(2, 2);
        m.bias = vec![10.0, -10.0];
        let out = fc_forward(&m, &[0.3, 0.7]).unwrap();
        let s10 = 1.0 / (1.0 + (-10f64).exp());
        assert!((out[0] - 0.99995).abs() < 1e-5 && (out[0] - s10).abs() < 1e-15);
        assert!((out[1] - 0.00005).abs() < 1e-5 && (out[1] - (1.0 - s10)).abs() < 1e-15);
    }

    #[test]
    fn outputs_stay_in_open_interval() {
        let mut rng = crate::rng::stream(3, crate::rng::Stream::Init);
        let m = FcModel::random(5, 7, &mut rng);
        let out = fc_forward(&m, &[3.0, -1.0, 0.0, 2.0, 8.0]).unwrap();
        assert!(out.iter().all(|&a| a > 0.0 && a < 1.0));
    }

    #[test]
    fn dimension_mismatch() {
        let m = FcModel::zeros(4, 3);
        assert!(matches!(
            fc_forward(&m, &[1.0]),
            Err(Error::DimensionMismatch { expected: 4, actual: 1 })
        ));
        assert!(extract_features(&m, &Matrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn extract_features_rows_match_forward() {
        let mut rng = crate::rng::stream(4, crate::rng::Stream::Init);
        let m = FcModel::random(3, 4, &mut rng);
        let x = Matrix::from_rows(&[[1.0, 2.0, 3.0], [1.0, 2.0, 3.0], [-1.0, 0.0, 0.5]]).unwrap();
        let f = extract_features(&m, &x).unwrap();
        assert_eq!((f.rows(), f.cols()), (3, 4));
        assert_eq!(f.row(0), f.row(1));
        let direct = fc_forward(&m, x.row(2)).unwrap();
        for (a, b) in f.row(2).iter().zip(&direct) {
            assert!((a - b).abs() < 1e-14);
        }
        assert!(f.as_slice().iter().all(|&a| a > 0.0 && a < 1.0));
    }

    #[test]
    fn softmax_sums_to_one() {
        let p = softmax(&[1000.0, 999.0, -5.0]);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn standardizer_centers_and_scales() {
        let x = Matrix::from_rows(&[[1.0, 5.0], [3.0, 5.0]]).unwrap();
        let s = Standardizer::fit(&x).unwrap();
        let t = s.transform(&x).unwrap();
        assert_eq!(t.as_slice(), &[-1.0, 0.0, 1.0, 0.0]);
    }
}
