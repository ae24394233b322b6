use super::model::{sigmoid, FcModel, SoftmaxHead};
use crate::error::{Error, Result};
use crate::linalg::{gemm, Matrix};

/// Rows per forward/backward block. Blocks are reduced in a fixed order so
/// results do not depend on how work is scheduled.
const CHUNK: usize = 256;

/// Gradients with the same shapes as the parameters they belong to.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub fc: FcModel,
    pub head: SoftmaxHead,
}

/// Flat parameter layout shared by the optimizers: `[W, b, V, c]`, row-major.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) struct Layout {
    pub input: usize,
    pub hidden: usize,
    pub classes: usize,
}

impl Layout {
    pub fn of(model: &FcModel, head: &SoftmaxHead) -> Self {
        Layout {
            input: model.input_dim(),
            hidden: model.hidden_dim(),
            classes: head.num_classes(),
        }
    }

    pub fn len(&self) -> usize {
        self.hidden * self.input + self.hidden + self.classes * self.hidden + self.classes
    }

    pub fn flatten(&self, fc: &FcModel, head: &SoftmaxHead) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len());
        out.extend_from_slice(fc.weights.as_slice());
        out.extend_from_slice(&fc.bias);
        out.extend_from_slice(head.weights.as_slice());
        out.extend_from_slice(&head.bias);
        out
    }

    pub fn unflatten(&self, x: &[f64]) -> (FcModel, SoftmaxHead) {
        assert_eq!(x.len(), self.len());
        let (w, rest) = x.split_at(self.hidden * self.input);
        let (b, rest) = rest.split_at(self.hidden);
        let (v, c) = rest.split_at(self.classes * self.hidden);
        (
            FcModel {
                weights: Matrix::from_vec(self.hidden, self.input, w.to_vec()).expect("layout"),
                bias: b.to_vec(),
            },
            SoftmaxHead {
                weights: Matrix::from_vec(self.classes, self.hidden, v.to_vec()).expect("layout"),
                bias: c.to_vec(),
            },
        )
    }

    /// Index ranges of the two bias blocks inside the flat vector.
    pub fn bias_ranges(&self) -> [std::ops::Range<usize>; 2] {
        let b0 = self.hidden * self.input;
        let c0 = b0 + self.hidden + self.classes * self.hidden;
        [b0..b0 + self.hidden, c0..c0 + self.classes]
    }
}

pub(crate) fn validate_batch(
    model: &FcModel,
    head: &SoftmaxHead,
    features: &Matrix,
    labels: &[usize],
) -> Result<()> {
    if features.cols() != model.input_dim() {
        return Err(Error::DimensionMismatch {
            expected: model.input_dim(),
            actual: features.cols(),
        });
    }
    if head.weights.cols() != model.hidden_dim() {
        return Err(Error::DimensionMismatch {
            expected: model.hidden_dim(),
            actual: head.weights.cols(),
        });
    }
    if labels.len() != features.rows() {
        return Err(Error::LengthMismatch {
            predictions: features.rows(),
            labels: labels.len(),
        });
    }
    if labels.is_empty() {
        return Err(Error::Empty);
    }
    let c = head.num_classes();
    if let Some(&label) = labels.iter().find(|&&l| l >= c) {
        return Err(Error::BadLabel {
            label,
            num_classes: c,
        });
    }
    Ok(())
}

/// Mean cross-entropy of `softmax(V σ(W v + b) + c)` plus
/// `weight_decay · (‖W‖² + ‖V‖²) / 2`, with exact gradients.
pub fn pretrain_loss_and_grad(
    model: &FcModel,
    head: &SoftmaxHead,
    features: &Matrix,
    labels: &[usize],
    weight_decay: f64,
) -> Result<(f64, Gradients)> {
    validate_batch(model, head, features, labels)?;
    let (loss, grad) = evaluate(model, head, features, labels, None, weight_decay, true);
    Ok((loss, grad.expect("requested")))
}

/// Loss without gradients.
pub fn pretrain_loss(
    model: &FcModel,
    head: &SoftmaxHead,
    features: &Matrix,
    labels: &[usize],
    weight_decay: f64,
) -> Result<f64> {
    validate_batch(model, head, features, labels)?;
    Ok(evaluate(model, head, features, labels, None, weight_decay, false).0)
}

/// Core evaluation over `rows` (all rows when `None`). Inputs are assumed valid.
pub(crate) fn evaluate(
    model: &FcModel,
    head: &SoftmaxHead,
    features: &Matrix,
    labels: &[usize],
    rows: Option<&[usize]>,
    weight_decay: f64,
    want_grad: bool,
) -> (f64, Option<Gradients>) {
    let n_total = rows.map_or(features.rows(), <[usize]>::len);
    let h = model.hidden_dim();
    let c = head.num_classes();
    let inv_n = 1.0 / n_total as f64;

    let mut grad = want_grad.then(|| Gradients {
        fc: FcModel::zeros(model.input_dim(), h),
        head: SoftmaxHead::zeros(h, c),
    });
    let mut loss_sum = 0.0;

    let all: Vec<usize>;
    let rows = match rows {
        Some(r) => r,
        None => {
            all = (0..features.rows()).collect();
            &all
        }
    };

    for block in rows.chunks(CHUNK) {
        let x = features.select_rows(block);
        let m = block.len();

        let mut act = Matrix::zeros(m, h);
        gemm(1.0, &x, false, &model.weights, true, 0.0, &mut act);
        for i in 0..m {
            for (a, b) in act.row_mut(i).iter_mut().zip(&model.bias) {
                *a = sigmoid(*a + b);
            }
        }

        let mut out = Matrix::zeros(m, c);
        gemm(1.0, &act, false, &head.weights, true, 0.0, &mut out);
        for (i, &row_idx) in block.iter().enumerate() {
            let y = labels[row_idx];
            let row = out.row_mut(i);
            for (o, b) in row.iter_mut().zip(&head.bias) {
                *o += b;
            }
            let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let shifted_y = row[y] - max;
            let mut sum = 0.0;
            for o in row.iter_mut() {
                *o = (*o - max).exp();
                sum += *o;
            }
            loss_sum += sum.ln() - shifted_y;
            // row now holds exp(o - max); turn it into (p - e_y) / N
            for o in row.iter_mut() {
                *o /= sum;
            }
            row[y] -= 1.0;
            row.iter_mut().for_each(|o| *o *= inv_n);
        }

        if let Some(g) = grad.as_mut() {
            let d_out = out;
            gemm(1.0, &d_out, true, &act, false, 1.0, &mut g.head.weights);
            for i in 0..m {
                for (gc, d) in g.head.bias.iter_mut().zip(d_out.row(i)) {
                    *gc += d;
                }
            }
            let mut d_act = Matrix::zeros(m, h);
            gemm(1.0, &d_out, false, &head.weights, false, 0.0, &mut d_act);
            for i in 0..m {
                for (d, a) in d_act.row_mut(i).iter_mut().zip(act.row(i)) {
                    *d *= a * (1.0 - a);
                }
                for (gb, d) in g.fc.bias.iter_mut().zip(d_act.row(i)) {
                    *gb += d;
                }
            }
            gemm(1.0, &d_act, true, &x, false, 1.0, &mut g.fc.weights);
        }
    }

    let mut loss = loss_sum * inv_n;
    if weight_decay != 0.0 {
        let sq = |m: &Matrix| m.as_slice().iter().map(|x| x * x).sum::<f64>();
        loss += 0.5 * weight_decay * (sq(&model.weights) + sq(&head.weights));
        if let Some(g) = grad.as_mut() {
            for (gw, w) in g.fc.weights.as_mut_slice().iter_mut().zip(model.weights.as_slice()) {
                *gw += weight_decay * w;
            }
            for (gv, v) in g.head.weights.as_mut_slice().iter_mut().zip(head.weights.as_slice()) {
                *gv += weight_decay * v;
            }
        }
    }
    (loss, grad)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_head_gives_log_c() {
        let mut rng = crate::rng::stream(1, crate::rng::Stream::Init);
        let fc = FcModel::random(4, 3, &mut rng);
        let head = SoftmaxHead::zeros(3, 2);
        let x = Matrix::from_rows(&[[1.0, 2.0, 0.0, -1.0], [0.0, 0.0, 5.0, 1.0]]).unwrap();
        let loss = pretrain_loss(&fc, &head, &x, &[0, 1], 0.0).unwrap();
        assert!((loss - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn confident_correct_prediction_has_near_zero_loss() {
        let fc = FcModel::zeros(1, 1);
        let mut head = SoftmaxHead::zeros(1, 2);
        head.bias = vec![60.0, -60.0];
        let x = Matrix::from_rows(&[[0.0]]).unwrap();
        let loss = pretrain_loss(&fc, &head, &x, &[0], 0.0).unwrap();
        assert!(loss < 1e-50);
    }

    #[test]
    fn rejects_bad_labels_and_empty_batches() {
        let fc = FcModel::zeros(1, 1);
        let head = SoftmaxHead::zeros(1, 2);
        let x = Matrix::from_rows(&[[0.0]]).unwrap();
        assert!(matches!(
            pretrain_loss(&fc, &head, &x, &[2], 0.0),
            Err(Error::BadLabel { .. })
        ));
        assert!(matches!(
            pretrain_loss(&fc, &head, &Matrix::zeros(0, 1), &[], 0.0),
            Err(Error::Empty)
        ));
    }

    #[test]
    fn layout_roundtrip() {
        let mut rng = crate::rng::stream(2, crate::rng::Stream::Init);
        let fc = FcModel::random(3, 2, &mut rng);
        let head = SoftmaxHead::random(2, 4, &mut rng);
        let layout = Layout::of(&fc, &head);
        let flat = layout.flatten(&fc, &head);
        assert_eq!(flat.len(), layout.len());
        assert_eq!(layout.unflatten(&flat), (fc, head));
    }
}
