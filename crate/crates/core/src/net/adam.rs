use rand::seq::SliceRandom;

use super::loss::{evaluate, Gradients};
use super::model::{FcModel, SoftmaxHead};
use super::TrainConfig;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::rng::{self, Stream};

/// Number of minibatches per epoch; the last partial batch is kept.
pub fn minibatches_per_epoch(n: usize, batch_size: usize) -> usize {
    n.div_ceil(batch_size.max(1))
}

struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

fn parts_mut<'a>(fc: &'a mut FcModel, head: &'a mut SoftmaxHead) -> [&'a mut [f64]; 4] {
    [
        fc.weights.as_mut_slice(),
        fc.bias.as_mut_slice(),
        head.weights.as_mut_slice(),
        head.bias.as_mut_slice(),
    ]
}

fn grad_parts(g: &Gradients) -> [&[f64]; 4] {
    [
        g.fc.weights.as_slice(),
        g.fc.bias.as_slice(),
        g.head.weights.as_slice(),
        g.head.bias.as_slice(),
    ]
}

impl AdamState {
    fn step(&mut self, fc: &mut FcModel, head: &mut SoftmaxHead, g: &Gradients, cfg: &TrainConfig) {
        self.t += 1;
        let bc1 = 1.0 - cfg.beta1.powi(self.t);
        let bc2 = 1.0 - cfg.beta2.powi(self.t);
        let grads = grad_parts(g);
        let mut offset = 0;
        for (part, (params, grad)) in parts_mut(fc, head).into_iter().zip(grads).enumerate() {
            let len = params.len();
            let frozen = !cfg.use_bias && (part == 1 || part == 3);
            if !frozen {
                let m = &mut self.m[offset..offset + len];
                let v = &mut self.v[offset..offset + len];
                for i in 0..len {
                    m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * grad[i];
                    v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
                    let m_hat = m[i] / bc1;
                    let v_hat = v[i] / bc2;
                    params[i] -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.epsilon);
                }
            }
            offset += len;
        }
    }
}

pub(crate) struct AdamRun {
    pub fc: FcModel,
    pub head: SoftmaxHead,
    pub history: Vec<f64>,
    pub epochs: usize,
}

/// Minibatch ADAM from the given initialization. `eval` selects the rows
/// whose loss picks the returned iterate (the training rows when `None`).
pub(crate) fn run(
    mut fc: FcModel,
    mut head: SoftmaxHead,
    features: &Matrix,
    labels: &[usize],
    train_rows: &[usize],
    eval_rows: Option<&[usize]>,
    cfg: &TrainConfig,
) -> Result<AdamRun> {
    let n_params = fc.weights.as_slice().len() + fc.bias.len() + head.weights.as_slice().len() + head.bias.len();
    let mut state = AdamState {
        m: vec![0.0; n_params],
        v: vec![0.0; n_params],
        t: 0,
    };
    let eval_rows = eval_rows.unwrap_or(train_rows);
    let eval_loss = |fc: &FcModel, head: &SoftmaxHead| {
        evaluate(fc, head, features, labels, Some(eval_rows), cfg.weight_decay, false).0
    };

    let mut rng = rng::stream(cfg.seed, Stream::Shuffle);
    let mut order = train_rows.to_vec();
    let mut best_loss = eval_loss(&fc, &head);
    let mut best = (fc.clone(), head.clone());
    let mut history = vec![best_loss];
    let mut epochs = 0;

    for epoch in 0..cfg.max_epochs {
        order.shuffle(&mut rng);
        for (b, batch) in order.chunks(cfg.batch_size.max(1)).enumerate() {
            let (loss, grad) = evaluate(&fc, &head, features, labels, Some(batch), cfg.weight_decay, true);
            if !loss.is_finite() {
                return Err(Error::NonFiniteLoss { epoch, batch: b });
            }
            state.step(&mut fc, &mut head, &grad.expect("requested"), cfg);
        }
        epochs = epoch + 1;
        let loss = eval_loss(&fc, &head);
        if !loss.is_finite() || !fc.is_finite() {
            return Err(Error::NonFiniteLoss {
                epoch,
                batch: minibatches_per_epoch(order.len(), cfg.batch_size),
            });
        }
        history.push(loss);
        if loss < best_loss {
            best_loss = loss;
            best = (fc.clone(), head.clone());
        }
        if history.len() > cfg.patience {
            let old = history[history.len() - 1 - cfg.patience];
            let recent_best = history[history.len() - cfg.patience..]
                .iter()
                .copied()
                .fold(f64::INFINITY, f64::min);
            if old - recent_best <= cfg.rel_tol * old.abs().max(f64::MIN_POSITIVE) {
                break;
            }
        }
    }
    Ok(AdamRun {
        fc: best.0,
        head: best.1,
        history,
        epochs,
    })
}
