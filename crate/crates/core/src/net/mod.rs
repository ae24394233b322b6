//! The trainable feature layer: FC + sigmoid, pretrained under a temporary
//! softmax head with cross-entropy, then frozen.

mod adam;
pub mod cg;
mod loss;
mod model;

use serde::{Deserialize, Serialize};

pub use adam::minibatches_per_epoch;
pub use loss::{pretrain_loss, pretrain_loss_and_grad, Gradients};
pub use model::{extract_features, fc_forward, FcModel, SoftmaxHead, Standardizer};

use crate::data::stratified;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::rng::{self, derive_seed, Stream};
use cg::{CgOptions, CgStop, LineSearch, Objective};
use loss::{evaluate, validate_batch, Layout};

/// FC sizes searched by default.
pub const DEFAULT_FC_GRID: [usize; 7] = [8, 16, 36, 64, 128, 256, 512];

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OptimizerKind {
    #[default]
    Cg,
    Adam,
}

/// Pretraining hyperparameters. ADAM fields are ignored by CG and vice versa.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub optimizer: OptimizerKind,
    /// ADAM epochs.
    pub max_epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub cg_max_iters: usize,
    /// Defaults to the parameter count.
    pub cg_restart_period: Option<usize>,
    pub seed: u64,
    pub weight_decay: f64,
    pub use_bias: bool,
    /// Stratified fraction of the training rows held out to pick the best
    /// ADAM iterate.
    pub holdout_fraction: Option<f64>,
    /// Stop when the loss improves by less than this (relative) over
    /// `patience` evaluations.
    pub rel_tol: f64,
    pub patience: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            optimizer: OptimizerKind::Cg,
            max_epochs: 100,
            batch_size: 1024,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            cg_max_iters: 200,
            cg_restart_period: None,
            seed: 0,
            weight_decay: 1e-4,
            use_bias: true,
            holdout_fraction: None,
            rel_tol: 1e-6,
            patience: 5,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("batch_size", self.batch_size as f64),
            ("learning_rate", self.learning_rate),
            ("epsilon", self.epsilon),
            ("patience", self.patience as f64),
        ];
        for (name, v) in positive {
            if !(v > 0.0) {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        for (name, b) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(0.0..1.0).contains(&b) {
                return Err(Error::Config(format!("{name} must lie in [0, 1)")));
            }
        }
        if self.weight_decay < 0.0 || self.rel_tol < 0.0 {
            return Err(Error::Config("weight_decay and rel_tol must be non-negative".into()));
        }
        if let Some(f) = self.holdout_fraction {
            if !(f > 0.0 && f < 1.0) {
                return Err(Error::Config("holdout_fraction must lie in (0, 1)".into()));
            }
        }
        if self.cg_restart_period == Some(0) {
            return Err(Error::Config("cg_restart_period must be positive".into()));
        }
        Ok(())
    }
}

/// Result of pretraining. The head is kept only for inspection.
#[derive(Clone, Debug)]
pub struct Pretrained {
    pub model: FcModel,
    pub head: SoftmaxHead,
    /// Loss at initialization and after every iteration (CG) or epoch (ADAM).
    pub loss_history: Vec<f64>,
    pub iterations: usize,
    /// Set when training stopped early on a recoverable failure.
    pub warning: Option<String>,
}

fn initialize(input: usize, hidden: usize, classes: usize, cfg: &TrainConfig) -> (FcModel, SoftmaxHead) {
    let mut r = rng::stream(cfg.seed, Stream::Init);
    let fc = FcModel::random(input, hidden, &mut r);
    let head = SoftmaxHead::random(hidden, classes, &mut r);
    (fc, head)
}

fn check_inputs(features: &Matrix, labels: &[usize], num_classes: usize, hidden_dim: usize) -> Result<()> {
    if hidden_dim == 0 {
        return Err(Error::Config("hidden_dim must be positive".into()));
    }
    if num_classes < 2 {
        return Err(Error::SingleClass);
    }
    let fc = FcModel::zeros(features.cols(), hidden_dim);
    let head = SoftmaxHead::zeros(hidden_dim, num_classes);
    validate_batch(&fc, &head, features, labels)
}

struct FullBatch<'a> {
    layout: Layout,
    features: &'a Matrix,
    labels: &'a [usize],
    weight_decay: f64,
}

impl FullBatch<'_> {
    fn eval(&self, x: &[f64], grad: Option<&mut [f64]>) -> f64 {
        let (fc, head) = self.layout.unflatten(x);
        let want = grad.is_some();
        let (loss, g) = evaluate(&fc, &head, self.features, self.labels, None, self.weight_decay, want);
        if let (Some(out), Some(g)) = (grad, g) {
            out.copy_from_slice(&self.layout.flatten(&g.fc, &g.head));
        }
        loss
    }
}

impl Objective for FullBatch<'_> {
    fn value(&mut self, x: &[f64]) -> f64 {
        self.eval(x, None)
    }

    fn value_and_gradient(&mut self, x: &[f64], grad: &mut [f64]) -> f64 {
        self.eval(x, Some(grad))
    }
}

/// Full-batch Polak–Ribière+ CG with Armijo backtracking.
///
/// The recorded loss never increases. If the line search fails the best
/// iterate so far is returned with a warning.
pub fn train_cg(
    features: &Matrix,
    labels: &[usize],
    num_classes: usize,
    hidden_dim: usize,
    cfg: &TrainConfig,
) -> Result<Pretrained> {
    cfg.validate()?;
    check_inputs(features, labels, num_classes, hidden_dim)?;
    let (fc, head) = initialize(features.cols(), hidden_dim, num_classes, cfg);
    let layout = Layout::of(&fc, &head);
    let x0 = layout.flatten(&fc, &head);
    let mut objective = FullBatch {
        layout,
        features,
        labels,
        weight_decay: cfg.weight_decay,
    };
    let opts = CgOptions {
        max_iters: cfg.cg_max_iters,
        restart_period: cfg.cg_restart_period,
        line_search: LineSearch::default(),
        rel_tol: cfg.rel_tol,
        patience: cfg.patience,
        grad_tol: 1e-10,
    };
    let [b_range, c_range] = layout.bias_ranges();
    let freeze_bias = |g: &mut [f64]| {
        g[b_range.clone()].iter_mut().for_each(|x| *x = 0.0);
        g[c_range.clone()].iter_mut().for_each(|x| *x = 0.0);
    };
    let mask: cg::GradientMask<'_> = if cfg.use_bias { None } else { Some(&freeze_bias) };
    let out = cg::minimize(&mut objective, x0, &opts, mask);
    let warning = match out.stop {
        CgStop::LineSearchFailure { iteration } => {
            let e = Error::LineSearchFailure { iteration };
            log::warn!("{e}; keeping the best iterate");
            Some(e.to_string())
        }
        _ => None,
    };
    let (model, head) = layout.unflatten(&out.x);
    Ok(Pretrained {
        model,
        head,
        loss_history: out.history,
        iterations: out.iterations,
        warning,
    })
}

/// Minibatch ADAM with per-epoch reshuffling; returns the iterate with the
/// lowest holdout (or training) loss.
pub fn train_adam(
    features: &Matrix,
    labels: &[usize],
    num_classes: usize,
    hidden_dim: usize,
    cfg: &TrainConfig,
) -> Result<Pretrained> {
    cfg.validate()?;
    check_inputs(features, labels, num_classes, hidden_dim)?;
    let (fc, head) = initialize(features.cols(), hidden_dim, num_classes, cfg);
    let (train_rows, holdout_rows) = match cfg.holdout_fraction {
        Some(f) => {
            let (train, hold) = stratified(labels, f, derive_seed(cfg.seed, Stream::Holdout));
            if train.is_empty() || hold.is_empty() {
                return Err(Error::EmptySplit("holdout"));
            }
            (train, Some(hold))
        }
        None => ((0..labels.len()).collect(), None),
    };
    let run = adam::run(fc, head, features, labels, &train_rows, holdout_rows.as_deref(), cfg)?;
    Ok(Pretrained {
        model: run.fc,
        head: run.head,
        loss_history: run.history,
        iterations: run.epochs,
        warning: None,
    })
}

/// Dispatches on `cfg.optimizer`.
pub fn pretrain(
    features: &Matrix,
    labels: &[usize],
    num_classes: usize,
    hidden_dim: usize,
    cfg: &TrainConfig,
) -> Result<Pretrained> {
    match cfg.optimizer {
        OptimizerKind::Cg => train_cg(features, labels, num_classes, hidden_dim, cfg),
        OptimizerKind::Adam => train_adam(features, labels, num_classes, hidden_dim, cfg),
    }
}
