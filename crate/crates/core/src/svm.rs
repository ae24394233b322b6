//! One-vs-rest L2-regularized L1-hinge linear SVM, solved by dual coordinate
//! descent.
//!
//! Each binary subproblem minimizes
//! `½‖w‖² + C Σᵢ max(0, 1 − yᵢ wᵀx̃ᵢ)` where `x̃ = [x, 1]`, so the bias is
//! regularized along with the weights. The solver stops once the best primal
//! value seen is within `tol · (1 + |P|)` of the current dual value, which
//! certifies the returned weights.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, Matrix};
use crate::rng::{self, Stream};

pub const DEFAULT_TOL: f64 = 1e-4;
pub const DEFAULT_MAX_EPOCHS: usize = 10_000;
pub const DEFAULT_C_GRID: [f64; 5] = [0.01, 0.1, 1.0, 10.0, 100.0];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub num_classes: usize,
    /// `C × (h + 1)`; row `k` scores class `k`, the last column is the bias.
    pub weights: Matrix,
    pub c_reg: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SvmOptions {
    pub c_reg: f64,
    pub tol: f64,
    pub max_epochs: usize,
    pub seed: u64,
}

impl Default for SvmOptions {
    fn default() -> Self {
        SvmOptions {
            c_reg: 1.0,
            tol: DEFAULT_TOL,
            max_epochs: DEFAULT_MAX_EPOCHS,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SubproblemStats {
    pub class: usize,
    pub epochs: usize,
    pub primal: f64,
    pub dual: f64,
    pub converged: bool,
    /// Primal objective of the kept iterate after each epoch.
    pub primal_history: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct SvmFit {
    pub model: SvmModel,
    pub subproblems: Vec<SubproblemStats>,
}

/// Trains with default epoch cap and seed.
pub fn train_svm(
    features: &Matrix,
    labels: &[usize],
    num_classes: usize,
    c_reg: f64,
    tol: f64,
) -> Result<SvmModel> {
    let opts = SvmOptions {
        c_reg,
        tol,
        ..SvmOptions::default()
    };
    train_svm_with(features, labels, num_classes, &opts).map(|f| f.model)
}

pub fn train_svm_with(
    features: &Matrix,
    labels: &[usize],
    num_classes: usize,
    opts: &SvmOptions,
) -> Result<SvmFit> {
    if labels.len() != features.rows() {
        return Err(Error::LengthMismatch {
            predictions: features.rows(),
            labels: labels.len(),
        });
    }
    if !(opts.c_reg > 0.0 && opts.c_reg.is_finite()) {
        return Err(Error::Config(format!("C_reg must be positive, got {}", opts.c_reg)));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::Config(format!("tol must be positive, got {}", opts.tol)));
    }
    if let Some(&label) = labels.iter().find(|&&l| l >= num_classes) {
        return Err(Error::BadLabel { label, num_classes });
    }
    let present: BTreeSet<usize> = labels.iter().copied().collect();
    if present.len() < 2 || num_classes < 2 {
        return Err(Error::SingleClass);
    }
    if !features.is_finite() {
        return Err(Error::NonFinite("svm features"));
    }

    let h = features.cols();
    let sq_norms: Vec<f64> = features.row_iter().map(|r| dot(r, r) + 1.0).collect();
    let results: Vec<(Vec<f64>, SubproblemStats)> = (0..num_classes)
        .into_par_iter()
        .map(|k| {
            let y: Vec<f64> = labels.iter().map(|&l| if l == k { 1.0 } else { -1.0 }).collect();
            solve_binary(features, &y, &sq_norms, k, opts)
        })
        .collect();

    let mut weights = Matrix::zeros(num_classes, h + 1);
    let mut subproblems = Vec::with_capacity(num_classes);
    for (k, (w, stats)) in results.into_iter().enumerate() {
        if !stats.converged {
            log::warn!(
                "svm class {k}: no convergence after {} epochs (gap {:.3e})",
                stats.epochs,
                stats.primal - stats.dual
            );
        }
        weights.row_mut(k).copy_from_slice(&w);
        subproblems.push(stats);
    }
    Ok(SvmFit {
        model: SvmModel {
            num_classes,
            weights,
            c_reg: opts.c_reg,
        },
        subproblems,
    })
}

#[inline]
fn margin(w: &[f64], x: &[f64]) -> f64 {
    let h = x.len();
    dot(&w[..h], x) + w[h]
}

/// Primal objective `½‖w‖² + C Σ max(0, 1 − yᵢ wᵀx̃ᵢ)` with `w` bias-augmented.
pub fn primal_objective(w: &[f64], features: &Matrix, y: &[f64], c_reg: f64) -> f64 {
    let hinge: f64 = features
        .row_iter()
        .zip(y)
        .map(|(x, &yi)| (1.0 - yi * margin(w, x)).max(0.0))
        .sum();
    0.5 * dot(w, w) + c_reg * hinge
}

fn solve_binary(
    features: &Matrix,
    y: &[f64],
    sq_norms: &[f64],
    class: usize,
    opts: &SvmOptions,
) -> (Vec<f64>, SubproblemStats) {
    let n = features.rows();
    let h = features.cols();
    let c = opts.c_reg;
    let mut alpha = vec![0.0; n];
    let mut w = vec![0.0; h + 1];
    let mut alpha_sum = 0.0;

    let mut best_w = w.clone();
    let mut best_primal = primal_objective(&w, features, y, c);
    let mut dual = 0.0;
    let mut history = Vec::new();
    let mut converged = false;
    let mut epochs = 0;

    let mut rng = rng::stream(opts.seed.wrapping_add(class as u64), Stream::Svm);
    let mut order: Vec<usize> = (0..n).collect();

    for epoch in 0..opts.max_epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            let x = features.row(i);
            let g = y[i] * margin(&w, x) - 1.0;
            let pg = if alpha[i] == 0.0 {
                g.min(0.0)
            } else if alpha[i] == c {
                g.max(0.0)
            } else {
                g
            };
            if pg != 0.0 {
                let old = alpha[i];
                alpha[i] = (old - g / sq_norms[i]).clamp(0.0, c);
                let delta = (alpha[i] - old) * y[i];
                if delta != 0.0 {
                    axpy(delta, x, &mut w[..h]);
                    w[h] += delta;
                    alpha_sum += alpha[i] - old;
                }
            }
        }
        epochs = epoch + 1;
        let primal = primal_objective(&w, features, y, c);
        if primal < best_primal {
            best_primal = primal;
            best_w.copy_from_slice(&w);
        }
        history.push(best_primal);
        dual = alpha_sum - 0.5 * dot(&w, &w);
        if best_primal - dual <= opts.tol * (1.0 + best_primal.abs()) {
            converged = true;
            break;
        }
    }
    let stats = SubproblemStats {
        class,
        epochs,
        primal: best_primal,
        dual,
        converged,
        primal_history: history,
    };
    (best_w, stats)
}

/// Raw scores `wₖᵀx̃`, `N × C`.
pub fn decision_values(model: &SvmModel, features: &Matrix) -> Result<Matrix> {
    let h = model.weights.cols() - 1;
    if features.cols() != h {
        return Err(Error::DimensionMismatch {
            expected: h,
            actual: features.cols(),
        });
    }
    let mut out = Matrix::zeros(features.rows(), model.num_classes);
    for (i, x) in features.row_iter().enumerate() {
        for k in 0..model.num_classes {
            out[(i, k)] = margin(model.weights.row(k), x);
        }
    }
    Ok(out)
}

/// Row-wise argmax; ties go to the lowest class id.
pub fn argmax_rows(scores: &Matrix) -> Vec<usize> {
    scores
        .row_iter()
        .map(|row| {
            let mut best = 0;
            for (k, &s) in row.iter().enumerate().skip(1) {
                if s > row[best] {
                    best = k;
                }
            }
            best
        })
        .collect()
}

pub fn predict(model: &SvmModel, features: &Matrix) -> Result<Vec<usize>> {
    Ok(argmax_rows(&decision_values(model, features)?))
}
