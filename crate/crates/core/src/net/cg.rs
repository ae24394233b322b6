//! Nonlinear conjugate gradient (Polak–Ribière+).

use crate::linalg::{axpy, dot};

/// Zeroes gradient components that must stay fixed.
pub type GradientMask<'a> = Option<&'a dyn Fn(&mut [f64])>;

/// A differentiable function of a flat parameter vector.
pub trait Objective {
    fn value(&mut self, x: &[f64]) -> f64;
    /// Writes the gradient into `grad` and returns the value.
    fn value_and_gradient(&mut self, x: &[f64], grad: &mut [f64]) -> f64;
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LineSearch {
    /// Backtracking until `f(x + αd) ≤ f(x) + c₁ α ∇fᵀd`.
    Armijo { c1: f64, shrink: f64, max_steps: usize },
    /// One secant probe of the directional derivative; exact on quadratics.
    /// Falls back to Armijo when the probe does not decrease `f`.
    Secant,
}

impl Default for LineSearch {
    fn default() -> Self {
        LineSearch::Armijo {
            c1: 1e-4,
            shrink: 0.5,
            max_steps: 60,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CgOptions {
    pub max_iters: usize,
    /// `None` restarts every `x.len()` iterations.
    pub restart_period: Option<usize>,
    pub line_search: LineSearch,
    /// Stop when the loss improved by less than `rel_tol` (relative) over the
    /// last `patience` iterations.
    pub rel_tol: f64,
    pub patience: usize,
    /// Stop when `‖∇f‖∞ ≤ grad_tol`.
    pub grad_tol: f64,
}

impl Default for CgOptions {
    fn default() -> Self {
        CgOptions {
            max_iters: 200,
            restart_period: None,
            line_search: LineSearch::default(),
            rel_tol: 1e-6,
            patience: 5,
            grad_tol: 1e-10,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum CgStop {
    MaxIters,
    Stalled,
    GradientTolerance,
    /// No acceptable step even along steepest descent.
    LineSearchFailure { iteration: usize },
}

#[derive(Clone, Debug)]
pub struct CgOutcome {
    pub x: Vec<f64>,
    /// Loss at the start and after every accepted step; non-increasing.
    pub history: Vec<f64>,
    pub iterations: usize,
    pub stop: CgStop,
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Minimizes `f` from `x0`. `mask`, when given, zeroes gradient components
/// that must stay fixed.
pub fn minimize(
    f: &mut dyn Objective,
    x0: Vec<f64>,
    opts: &CgOptions,
    mask: GradientMask<'_>,
) -> CgOutcome {
    let n = x0.len();
    let restart = opts.restart_period.unwrap_or(n).max(1);
    let mut x = x0;
    let mut g = vec![0.0; n];
    let mut fx = f.value_and_gradient(&x, &mut g);
    if let Some(m) = mask {
        m(&mut g);
    }
    let mut history = vec![fx];
    let mut d: Vec<f64> = g.iter().map(|v| -v).collect();
    let mut prev_step: Option<(f64, f64)> = None; // (α, ∇fᵀd)
    let mut x_trial = vec![0.0; n];
    let mut g_trial = vec![0.0; n];

    let mut stop = CgStop::MaxIters;
    let mut iterations = 0;
    for k in 0..opts.max_iters {
        if inf_norm(&g) <= opts.grad_tol {
            stop = CgStop::GradientTolerance;
            break;
        }
        let mut gd = dot(&g, &d);
        let mut steepest = false;
        if gd >= 0.0 {
            d.iter_mut().zip(&g).for_each(|(di, gi)| *di = -gi);
            gd = -dot(&g, &g);
            steepest = true;
        }

        let accepted = loop {
            let alpha0 = match prev_step {
                Some((a, gd_prev)) => (a * gd_prev / gd).clamp(1e-12, 1e12),
                None => (1.0 / inf_norm(&d)).min(1.0),
            };
            let step = match opts.line_search {
                LineSearch::Secant => {
                    secant_step(f, &x, fx, &g, &d, gd, alpha0, &mut x_trial, &mut g_trial, mask)
                        .or_else(|| {
                            armijo_step(
                                f, &x, fx, gd, &d, alpha0, 1e-4, 0.5, 60, &mut x_trial,
                                &mut g_trial, mask,
                            )
                        })
                }
                LineSearch::Armijo {
                    c1,
                    shrink,
                    max_steps,
                } => armijo_step(
                    f, &x, fx, gd, &d, alpha0, c1, shrink, max_steps, &mut x_trial,
                    &mut g_trial, mask,
                ),
            };
            match step {
                Some(s) => break Some(s),
                None if !steepest => {
                    d.iter_mut().zip(&g).for_each(|(di, gi)| *di = -gi);
                    gd = -dot(&g, &g);
                    steepest = true;
                    prev_step = None;
                }
                None => break None,
            }
        };

        let Some((alpha, f_new)) = accepted else {
            stop = CgStop::LineSearchFailure { iteration: k };
            break;
        };
        iterations = k + 1;
        prev_step = Some((alpha, gd));

        // PR+: β = max(0, g₊ᵀ(g₊ − g) / gᵀg)
        let gg = dot(&g, &g);
        let mut beta = 0.0;
        if gg > 0.0 {
            let num: f64 = g_trial.iter().zip(&g).map(|(gn, go)| gn * (gn - go)).sum();
            beta = (num / gg).max(0.0);
        }
        if (k + 1) % restart == 0 {
            beta = 0.0;
        }
        std::mem::swap(&mut x, &mut x_trial);
        std::mem::swap(&mut g, &mut g_trial);
        fx = f_new;
        for (di, gi) in d.iter_mut().zip(&g) {
            *di = -gi + beta * *di;
        }
        history.push(fx);

        if history.len() > opts.patience {
            let old = history[history.len() - 1 - opts.patience];
            if old - fx <= opts.rel_tol * old.abs().max(f64::MIN_POSITIVE) {
                stop = CgStop::Stalled;
                break;
            }
        }
    }
    CgOutcome {
        x,
        history,
        iterations,
        stop,
    }
}

#[allow(clippy::too_many_arguments)]
fn armijo_step(
    f: &mut dyn Objective,
    x: &[f64],
    fx: f64,
    gd: f64,
    d: &[f64],
    alpha0: f64,
    c1: f64,
    shrink: f64,
    max_steps: usize,
    x_trial: &mut [f64],
    g_trial: &mut [f64],
    mask: GradientMask<'_>,
) -> Option<(f64, f64)> {
    let mut alpha = alpha0;
    let place = |alpha: f64, x_trial: &mut [f64]| {
        x_trial.copy_from_slice(x);
        axpy(alpha, d, x_trial);
    };
    // first trial with gradient: usually accepted, saves a pass
    place(alpha, x_trial);
    let f_first = f.value_and_gradient(x_trial, g_trial);
    if f_first.is_finite() && f_first <= fx + c1 * alpha * gd {
        if let Some(m) = mask {
            m(g_trial);
        }
        return Some((alpha, f_first));
    }
    for _ in 1..max_steps {
        alpha *= shrink;
        place(alpha, x_trial);
        let ft = f.value(x_trial);
        if ft.is_finite() && ft <= fx + c1 * alpha * gd {
            let ft = f.value_and_gradient(x_trial, g_trial);
            if let Some(m) = mask {
                m(g_trial);
            }
            return Some((alpha, ft));
        }
    }
    None
}

#[allow(clippy::too_many_arguments)]
fn secant_step(
    f: &mut dyn Objective,
    x: &[f64],
    fx: f64,
    g: &[f64],
    d: &[f64],
    gd: f64,
    probe: f64,
    x_trial: &mut [f64],
    g_trial: &mut [f64],
    mask: GradientMask<'_>,
) -> Option<(f64, f64)> {
    x_trial.copy_from_slice(x);
    axpy(probe, d, x_trial);
    f.value_and_gradient(x_trial, g_trial);
    if let Some(m) = mask {
        m(g_trial);
    }
    let curvature: f64 = g_trial
        .iter()
        .zip(g)
        .zip(d)
        .map(|((gt, g0), di)| (gt - g0) * di)
        .sum::<f64>()
        / probe;
    if !(curvature > 0.0) {
        return None;
    }
    let alpha = -gd / curvature;
    x_trial.copy_from_slice(x);
    axpy(alpha, d, x_trial);
    let ft = f.value_and_gradient(x_trial, g_trial);
    if let Some(m) = mask {
        m(g_trial);
    }
    (ft.is_finite() && ft <= fx).then_some((alpha, ft))
}
