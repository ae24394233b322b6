//! Small embedded invariant suite, run by `logcov selftest`.

use rand::Rng;
use serde::Serialize;

use crate::data::SkeletonSequence;
use crate::encoder::{covariance, Centering};
use crate::linalg::{half_vec, half_vec_inverse, spd_exp, spd_log, Matrix, SpdMatrix, SymmetricMatrix, ISOMETRIC_SCALE};
use crate::net::{pretrain_loss, pretrain_loss_and_grad, FcModel, SoftmaxHead};
use crate::rng::{self, Stream};
use crate::svm::{primal_objective, train_svm_with, SvmOptions};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    /// Worst observed error and the bound it was held to.
    pub worst: f64,
    pub bound: f64,
}

fn check(name: &'static str, worst: f64, bound: f64) -> CheckResult {
    CheckResult {
        name,
        passed: worst.is_finite() && worst <= bound,
        worst,
        bound,
    }
}

fn random_spd(d: usize, rng: &mut impl Rng) -> SpdMatrix {
    let a = Matrix::from_vec(d, d, (0..d * d).map(|_| rng.gen_range(-1.0..1.0)).collect()).expect("square");
    let mut s = a.matmul(&a.transpose()).expect("square");
    for i in 0..d {
        s[(i, i)] += 0.1;
    }
    SpdMatrix::new(SymmetricMatrix::from_matrix_symmetrized(&s).expect("square")).expect("shifted Gram matrix")
}

fn log_exp_roundtrip(rng: &mut impl Rng) -> CheckResult {
    let mut worst = 0.0f64;
    for d in 2..=16 {
        let x = random_spd(d, rng);
        let back = spd_log(&x).and_then(|l| spd_exp(&l));
        let err = match back {
            Ok(b) => {
                let diff = b.as_symmetric().to_matrix().sub(&x.as_symmetric().to_matrix()).frobenius_norm();
                diff / x.as_symmetric().frobenius_norm()
            }
            Err(_) => f64::INFINITY,
        };
        worst = worst.max(err);
    }
    check("spd log/exp roundtrip", worst, 1e-8)
}

fn half_vec_roundtrip(rng: &mut impl Rng) -> CheckResult {
    let mut worst = 0.0f64;
    for d in 1..=12 {
        let packed = (0..d * (d + 1) / 2).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let s = SymmetricMatrix::from_packed(d, packed).expect("triangular length");
        let v = half_vec(&s, ISOMETRIC_SCALE).expect("finite");
        let norm = v.values().iter().map(|x| x * x).sum::<f64>().sqrt();
        worst = worst.max((norm - s.frobenius_norm()).abs() / s.frobenius_norm().max(1.0));
        let again = half_vec_inverse(&v).and_then(|m| half_vec(&m, ISOMETRIC_SCALE));
        if again.ok().as_ref() != Some(&v) {
            worst = f64::INFINITY;
        }
    }
    check("half-vectorization isometry and roundtrip", worst, 1e-12)
}

fn covariance_oracle(rng: &mut impl Rng) -> CheckResult {
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let joints = rng.gen_range(1..6);
        let t = rng.gen_range(2..40);
        let d = 3 * joints;
        let coords = Matrix::from_vec(d, t, (0..d * t).map(|_| rng.gen_range(-3.0..3.0)).collect()).expect("sized");
        let seq = SkeletonSequence::new("selftest", joints, coords.clone()).expect("valid");
        let ours = covariance(&seq, Centering::Standard).expect("finite").to_matrix();
        let mean: Vec<f64> = (0..d).map(|i| coords.row(i).iter().sum::<f64>() / t as f64).collect();
        let mut oracle = Matrix::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                let s: f64 = (0..t).map(|k| (coords[(i, k)] - mean[i]) * (coords[(j, k)] - mean[j])).sum();
                oracle[(i, j)] = s / (t - 1) as f64;
            }
        }
        let scale = oracle.frobenius_norm().max(f64::MIN_POSITIVE);
        worst = worst.max(ours.sub(&oracle).frobenius_norm() / scale);
    }
    check("covariance vs two-pass oracle", worst, 1e-12)
}

fn gradient_check(rng: &mut impl Rng, inject_fault: bool) -> CheckResult {
    let (n, h, c, m) = (7, 5, 3, 6);
    let mut mat = |r: usize, k: usize| Matrix::from_vec(r, k, (0..r * k).map(|_| rng.gen_range(-1.0..1.0)).collect()).expect("sized");
    let fc = FcModel {
        weights: mat(h, n),
        bias: mat(1, h).into_vec(),
    };
    let head = SoftmaxHead {
        weights: mat(c, h),
        bias: mat(1, c).into_vec(),
    };
    let x = mat(m, n);
    let labels: Vec<usize> = (0..m).map(|i| i % c).collect();
    let wd = 1e-3;
    let (_, mut g) = pretrain_loss_and_grad(&fc, &head, &x, &labels, wd).expect("valid batch");
    if inject_fault {
        g.fc.weights.as_mut_slice()[0] *= 1.01;
        g.fc.weights.as_mut_slice()[0] += 1e-3;
    }
    let step = 1e-5;
    let mut worst = 0.0f64;
    for idx in 0..h * n {
        let (mut p, mut q) = (fc.clone(), fc.clone());
        p.weights.as_mut_slice()[idx] += step;
        q.weights.as_mut_slice()[idx] -= step;
        let fd = (pretrain_loss(&p, &head, &x, &labels, wd).expect("valid")
            - pretrain_loss(&q, &head, &x, &labels, wd).expect("valid"))
            / (2.0 * step);
        let a = g.fc.weights.as_slice()[idx];
        worst = worst.max((a - fd).abs() / a.abs().max(fd.abs()).max(1e-3));
    }
    for idx in 0..c * h {
        let (mut p, mut q) = (head.clone(), head.clone());
        p.weights.as_mut_slice()[idx] += step;
        q.weights.as_mut_slice()[idx] -= step;
        let fd = (pretrain_loss(&fc, &p, &x, &labels, wd).expect("valid")
            - pretrain_loss(&fc, &q, &x, &labels, wd).expect("valid"))
            / (2.0 * step);
        let a = g.head.weights.as_slice()[idx];
        worst = worst.max((a - fd).abs() / a.abs().max(fd.abs()).max(1e-3));
    }
    check("analytic gradient vs central differences", worst, 1e-5)
}

fn svm_oracle(rng: &mut impl Rng) -> CheckResult {
    let n = 12;
    let x = Matrix::from_vec(n, 2, (0..2 * n).map(|_| rng.gen_range(-1.0..1.0)).collect()).expect("sized");
    let labels: Vec<usize> = (0..n).map(|i| usize::from(x[(i, 0)] + 0.3 * x[(i, 1)] > 0.1)).collect();
    let labels = if labels.iter().all(|&l| l == labels[0]) {
        (0..n).map(|i| i % 2).collect()
    } else {
        labels
    };
    let c = 1.0;
    let opts = SvmOptions {
        c_reg: c,
        tol: 1e-6,
        ..SvmOptions::default()
    };
    let Ok(fit) = train_svm_with(&x, &labels, 2, &opts) else {
        return check("linear svm vs subgradient oracle", f64::INFINITY, 1e-3);
    };
    let y: Vec<f64> = labels.iter().map(|&l| if l == 1 { 1.0 } else { -1.0 }).collect();
    let ours = primal_objective(fit.model.weights.row(1), &x, &y, c);

    // projected subgradient, step 1/k, best iterate
    let radius = (2.0 * c * n as f64).sqrt();
    let mut w = [0.0f64; 3];
    let mut best = primal_objective(&w, &x, &y, c);
    for k in 1..=100_000 {
        let mut g = w;
        for (row, &yi) in x.row_iter().zip(&y) {
            if yi * (row[0] * w[0] + row[1] * w[1] + w[2]) < 1.0 {
                g[0] -= c * yi * row[0];
                g[1] -= c * yi * row[1];
                g[2] -= c * yi;
            }
        }
        let eta = 1.0 / k as f64;
        w.iter_mut().zip(g).for_each(|(wj, gj)| *wj -= eta * gj);
        let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > radius {
            w.iter_mut().for_each(|v| *v *= radius / norm);
        }
        best = best.min(primal_objective(&w, &x, &y, c));
    }
    check("linear svm vs subgradient oracle", (ours - best).abs() / best, 1e-3)
}

/// Runs every check. `inject_fault` corrupts one analytic gradient so the
/// failure path can be exercised.
pub fn run(seed: u64, inject_fault: bool) -> Vec<CheckResult> {
    let mut r = rng::stream(seed, Stream::Synthetic);
    vec![
        log_exp_roundtrip(&mut r),
        half_vec_roundtrip(&mut r),
        covariance_oracle(&mut r),
        gradient_check(&mut r, inject_fault),
        svm_oracle(&mut r),
    ]
}
