//! Acceptance suite. Prints one PASS/FAIL/SKIP line per criterion and exits
//! non-zero if anything failed. Pass criterion ids (`1a`, `2`, `5`, ...) as
//! arguments to run a subset.
//!
//! Dataset-dependent criteria read csv-dir corpora from `LOGCOV_MSR3D` and
//! `LOGCOV_HDM05` (optionally with `*_PROTOCOL` holding a split protocol as
//! JSON) and are skipped when those are unset.

use std::path::PathBuf;
use std::time::Instant;

use logcov::data::{load_dataset, DatasetFormat, SkeletonSequence, SplitProtocol};
use logcov::encoder::{covariance, encode, encode_all, Centering, EncoderConfig, EncodingCache};
use logcov::harness::synthetic::{generate, generate_range, SyntheticConfig};
use logcov::harness::{bench, run_experiment_on, BenchConfig, ExperimentConfig, OptimizerChoice};
use logcov::linalg::{spd_exp, spd_log, Matrix, SpdMatrix, SymmetricMatrix};
use logcov::net::{pretrain_loss, pretrain_loss_and_grad, FcModel, OptimizerKind, SoftmaxHead, TrainConfig};
use logcov::svm::{train_svm_with, SvmOptions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

enum Outcome {
    Pass(String),
    Fail(String),
    Skip(String),
}

fn verdict(ok: bool, detail: String) -> Outcome {
    if ok {
        Outcome::Pass(detail)
    } else {
        Outcome::Fail(detail)
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_matrix(r: usize, c: usize, rng: &mut ChaCha8Rng) -> Matrix {
    Matrix::from_vec(r, c, (0..r * c).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
}

fn random_sequence(joints: usize, frames: usize, rng: &mut ChaCha8Rng) -> SkeletonSequence {
    let d = 3 * joints;
    SkeletonSequence::new("acc", joints, random_matrix(d, frames, rng)).unwrap()
}

fn frobenius(a: &Matrix) -> f64 {
    a.as_slice().iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn diff_norm(a: &Matrix, b: &Matrix) -> f64 {
    a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

fn spd_roundtrip() -> Outcome {
    let mut r = rng(101);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let d = r.gen_range(2..=64);
        let a = random_matrix(d, d, &mut r);
        let mut g = a.matmul(&a.transpose()).unwrap();
        g.scale(1.0 / d as f64);
        for i in 0..d {
            g[(i, i)] += 0.01;
        }
        let x = SpdMatrix::new(SymmetricMatrix::from_matrix_symmetrized(&g).unwrap()).unwrap();
        let back = spd_exp(&spd_log(&x).unwrap()).unwrap().as_symmetric().to_matrix();
        worst = worst.max(diff_norm(&back, &g) / frobenius(&g));
    }
    verdict(worst <= 1e-8, format!("1000 matrices, d in 2..=64, worst relative error {worst:.2e} (bound 1e-8)"))
}

fn covariance_oracle() -> Outcome {
    let mut r = rng(102);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let seq = random_sequence(r.gen_range(1..=25), r.gen_range(2..=120), &mut r);
        let p = seq.coords();
        let (d, t) = (p.rows(), p.cols());
        let mean: Vec<f64> = (0..d).map(|i| p.row(i).iter().sum::<f64>() / t as f64).collect();
        let mut oracle = Matrix::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                let s: f64 = (0..t).map(|k| (p[(i, k)] - mean[i]) * (p[(j, k)] - mean[j])).sum();
                oracle[(i, j)] = s / (t - 1) as f64;
            }
        }
        let ours = covariance(&seq, Centering::Standard).unwrap().to_matrix();
        worst = worst.max(diff_norm(&ours, &oracle) / frobenius(&oracle));
    }
    verdict(worst <= 1e-12, format!("200 sequences, worst relative error {worst:.2e} (bound 1e-12)"))
}

fn encode_invariance() -> Outcome {
    use rand::seq::SliceRandom;
    let synth = SyntheticConfig::default();
    let seqs = generate_range(&synth, 0, 100).unwrap();
    let cfg = EncoderConfig::default();
    let mut r = rng(103);
    let (mut perm, mut trans) = (0.0f64, 0.0f64);
    for seq in &seqs {
        let base = encode(seq, &cfg).unwrap();
        let mut order: Vec<usize> = (0..seq.frames()).collect();
        order.shuffle(&mut r);
        let shuffled = encode(&seq.reorder_frames(&order).unwrap(), &cfg).unwrap();
        let mut moved = seq.coords().clone();
        let shift: [f64; 3] = [r.gen_range(-10.0..10.0), r.gen_range(-10.0..10.0), r.gen_range(-10.0..10.0)];
        for row in 0..moved.rows() {
            moved.row_mut(row).iter_mut().for_each(|x| *x += shift[row % 3]);
        }
        let moved = encode(&SkeletonSequence::new("m", seq.joints(), moved).unwrap(), &cfg).unwrap();
        let max_diff = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        perm = perm.max(max_diff(base.values(), shuffled.values()));
        trans = trans.max(max_diff(base.values(), moved.values()));
    }
    verdict(
        perm <= 1e-10 && trans <= 1e-10,
        format!("100 sequences, worst |Δ| permutation {perm:.2e}, translation {trans:.2e} (bound 1e-10)"),
    )
}

fn flatten(fc: &FcModel, head: &SoftmaxHead) -> Vec<f64> {
    [fc.weights.as_slice(), &fc.bias, head.weights.as_slice(), &head.bias].concat()
}

fn unflatten(v: &[f64], n: usize, h: usize, c: usize) -> (FcModel, SoftmaxHead) {
    let (w, rest) = v.split_at(h * n);
    let (b, rest) = rest.split_at(h);
    let (vw, cb) = rest.split_at(c * h);
    (
        FcModel { weights: Matrix::from_vec(h, n, w.to_vec()).unwrap(), bias: b.to_vec() },
        SoftmaxHead { weights: Matrix::from_vec(c, h, vw.to_vec()).unwrap(), bias: cb.to_vec() },
    )
}

fn gradient_check() -> Outcome {
    let mut r = rng(104);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let (n, h, c, m) = (r.gen_range(2..=30), r.gen_range(1..=12), r.gen_range(2..=5), r.gen_range(1..=20));
        let fc = FcModel { weights: random_matrix(h, n, &mut r), bias: random_matrix(1, h, &mut r).into_vec() };
        let head = SoftmaxHead { weights: random_matrix(c, h, &mut r), bias: random_matrix(1, c, &mut r).into_vec() };
        let x = random_matrix(m, n, &mut r);
        let labels: Vec<usize> = (0..m).map(|_| r.gen_range(0..c)).collect();
        let wd = if r.gen_bool(0.5) { 0.0 } else { r.gen_range(1e-4..1e-1) };
        let (_, g) = pretrain_loss_and_grad(&fc, &head, &x, &labels, wd).unwrap();
        let analytic = flatten(&g.fc, &g.head);
        let theta = flatten(&fc, &head);
        let step = 1e-5;
        let mut fd = Vec::with_capacity(theta.len());
        for i in 0..theta.len() {
            let mut p = theta.clone();
            p[i] += step;
            let (pf, ph) = unflatten(&p, n, h, c);
            p[i] -= 2.0 * step;
            let (qf, qh) = unflatten(&p, n, h, c);
            let lp = pretrain_loss(&pf, &ph, &x, &labels, wd).unwrap();
            let lq = pretrain_loss(&qf, &qh, &x, &labels, wd).unwrap();
            fd.push((lp - lq) / (2.0 * step));
        }
        let err: f64 = analytic.iter().zip(&fd).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let scale = fd.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-8);
        worst = worst.max(err / scale);
    }
    verdict(worst <= 1e-5, format!("100 model/batch pairs, worst relative gradient error {worst:.2e} (bound 1e-5)"))
}

/// `½‖w‖² + C Σ max(0, 1 − y (w·x + b))` with the bias as the last weight.
fn hinge_objective(w: &[f64], x: &Matrix, y: &[f64], c: f64) -> f64 {
    let k = x.cols();
    let hinge: f64 = (0..x.rows())
        .map(|i| {
            let m: f64 = x.row(i).iter().zip(w).map(|(a, b)| a * b).sum::<f64>() + w[k];
            (1.0 - y[i] * m).max(0.0)
        })
        .sum();
    0.5 * w.iter().map(|v| v * v).sum::<f64>() + c * hinge
}

/// Projected subgradient descent with step `1/k`, best iterate. The optimum
/// lies in the ball of radius `sqrt(2 C n)` because `w = 0` costs `C n`.
fn subgradient_oracle(x: &Matrix, y: &[f64], c: f64, iters: usize) -> f64 {
    let k = x.cols();
    let radius = (2.0 * c * x.rows() as f64).sqrt();
    let mut w = vec![0.0; k + 1];
    let mut best = hinge_objective(&w, x, y, c);
    for it in 1..=iters {
        let mut g = w.clone();
        for (i, &yi) in y.iter().enumerate().take(x.rows()) {
            let row = x.row(i);
            let m: f64 = row.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() + w[k];
            if yi * m < 1.0 {
                for j in 0..k {
                    g[j] -= c * yi * row[j];
                }
                g[k] -= c * yi;
            }
        }
        let eta = 1.0 / it as f64;
        w.iter_mut().zip(&g).for_each(|(wj, gj)| *wj -= eta * gj);
        let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > radius {
            w.iter_mut().for_each(|v| *v *= radius / norm);
        }
        best = best.min(hinge_objective(&w, x, y, c));
    }
    best
}

fn svm_oracle() -> Outcome {
    let mut r = rng(105);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let (n, k, classes) = (r.gen_range(8..=30), r.gen_range(1..=4), r.gen_range(2..=3));
        let c = [0.1, 1.0, 10.0][r.gen_range(0..3)];
        let x = random_matrix(n, k, &mut r);
        let mut labels: Vec<usize> = (0..n).map(|_| r.gen_range(0..classes)).collect();
        for (i, l) in labels.iter_mut().take(classes).enumerate() {
            *l = i;
        }
        let fit = train_svm_with(&x, &labels, classes, &SvmOptions { c_reg: c, tol: 1e-8, ..SvmOptions::default() }).unwrap();
        for class in 0..classes {
            let y: Vec<f64> = labels.iter().map(|&l| if l == class { 1.0 } else { -1.0 }).collect();
            let ours = hinge_objective(fit.model.weights.row(class), &x, &y, c);
            let oracle = subgradient_oracle(&x, &y, c, 200_000);
            worst = worst.max((ours - oracle).abs() / oracle);
        }
    }
    verdict(worst <= 1e-3, format!("50 instances, worst relative objective gap {worst:.2e} (bound 1e-3)"))
}

fn determinism() -> Outcome {
    let data = generate(&SyntheticConfig { per_class: 20, joints: 6, ..SyntheticConfig::default() }).unwrap();
    let mut cfg = ExperimentConfig { fc_size_grid: vec![8, 16], c_reg_grid: vec![0.1, 1.0], cv_folds: 3, seed: 42, ..ExperimentConfig::default() };
    cfg.train.cg_max_iters = 50;
    let a = run_experiment_on(&data, &cfg, &EncodingCache::in_memory()).unwrap().bundle.to_json();
    let b = run_experiment_on(&data, &cfg, &EncodingCache::in_memory()).unwrap().bundle.to_json();
    verdict(a == b, format!("two seeded end-to-end runs, bundles of {} bytes, identical: {}", a.len(), a == b))
}

/// Plain multinomial logistic regression by full-batch gradient descent on
/// z-scored tangent vectors.
fn logistic_regression_accuracy(train: &Matrix, y_train: &[usize], test: &Matrix, y_test: &[usize], classes: usize) -> f64 {
    let dim = train.cols();
    let mean: Vec<f64> = (0..dim).map(|j| (0..train.rows()).map(|i| train[(i, j)]).sum::<f64>() / train.rows() as f64).collect();
    let sd: Vec<f64> = (0..dim)
        .map(|j| {
            let v = (0..train.rows()).map(|i| (train[(i, j)] - mean[j]).powi(2)).sum::<f64>() / train.rows() as f64;
            if v > 0.0 { v.sqrt() } else { 1.0 }
        })
        .collect();
    let z = |m: &Matrix, i: usize| -> Vec<f64> { (0..dim).map(|j| (m[(i, j)] - mean[j]) / sd[j]).collect() };
    let xs: Vec<Vec<f64>> = (0..train.rows()).map(|i| z(train, i)).collect();
    let mut w = vec![vec![0.0; dim + 1]; classes];
    let scores = |w: &[Vec<f64>], x: &[f64]| -> Vec<f64> {
        w.iter().map(|wk| wk[dim] + wk[..dim].iter().zip(x).map(|(a, b)| a * b).sum::<f64>()).collect()
    };
    // the loss is (dim/2)-smooth on z-scored data, so 2/dim is a stable step
    let lr = 2.0 / dim as f64;
    for _ in 0..500 {
        let mut grad = vec![vec![0.0; dim + 1]; classes];
        for (x, &yi) in xs.iter().zip(y_train) {
            let s = scores(&w, x);
            let mx = s.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let e: Vec<f64> = s.iter().map(|v| (v - mx).exp()).collect();
            let total: f64 = e.iter().sum();
            for k in 0..classes {
                let p = e[k] / total - f64::from(u8::from(k == yi));
                grad[k].iter_mut().zip(x).for_each(|(g, xi)| *g += p * xi);
                grad[k][dim] += p;
            }
        }
        for (wk, gk) in w.iter_mut().zip(&grad) {
            wk.iter_mut().zip(gk).for_each(|(a, g)| *a -= lr * g / xs.len() as f64);
        }
    }
    let correct = (0..test.rows())
        .filter(|&i| {
            let s = scores(&w, &z(test, i));
            let pred = (0..classes).fold(0, |b, k| if s[k] > s[b] { k } else { b });
            pred == y_test[i]
        })
        .count();
    correct as f64 / test.rows() as f64
}

fn synthetic_end_to_end() -> Outcome {
    let data = generate(&SyntheticConfig::default()).unwrap();
    let protocol = SplitProtocol::BySubject { test_subjects: vec![1, 3, 5, 7, 9] };
    let cfg = ExperimentConfig { protocol: protocol.clone(), optimizer: OptimizerChoice::Cg, ..ExperimentConfig::default() };

    let started = Instant::now();
    let out = run_experiment_on(&data, &cfg, &EncodingCache::in_memory()).unwrap();
    let seconds = started.elapsed().as_secs_f64();
    let acc = out.report.test_accuracy.unwrap_or(0.0);

    let idx = logcov::data::split_indices(&data, &protocol).unwrap();
    let enc = |rows: &[usize]| {
        let seqs: Vec<SkeletonSequence> = rows.iter().map(|&i| data.sequences()[i].clone()).collect();
        let v = encode_all(&seqs, &EncoderConfig::default(), None).unwrap();
        logcov::encoder::to_feature_matrix(&v).unwrap()
    };
    let labels = data.labels();
    let y = |rows: &[usize]| rows.iter().map(|&i| labels[i]).collect::<Vec<_>>();
    let oracle = logistic_regression_accuracy(&enc(&idx.train), &y(&idx.train), &enc(&idx.test), &y(&idx.test), 3);

    verdict(
        out.report.n_train == 300 && out.report.n_test == 300 && acc >= 0.99 && seconds < 120.0 && oracle > 0.99,
        format!(
            "{}/{} split, CG, test accuracy {:.2}% in {seconds:.1}s (bounds ≥99%, <120s); logistic-regression oracle {:.2}%",
            out.report.n_train,
            out.report.n_test,
            100.0 * acc,
            100.0 * oracle
        ),
    )
}

fn dataset_reproduction(var: &str, default_protocol: SplitProtocol, bound: f64, max_seconds: f64) -> Outcome {
    let Some(path) = std::env::var_os(var).map(PathBuf::from) else {
        return Outcome::Skip(format!("{var} not set; point it at a csv-dir copy of the dataset to run"));
    };
    let protocol = match std::env::var(format!("{var}_PROTOCOL")) {
        Ok(s) => match serde_json::from_str(&s) {
            Ok(p) => p,
            Err(e) => return Outcome::Fail(format!("{var}_PROTOCOL is not a protocol: {e}")),
        },
        Err(_) => default_protocol,
    };
    let started = Instant::now();
    let data = match load_dataset(&path, DatasetFormat::CsvDir) {
        Ok(d) => d,
        Err(e) => return Outcome::Fail(format!("cannot load {}: {e}", path.display())),
    };
    let cfg = ExperimentConfig { protocol, ..ExperimentConfig::default() };
    match run_experiment_on(&data, &cfg, &EncodingCache::from_env()) {
        Ok(out) => {
            let seconds = started.elapsed().as_secs_f64();
            let acc = out.report.test_accuracy.unwrap_or(0.0);
            verdict(
                acc >= bound && seconds < max_seconds,
                format!("{} classes, test accuracy {:.2}% in {seconds:.0}s (bound ≥{:.0}%)", data.num_classes(), 100.0 * acc, 100.0 * bound),
            )
        }
        Err(e) => Outcome::Fail(format!("pipeline error: {e}")),
    }
}

fn scaling(sequences: usize, optimizer: OptimizerKind, bound_seconds: f64) -> Outcome {
    let cfg = BenchConfig {
        sequences,
        train: TrainConfig { optimizer, ..TrainConfig::default() },
        ..BenchConfig::default()
    };
    let started = Instant::now();
    let r = match bench(&cfg) {
        Ok(r) => r,
        Err(e) => return Outcome::Fail(format!("bench error: {e}")),
    };
    let wall = started.elapsed().as_secs_f64();
    let detail = format!(
        "{sequences} sequences, {optimizer:?}: encode {:.0}s, pretrain {:.0}s ({} iterations), svm {:.0}s, total {:.0}s (bound {:.0}s, failing above {:.0}s); wall incl. generation {wall:.0}s; train accuracy {:.1}%",
        r.encode_seconds,
        r.pretrain_seconds,
        r.pretrain_iterations,
        r.svm_seconds,
        r.total_seconds,
        bound_seconds,
        2.0 * bound_seconds,
        100.0 * r.train_accuracy
    );
    verdict(r.total_seconds <= 2.0 * bound_seconds, detail)
}

type Criterion = (&'static str, &'static str, fn() -> Outcome);

fn main() {
    let criteria: Vec<Criterion> = vec![
        ("1a", "spd exp∘log roundtrip", spd_roundtrip),
        ("1b", "covariance vs two-pass oracle", covariance_oracle),
        ("1c", "encoding permutation and translation invariance", encode_invariance),
        ("1d", "analytic vs finite-difference gradients", gradient_check),
        ("1e", "svm objective vs subgradient oracle", svm_oracle),
        ("1f", "seeded end-to-end runs give identical bundles", determinism),
        ("2", "synthetic end-to-end accuracy and runtime", synthetic_end_to_end),
        ("3", "MSR-Action3D reproduction", || {
            dataset_reproduction("LOGCOV_MSR3D", SplitProtocol::BySubject { test_subjects: vec![2, 4, 6, 8, 10] }, 0.93, 600.0)
        }),
        ("4", "HDM-05 14-class reproduction", || {
            dataset_reproduction("LOGCOV_HDM05", SplitProtocol::RandomStratified { test_fraction: 0.5, seed: 0 }, 0.94, 600.0)
        }),
        ("5a", "scaling: CG on 6,000 sequences", || scaling(6_000, OptimizerKind::Cg, 15.0 * 60.0)),
        ("5b", "scaling: ADAM on 60,000 sequences", || scaling(60_000, OptimizerKind::Adam, 60.0 * 60.0)),
    ];
    let filters: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (id, name, check) in criteria {
        if !filters.is_empty() && !filters.iter().any(|f| id.starts_with(f.as_str())) {
            continue;
        }
        let started = Instant::now();
        let outcome = check();
        let took = started.elapsed().as_secs_f64();
        let (tag, detail) = match outcome {
            Outcome::Pass(d) => ("PASS", d),
            Outcome::Fail(d) => {
                failed += 1;
                ("FAIL", d)
            }
            Outcome::Skip(d) => ("SKIP", d),
        };
        println!("{tag} [{id}] {name}: {detail} [{took:.1}s]");
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
