//! End-to-end experiments: split, encode, grid search, retrain, evaluate.

mod bench;
mod metrics;
mod report;
pub mod synthetic;

use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use bench::{bench, BenchConfig, BenchReport};
pub use metrics::{accuracy, confusion_matrix};
pub use report::{
    emit_report, render_report, ExperimentReport, GridEntry, ReportFormat, Selection, StageTiming,
    REPORT_SCHEMA_VERSION,
};

use crate::bundle::ModelBundle;
use crate::data::{
    load_dataset, root_subtract, split_indices, stratified_folds, DatasetFormat, LabeledDataset, SkeletonSequence,
    SplitProtocol,
};
use crate::encoder::{encode_all, to_feature_matrix, EncoderConfig, EncodingCache};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::net::{extract_features, pretrain, OptimizerKind, Standardizer, TrainConfig, DEFAULT_FC_GRID};
use crate::svm::{predict, train_svm_with, SvmModel, SvmOptions, DEFAULT_C_GRID, DEFAULT_MAX_EPOCHS, DEFAULT_TOL};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OptimizerChoice {
    /// CG below `adam_threshold` training sequences, ADAM at or above it.
    #[default]
    Auto,
    Cg,
    Adam,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: Option<PathBuf>,
    /// Detected from the path when absent.
    pub dataset_format: Option<DatasetFormat>,
    /// `None` disables root-joint subtraction.
    pub root_index: Option<usize>,
    pub encoder: EncoderConfig,
    pub fc_size_grid: Vec<usize>,
    pub c_reg_grid: Vec<f64>,
    pub protocol: SplitProtocol,
    pub optimizer: OptimizerChoice,
    pub adam_threshold: usize,
    /// Pretraining settings; `train.seed` is replaced by `seed`.
    pub train: TrainConfig,
    pub svm_tol: f64,
    pub svm_max_epochs: usize,
    pub cv_folds: usize,
    /// z-score tangent vectors with training statistics before the FC layer.
    pub standardize: bool,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            dataset: None,
            dataset_format: None,
            root_index: Some(0),
            encoder: EncoderConfig::default(),
            fc_size_grid: DEFAULT_FC_GRID.to_vec(),
            c_reg_grid: DEFAULT_C_GRID.to_vec(),
            protocol: SplitProtocol::RandomStratified {
                test_fraction: 0.5,
                seed: 0,
            },
            optimizer: OptimizerChoice::Auto,
            adam_threshold: 10_000,
            train: TrainConfig::default(),
            svm_tol: DEFAULT_TOL,
            svm_max_epochs: DEFAULT_MAX_EPOCHS,
            cv_folds: 5,
            standardize: true,
            seed: 0,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.fc_size_grid.is_empty() || self.c_reg_grid.is_empty() {
            return Err(Error::Config("fc_size_grid and c_reg_grid must be non-empty".into()));
        }
        if self.fc_size_grid.contains(&0) {
            return Err(Error::Config("fc sizes must be positive".into()));
        }
        if let Some(c) = self.c_reg_grid.iter().find(|c| !(**c > 0.0 && c.is_finite())) {
            return Err(Error::Config(format!("C_reg values must be positive, got {c}")));
        }
        if self.cv_folds < 2 && self.grid_len() > 1 {
            return Err(Error::Config("cv_folds must be at least 2".into()));
        }
        if !(self.svm_tol > 0.0) {
            return Err(Error::Config("svm_tol must be positive".into()));
        }
        self.encoder.validate()?;
        self.train.validate()
    }

    pub fn grid_len(&self) -> usize {
        self.fc_size_grid.len() * self.c_reg_grid.len()
    }

    pub fn resolve_optimizer(&self, n_train: usize) -> OptimizerKind {
        match self.optimizer {
            OptimizerChoice::Cg => OptimizerKind::Cg,
            OptimizerChoice::Adam => OptimizerKind::Adam,
            OptimizerChoice::Auto if n_train < self.adam_threshold => OptimizerKind::Cg,
            OptimizerChoice::Auto => OptimizerKind::Adam,
        }
    }

    fn train_config(&self, n_train: usize) -> TrainConfig {
        TrainConfig {
            optimizer: self.resolve_optimizer(n_train),
            seed: self.seed,
            ..self.train.clone()
        }
    }

    fn svm_options(&self, c_reg: f64) -> SvmOptions {
        SvmOptions {
            c_reg,
            tol: self.svm_tol,
            max_epochs: self.svm_max_epochs,
            seed: self.seed,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ExperimentOutcome {
    pub report: ExperimentReport,
    pub bundle: ModelBundle,
}

struct Timer {
    timings: Vec<StageTiming>,
    last: Instant,
}

impl Timer {
    fn new() -> Self {
        Timer {
            timings: Vec::new(),
            last: Instant::now(),
        }
    }

    fn lap(&mut self, stage: &str) {
        let now = Instant::now();
        self.timings.push(StageTiming {
            stage: stage.to_string(),
            seconds: (now - self.last).as_secs_f64(),
        });
        self.last = now;
    }
}

/// The test split. Opening it consumes the guard; opening before selection
/// has been sealed is counted as an early read.
struct HeldOut<'a> {
    seqs: Vec<&'a SkeletonSequence>,
    selection_sealed: bool,
}

impl<'a> HeldOut<'a> {
    fn seal_selection(&mut self) {
        self.selection_sealed = true;
    }

    fn open(self) -> (Vec<&'a SkeletonSequence>, usize) {
        (self.seqs, usize::from(!self.selection_sealed))
    }
}

fn prepare(dataset: &LabeledDataset, root_index: Option<usize>) -> Result<LabeledDataset> {
    match root_index {
        Some(r) => dataset.try_map(|s| root_subtract(s, r)),
        None => Ok(dataset.clone()),
    }
}

fn encode_rows(seqs: &[&SkeletonSequence], cfg: &EncoderConfig, cache: &EncodingCache) -> Result<Matrix> {
    let owned: Vec<SkeletonSequence> = seqs.iter().map(|s| (*s).clone()).collect();
    to_feature_matrix(&encode_all(&owned, cfg, Some(cache))?)
}

fn fit_standardizer(x: &Matrix, enabled: bool) -> Result<Option<Standardizer>> {
    if enabled {
        Standardizer::fit(x).map(Some)
    } else {
        Ok(None)
    }
}

fn apply_standardizer(s: &Option<Standardizer>, x: &Matrix) -> Result<Matrix> {
    match s {
        Some(s) => s.transform(x),
        None => Ok(x.clone()),
    }
}

/// Accuracy on `(xv, yv)` for each `C`, after pretraining an FC layer of
/// `fc_size` on `(xt, yt)`.
fn evaluate_fold(
    cfg: &ExperimentConfig,
    train_cfg: &TrainConfig,
    num_classes: usize,
    fc_size: usize,
    (xt, yt): (&Matrix, &[usize]),
    (xv, yv): (&Matrix, &[usize]),
) -> Result<Vec<Result<f64>>> {
    let s = fit_standardizer(xt, cfg.standardize)?;
    let (xt, xv) = (apply_standardizer(&s, xt)?, apply_standardizer(&s, xv)?);
    let pre = pretrain(&xt, yt, num_classes, fc_size, train_cfg)?;
    let ht = extract_features(&pre.model, &xt)?;
    let hv = extract_features(&pre.model, &xv)?;
    Ok(cfg
        .c_reg_grid
        .iter()
        .map(|&c| {
            let svm = train_svm_with(&ht, yt, num_classes, &cfg.svm_options(c))?.model;
            accuracy(&predict(&svm, &hv)?, yv)
        })
        .collect())
}

fn grid_search(
    cfg: &ExperimentConfig,
    train_cfg: &TrainConfig,
    num_classes: usize,
    x: &Matrix,
    y: &[usize],
) -> Vec<GridEntry> {
    let folds = stratified_folds(y, cfg.cv_folds, cfg.seed);
    let jobs: Vec<(usize, usize)> = (0..cfg.fc_size_grid.len())
        .flat_map(|h| (0..folds.len()).map(move |f| (h, f)))
        .collect();
    let results: Vec<Result<Vec<Result<f64>>>> = jobs
        .par_iter()
        .map(|&(h, f)| {
            let (tr, va) = &folds[f];
            let yt: Vec<usize> = tr.iter().map(|&i| y[i]).collect();
            let yv: Vec<usize> = va.iter().map(|&i| y[i]).collect();
            evaluate_fold(
                cfg,
                train_cfg,
                num_classes,
                cfg.fc_size_grid[h],
                (&x.select_rows(tr), &yt),
                (&x.select_rows(va), &yv),
            )
        })
        .collect();

    let mut entries = Vec::with_capacity(cfg.grid_len());
    for (h, &fc_size) in cfg.fc_size_grid.iter().enumerate() {
        for (ci, &c_reg) in cfg.c_reg_grid.iter().enumerate() {
            let mut accs = Vec::with_capacity(folds.len());
            let mut error = None;
            for f in 0..folds.len() {
                match &results[h * folds.len() + f] {
                    Ok(per_c) => match &per_c[ci] {
                        Ok(a) => accs.push(*a),
                        Err(e) => error = error.or_else(|| Some(format!("fold {f}: {e}"))),
                    },
                    Err(e) => error = error.or_else(|| Some(format!("fold {f}: {e}"))),
                }
            }
            let mean = error.is_none().then(|| accs.iter().sum::<f64>() / accs.len() as f64);
            entries.push(GridEntry {
                fc_size,
                c_reg,
                fold_accuracies: accs,
                mean_accuracy: mean,
                error,
            });
        }
    }
    entries
}

/// Highest mean validation accuracy; ties go to the smaller FC size, then
/// the smaller `C_reg`.
pub fn select_configuration(grid: &[GridEntry]) -> Option<Selection> {
    let mut ordered: Vec<&GridEntry> = grid.iter().filter(|e| e.mean_accuracy.is_some()).collect();
    ordered.sort_by(|a, b| a.fc_size.cmp(&b.fc_size).then(a.c_reg.total_cmp(&b.c_reg)));
    let mut best: Option<&GridEntry> = None;
    for e in ordered {
        if best.is_none_or(|b| e.mean_accuracy > b.mean_accuracy) {
            best = Some(e);
        }
    }
    best.map(|e| Selection {
        fc_size: e.fc_size,
        c_reg: e.c_reg,
        validation_accuracy: e.mean_accuracy,
    })
}

/// Loads `cfg.dataset` and runs the experiment on it.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutcome> {
    let path = cfg
        .dataset
        .as_deref()
        .ok_or_else(|| Error::Config("no dataset path given".into()))?;
    let format = cfg.dataset_format.unwrap_or_else(|| DatasetFormat::detect(path));
    let started = Instant::now();
    let dataset = load_dataset(path, format)?;
    let load_seconds = started.elapsed().as_secs_f64();
    let cache = EncodingCache::from_env();
    let mut out = run_experiment_on(&dataset, cfg, &cache)?;
    out.report.dataset = path.display().to_string();
    out.report.timings.insert(
        0,
        StageTiming {
            stage: "load".into(),
            seconds: load_seconds,
        },
    );
    Ok(out)
}

pub fn run_experiment_on(
    dataset: &LabeledDataset,
    cfg: &ExperimentConfig,
    cache: &EncodingCache,
) -> Result<ExperimentOutcome> {
    cfg.validate()?;
    let joints = dataset.joints().ok_or(Error::EmptyDataset)?;
    let mut timer = Timer::new();
    let prepared = prepare(dataset, cfg.root_index)?;
    timer.lap("preprocess");

    let idx = split_indices(&prepared, &cfg.protocol)?;
    let labels = prepared.labels();
    let seqs = prepared.sequences();
    let train_seqs: Vec<&SkeletonSequence> = idx.train.iter().map(|&i| &seqs[i]).collect();
    let y_train: Vec<usize> = idx.train.iter().map(|&i| labels[i]).collect();
    let mut held_out = HeldOut {
        seqs: idx.test.iter().map(|&i| &seqs[i]).collect(),
        selection_sealed: false,
    };
    let y_test: Vec<usize> = idx.test.iter().map(|&i| labels[i]).collect();
    timer.lap("split");

    let num_classes = prepared.num_classes();
    let x_train = encode_rows(&train_seqs, &cfg.encoder, cache)?;
    timer.lap("encode");

    let train_cfg = cfg.train_config(train_seqs.len());
    let mut warnings = Vec::new();
    let (grid, selection) = if cfg.grid_len() == 1 {
        let sel = Selection {
            fc_size: cfg.fc_size_grid[0],
            c_reg: cfg.c_reg_grid[0],
            validation_accuracy: None,
        };
        (Vec::new(), sel)
    } else {
        let grid = grid_search(cfg, &train_cfg, num_classes, &x_train, &y_train);
        let sel = match select_configuration(&grid) {
            Some(s) => s,
            None => {
                let msg = grid.iter().find_map(|e| e.error.clone()).unwrap_or_default();
                return Err(Error::Config(format!("every grid configuration failed; first: {msg}")));
            }
        };
        (grid, sel)
    };
    let partial = grid.iter().any(|e| e.error.is_some());
    timer.lap("grid_search");

    let standardizer = fit_standardizer(&x_train, cfg.standardize)?;
    let xs_train = apply_standardizer(&standardizer, &x_train)?;
    let pre = pretrain(&xs_train, &y_train, num_classes, selection.fc_size, &train_cfg)?;
    warnings.extend(pre.warning.clone());
    let h_train = extract_features(&pre.model, &xs_train)?;
    let svm_fit = train_svm_with(&h_train, &y_train, num_classes, &cfg.svm_options(selection.c_reg))?;
    for s in svm_fit.subproblems.iter().filter(|s| !s.converged) {
        warnings.push(format!("svm class {} stopped after {} epochs without convergence", s.class, s.epochs));
    }
    let svm: SvmModel = svm_fit.model;
    let train_accuracy = accuracy(&predict(&svm, &h_train)?, &y_train)?;
    timer.lap("retrain");
    held_out.seal_selection();

    let (test_seqs, test_reads_before_final) = held_out.open();
    let (test_accuracy, confusion) = if test_seqs.is_empty() {
        (None, None)
    } else {
        let x_test = apply_standardizer(&standardizer, &encode_rows(&test_seqs, &cfg.encoder, cache)?)?;
        let preds = predict(&svm, &extract_features(&pre.model, &x_test)?)?;
        (Some(accuracy(&preds, &y_test)?), Some(confusion_matrix(&preds, &y_test, num_classes)?))
    };
    timer.lap("evaluate");

    let bundle = ModelBundle::new(
        cfg.encoder,
        cfg.root_index,
        joints,
        standardizer,
        pre.model,
        svm,
        prepared.class_names().to_vec(),
    );
    let report = ExperimentReport {
        schema_version: REPORT_SCHEMA_VERSION,
        dataset: "<in-memory>".into(),
        protocol: Some(cfg.protocol.clone()),
        class_names: prepared.class_names().to_vec(),
        n_train: train_seqs.len(),
        n_test: test_seqs.len(),
        optimizer: Some(train_cfg.optimizer),
        grid,
        selected: Some(selection),
        train_accuracy: Some(train_accuracy),
        test_accuracy,
        confusion,
        timings: timer.timings,
        partial,
        warnings,
        test_reads_before_final,
    };
    Ok(ExperimentOutcome { report, bundle })
}

/// Scores a trained bundle on a dataset: the protocol's test split, or every
/// sequence when no protocol is given.
pub fn evaluate_bundle(
    bundle: &ModelBundle,
    dataset: &LabeledDataset,
    protocol: Option<&SplitProtocol>,
    cache: Option<&EncodingCache>,
) -> Result<ExperimentReport> {
    let mut timer = Timer::new();
    let rows: Vec<usize> = match protocol {
        Some(p) => split_indices(dataset, p)?.test,
        None => (0..dataset.len()).collect(),
    };
    let subset = dataset.subset(&rows);
    if subset.is_empty() {
        return Err(Error::EmptySplit("test"));
    }
    // class ids in the dataset follow its own sorted names; map them onto the bundle's
    let remap: Vec<Option<usize>> = subset
        .class_names()
        .iter()
        .map(|n| bundle.class_names.iter().position(|b| b == n))
        .collect();
    let labels: Vec<usize> = subset
        .labels()
        .into_iter()
        .map(|l| {
            remap[l].ok_or_else(|| Error::Config(format!("class {:?} unknown to the model", subset.class_names()[l])))
        })
        .collect::<Result<_>>()?;
    timer.lap("split");
    let preds: Vec<usize> = bundle
        .predict(subset.sequences(), cache)?
        .into_iter()
        .map(|p| p.label)
        .collect();
    let acc = accuracy(&preds, &labels)?;
    let confusion = confusion_matrix(&preds, &labels, bundle.class_names.len())?;
    timer.lap("evaluate");
    Ok(ExperimentReport {
        schema_version: REPORT_SCHEMA_VERSION,
        dataset: "<in-memory>".into(),
        protocol: protocol.cloned(),
        class_names: bundle.class_names.clone(),
        n_train: 0,
        n_test: subset.len(),
        optimizer: None,
        grid: Vec::new(),
        selected: Some(Selection {
            fc_size: bundle.fc.hidden_dim(),
            c_reg: bundle.svm.c_reg,
            validation_accuracy: None,
        }),
        train_accuracy: None,
        test_accuracy: Some(acc),
        confusion: Some(confusion),
        timings: timer.timings,
        partial: false,
        warnings: Vec::new(),
        test_reads_before_final: 0,
    })
}

/// Reads an experiment config; a relative dataset path is taken relative to
/// the config file.
pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut cfg: ExperimentConfig = serde_json::from_str(&text).map_err(|e| Error::json(path, e))?;
    if let (Some(d), Some(dir)) = (&cfg.dataset, path.parent()) {
        if d.is_relative() {
            cfg.dataset = Some(dir.join(d));
        }
    }
    Ok(cfg)
}
