//! Throughput measurement on synthetic data.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::metrics::accuracy;
use super::synthetic::{generate_range, SyntheticConfig};
use crate::data::root_subtract;
use crate::encoder::{encode_all, EncoderConfig};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::net::{extract_features, pretrain, Standardizer, TrainConfig};
use crate::svm::{predict, train_svm_with, SvmOptions};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchConfig {
    pub sequences: usize,
    pub synthetic: SyntheticConfig,
    pub encoder: EncoderConfig,
    pub fc_size: usize,
    pub train: TrainConfig,
    pub c_reg: f64,
    /// Sequences generated and encoded per batch; raw frames are dropped
    /// after each batch.
    pub chunk: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            sequences: 600,
            synthetic: SyntheticConfig::default(),
            encoder: EncoderConfig::default(),
            fc_size: 64,
            train: TrainConfig::default(),
            c_reg: 1.0,
            chunk: 2000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub sequences: usize,
    pub feature_dim: usize,
    pub encode_seconds: f64,
    pub encode_ms_per_sequence: f64,
    pub pretrain_seconds: f64,
    /// CG iterations or ADAM epochs.
    pub pretrain_iterations: usize,
    pub svm_seconds: f64,
    pub total_seconds: f64,
    pub train_accuracy: f64,
}

/// Generate, encode, pretrain and fit the SVM on `cfg.sequences` synthetic
/// sequences, timing each stage. Generation time is excluded.
pub fn bench(cfg: &BenchConfig) -> Result<BenchReport> {
    if cfg.sequences == 0 || cfg.chunk == 0 {
        return Err(Error::Config("sequences and chunk must be positive".into()));
    }
    let mut data = Vec::new();
    let mut labels = Vec::with_capacity(cfg.sequences);
    let mut dim = 0;
    let mut encode_seconds = 0.0;
    let mut start = 0;
    while start < cfg.sequences {
        let count = cfg.chunk.min(cfg.sequences - start);
        let raw = generate_range(&cfg.synthetic, start, count)?;
        let t = Instant::now();
        let prepared = raw.iter().map(|s| root_subtract(s, 0)).collect::<Result<Vec<_>>>()?;
        drop(raw);
        for v in encode_all(&prepared, &cfg.encoder, None)? {
            if dim == 0 {
                dim = v.len();
                data.reserve_exact(cfg.sequences * dim);
            }
            data.extend_from_slice(v.values());
        }
        encode_seconds += t.elapsed().as_secs_f64();
        labels.extend(prepared.iter().map(|s| s.label.expect("synthetic sequences are labeled")));
        start += count;
    }
    let mut x = Matrix::from_vec(cfg.sequences, dim, data)?;

    let t = Instant::now();
    let standardizer = Standardizer::fit(&x)?;
    standardizer.transform_in_place(&mut x)?;
    let pre = pretrain(&x, &labels, cfg.synthetic.classes, cfg.fc_size, &cfg.train)?;
    let pretrain_seconds = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let hidden = extract_features(&pre.model, &x)?;
    drop(x);
    let opts = SvmOptions {
        c_reg: cfg.c_reg,
        seed: cfg.train.seed,
        ..SvmOptions::default()
    };
    let svm = train_svm_with(&hidden, &labels, cfg.synthetic.classes, &opts)?.model;
    let svm_seconds = t.elapsed().as_secs_f64();
    let train_accuracy = accuracy(&predict(&svm, &hidden)?, &labels)?;

    Ok(BenchReport {
        sequences: cfg.sequences,
        feature_dim: dim,
        encode_seconds,
        encode_ms_per_sequence: 1e3 * encode_seconds / cfg.sequences as f64,
        pretrain_seconds,
        pretrain_iterations: pre.iterations,
        svm_seconds,
        total_seconds: encode_seconds + pretrain_seconds + svm_seconds,
        train_accuracy,
    })
}
