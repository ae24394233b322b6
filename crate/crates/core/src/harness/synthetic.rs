//! Skeleton-like sequences whose classes differ only in how joints co-vary.
//!
//! Class `k` owns a random mixing matrix `A_k`. Every sequence perturbs it,
//! `A = A_k + noise · E`, and draws frames `x_t = o + A z_t` with a random
//! offset `o` and unit-variance `z_t`. Mean position carries no label
//! information; only the covariance does.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{LabeledDataset, SkeletonSequence};
use crate::error::{Error, Result};
use crate::linalg::{gemm, Matrix};
use crate::rng::{derive_seed, Stream};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticConfig {
    pub classes: usize,
    pub joints: usize,
    pub min_frames: usize,
    pub max_frames: usize,
    pub per_class: usize,
    /// Per-sequence perturbation of the class mixing matrix.
    pub noise: f64,
    pub subjects: u32,
    pub views: u32,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            classes: 3,
            joints: 20,
            min_frames: 30,
            max_frames: 120,
            per_class: 200,
            noise: 0.5,
            subjects: 10,
            views: 3,
            seed: 0,
        }
    }
}

impl SyntheticConfig {
    pub fn len(&self) -> usize {
        self.classes * self.per_class
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn class_names(&self) -> Vec<String> {
        (0..self.classes).map(|k| format!("class{k:02}")).collect()
    }

    fn validate(&self) -> Result<()> {
        if self.classes == 0 || self.joints == 0 || self.subjects == 0 || self.views == 0 {
            return Err(Error::Config("synthetic counts must be positive".into()));
        }
        if self.min_frames < 2 || self.max_frames < self.min_frames {
            return Err(Error::Config("need 2 <= min_frames <= max_frames".into()));
        }
        Ok(())
    }

    fn base_rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(derive_seed(self.seed, Stream::Synthetic))
    }

    fn class_mixers(&self) -> Vec<Matrix> {
        let d = 3 * self.joints;
        let mut rng = self.base_rng();
        let s = 3f64.sqrt() / (d as f64).sqrt();
        (0..self.classes)
            .map(|_| Matrix::from_vec(d, d, (0..d * d).map(|_| rng.gen_range(-s..s)).collect()).expect("square"))
            .collect()
    }
}

/// Sequence `i` lives in class `i mod C`; subjects and views cycle so every
/// class is spread evenly over them. Each index has its own random stream, so
/// any range can be generated independently.
pub fn generate_range(cfg: &SyntheticConfig, start: usize, count: usize) -> Result<Vec<SkeletonSequence>> {
    cfg.validate()?;
    let mixers = cfg.class_mixers();
    let d = 3 * cfg.joints;
    let unit = 3f64.sqrt();
    let s = 3f64.sqrt() / (d as f64).sqrt();
    (start..start + count)
        .map(|i| {
            let mut rng = cfg.base_rng();
            rng.set_stream(i as u64 + 1);
            let class = i % cfg.classes;
            let t = rng.gen_range(cfg.min_frames..=cfg.max_frames);
            let mut a = mixers[class].clone();
            for v in a.as_mut_slice() {
                *v += cfg.noise * rng.gen_range(-s..s);
            }
            let z = Matrix::from_vec(d, t, (0..d * t).map(|_| rng.gen_range(-unit..unit)).collect())?;
            let mut coords = Matrix::zeros(d, t);
            gemm(1.0, &a, false, &z, false, 0.0, &mut coords);
            for r in 0..d {
                let offset = rng.gen_range(-1.0..1.0);
                coords.row_mut(r).iter_mut().for_each(|x| *x += offset);
            }
            let within = (i / cfg.classes) as u32;
            Ok(SkeletonSequence::new(format!("syn{i:06}"), cfg.joints, coords)?
                .with_label(class)
                .with_subject(within % cfg.subjects + 1)
                .with_view(within % cfg.views + 1))
        })
        .collect()
}

pub fn generate(cfg: &SyntheticConfig) -> Result<LabeledDataset> {
    LabeledDataset::new(generate_range(cfg, 0, cfg.len())?, cfg.class_names())
}
