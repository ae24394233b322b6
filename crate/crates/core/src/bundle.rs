//! A trained pipeline saved as one JSON file.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::{root_subtract, SkeletonSequence};
use crate::encoder::{encode_all, to_feature_matrix, EncoderConfig, EncodingCache};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::net::{extract_features, FcModel, Standardizer};
use crate::svm::{argmax_rows, decision_values, SvmModel};

pub const BUNDLE_FORMAT_VERSION: u32 = 1;
const BUNDLE_KIND: &str = "logcov-model";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelBundle {
    pub format_version: u32,
    pub kind: String,
    pub encoder: EncoderConfig,
    /// Joint subtracted from every frame before encoding; `None` skips it.
    pub root_index: Option<usize>,
    /// Joint count of the raw input sequences.
    pub joints: usize,
    pub standardizer: Option<Standardizer>,
    pub fc: FcModel,
    pub svm: SvmModel,
    pub class_names: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Prediction {
    pub id: String,
    pub label: usize,
    pub scores: Vec<f64>,
}

impl ModelBundle {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        encoder: EncoderConfig,
        root_index: Option<usize>,
        joints: usize,
        standardizer: Option<Standardizer>,
        fc: FcModel,
        svm: SvmModel,
        class_names: Vec<String>,
    ) -> Self {
        ModelBundle {
            format_version: BUNDLE_FORMAT_VERSION,
            kind: BUNDLE_KIND.to_string(),
            encoder,
            root_index,
            joints,
            standardizer,
            fc,
            svm,
            class_names,
        }
    }

    /// Pretty JSON; identical models give identical bytes.
    pub fn to_json(&self) -> Vec<u8> {
        let mut out = serde_json::to_vec_pretty(self).expect("bundle serializes");
        out.push(b'\n');
        out
    }

    pub fn from_json(bytes: &[u8], path: &Path) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_slice(bytes).map_err(|e| Error::json(path, e))?;
        let found = value.get("format_version").and_then(|v| v.as_u64());
        if found != Some(u64::from(BUNDLE_FORMAT_VERSION)) {
            return Err(Error::VersionMismatch {
                found: found.map_or_else(|| "missing".to_string(), |v| v.to_string()),
                supported: BUNDLE_FORMAT_VERSION,
            });
        }
        let bundle: ModelBundle = serde_json::from_value(value).map_err(|e| Error::json(path, e))?;
        bundle.check()?;
        Ok(bundle)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&bytes, path)
    }

    fn check(&self) -> Result<()> {
        let hidden = self.fc.hidden_dim();
        if self.svm.weights.cols() != hidden + 1 {
            return Err(Error::DimensionMismatch {
                expected: hidden + 1,
                actual: self.svm.weights.cols(),
            });
        }
        if self.class_names.len() != self.svm.num_classes {
            return Err(Error::DimensionMismatch {
                expected: self.svm.num_classes,
                actual: self.class_names.len(),
            });
        }
        if let Some(s) = &self.standardizer {
            if s.dim() != self.fc.input_dim() {
                return Err(Error::DimensionMismatch {
                    expected: self.fc.input_dim(),
                    actual: s.dim(),
                });
            }
        }
        Ok(())
    }

    /// Hidden activations `N × h` for raw sequences.
    pub fn features(&self, seqs: &[SkeletonSequence], cache: Option<&EncodingCache>) -> Result<Matrix> {
        if seqs.is_empty() {
            return Err(Error::Empty);
        }
        if let Some(bad) = seqs.iter().find(|s| s.joints() != self.joints) {
            return Err(Error::JointCount {
                expected: self.joints,
                actual: bad.joints(),
            });
        }
        let prepared = match self.root_index {
            Some(r) => seqs.iter().map(|s| root_subtract(s, r)).collect::<Result<Vec<_>>>()?,
            None => seqs.to_vec(),
        };
        let encoded = to_feature_matrix(&encode_all(&prepared, &self.encoder, cache)?)?;
        let x = match &self.standardizer {
            Some(s) => s.transform(&encoded)?,
            None => encoded,
        };
        extract_features(&self.fc, &x)
    }

    pub fn predict(&self, seqs: &[SkeletonSequence], cache: Option<&EncodingCache>) -> Result<Vec<Prediction>> {
        let scores = decision_values(&self.svm, &self.features(seqs, cache)?)?;
        let labels = argmax_rows(&scores);
        Ok(seqs
            .iter()
            .zip(labels)
            .enumerate()
            .map(|(i, (s, label))| Prediction {
                id: s.id().to_string(),
                label,
                scores: scores.row(i).to_vec(),
            })
            .collect())
    }
}
