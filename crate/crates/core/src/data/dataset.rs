use super::SkeletonSequence;
use crate::error::{Error, Result};

/// Labeled sequences sharing one joint count, labels contiguous in `[0, C)`.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledDataset {
    sequences: Vec<SkeletonSequence>,
    class_names: Vec<String>,
}

impl LabeledDataset {
    pub fn new(sequences: Vec<SkeletonSequence>, class_names: Vec<String>) -> Result<Self> {
        let num_classes = class_names.len();
        let joints = sequences.first().map(SkeletonSequence::joints);
        for s in &sequences {
            match s.label {
                Some(label) if label < num_classes => {}
                Some(label) => return Err(Error::BadLabel { label, num_classes }),
                None => {
                    return Err(Error::Config(format!(
                        "sequence {:?} has no label",
                        s.id()
                    )))
                }
            }
            if Some(s.joints()) != joints {
                return Err(Error::InconsistentJoints {
                    path: s.id().into(),
                    expected: joints.unwrap_or(0),
                    actual: s.joints(),
                });
            }
        }
        Ok(LabeledDataset {
            sequences,
            class_names,
        })
    }

    pub fn sequences(&self) -> &[SkeletonSequence] {
        &self.sequences
    }

    pub fn into_sequences(self) -> Vec<SkeletonSequence> {
        self.sequences
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn num_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn len(&self) -> usize {
        self.sequences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sequences.is_empty()
    }

    /// Joint count shared by every sequence (`None` when empty).
    pub fn joints(&self) -> Option<usize> {
        self.sequences.first().map(SkeletonSequence::joints)
    }

    pub fn labels(&self) -> Vec<usize> {
        self.sequences
            .iter()
            .map(|s| s.label.expect("validated at construction"))
            .collect()
    }

    /// Subset by index, same class list.
    pub fn subset(&self, indices: &[usize]) -> LabeledDataset {
        LabeledDataset {
            sequences: indices.iter().map(|&i| self.sequences[i].clone()).collect(),
            class_names: self.class_names.clone(),
        }
    }

    /// Applies `f` to every sequence, keeping labels and class names.
    pub fn try_map(&self, f: impl Fn(&SkeletonSequence) -> Result<SkeletonSequence>) -> Result<Self> {
        let sequences = self.sequences.iter().map(f).collect::<Result<Vec<_>>>()?;
        LabeledDataset::new(sequences, self.class_names.clone())
    }
}
