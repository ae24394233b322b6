use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::LabeledDataset;
use crate::error::{Error, Result};
use crate::rng::{self, Stream};

/// Train/test membership rule.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SplitProtocol {
    /// Every sequence of a listed subject goes to test; other subjects train.
    BySubject { test_subjects: Vec<u32> },
    /// Every sequence of a listed view goes to test; other views train.
    ByView { test_views: Vec<u32> },
    /// Explicit id lists; when `train` is omitted it is the complement of `test`.
    ByInstanceList {
        test: Vec<String>,
        #[serde(default)]
        train: Option<Vec<String>>,
    },
    /// Per-class shuffle, `round(n_k · test_fraction)` of each class to test.
    RandomStratified { test_fraction: f64, seed: u64 },
}

/// Index sets produced by a protocol.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

pub fn split_indices(dataset: &LabeledDataset, protocol: &SplitProtocol) -> Result<SplitIndices> {
    let seqs = dataset.sequences();
    let (train, test) = match protocol {
        SplitProtocol::BySubject { test_subjects } => {
            let present: BTreeSet<u32> = seqs.iter().filter_map(|s| s.subject).collect();
            if let Some(&missing) = test_subjects.iter().find(|s| !present.contains(s)) {
                return Err(Error::UnknownSubject(missing));
            }
            partition(seqs.iter().map(|s| s.subject.map(|x| test_subjects.contains(&x))))
        }
        SplitProtocol::ByView { test_views } => {
            let present: BTreeSet<u32> = seqs.iter().filter_map(|s| s.view).collect();
            if let Some(&missing) = test_views.iter().find(|v| !present.contains(v)) {
                return Err(Error::UnknownView(missing));
            }
            partition(seqs.iter().map(|s| s.view.map(|x| test_views.contains(&x))))
        }
        SplitProtocol::ByInstanceList { test, train } => {
            let ids: BTreeSet<&str> = seqs.iter().map(|s| s.id()).collect();
            for id in test.iter().chain(train.iter().flatten()) {
                if !ids.contains(id.as_str()) {
                    return Err(Error::UnknownInstance(id.clone()));
                }
            }
            let test_set: BTreeSet<&str> = test.iter().map(String::as_str).collect();
            let train_set: Option<BTreeSet<&str>> =
                train.as_ref().map(|t| t.iter().map(String::as_str).collect());
            partition(seqs.iter().map(|s| {
                if test_set.contains(s.id()) {
                    Some(true)
                } else {
                    match &train_set {
                        Some(t) if !t.contains(s.id()) => None,
                        _ => Some(false),
                    }
                }
            }))
        }
        SplitProtocol::RandomStratified {
            test_fraction,
            seed,
        } => {
            if !(0.0..=1.0).contains(test_fraction) {
                return Err(Error::Config(format!(
                    "test_fraction {test_fraction} outside [0, 1]"
                )));
            }
            stratified(&dataset.labels(), *test_fraction, *seed)
        }
    };
    if train.is_empty() {
        return Err(Error::EmptySplit("train"));
    }
    if test.is_empty() {
        return Err(Error::EmptySplit("test"));
    }
    Ok(SplitIndices { train, test })
}

/// Splits a dataset into `(train, test)`.
pub fn split(
    dataset: &LabeledDataset,
    protocol: &SplitProtocol,
) -> Result<(LabeledDataset, LabeledDataset)> {
    let idx = split_indices(dataset, protocol)?;
    Ok((dataset.subset(&idx.train), dataset.subset(&idx.test)))
}

/// `Some(true)` → test, `Some(false)` → train, `None` → neither.
fn partition(membership: impl Iterator<Item = Option<bool>>) -> (Vec<usize>, Vec<usize>) {
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (i, m) in membership.enumerate() {
        match m {
            Some(true) => test.push(i),
            Some(false) => train.push(i),
            None => {}
        }
    }
    (train, test)
}

/// Per-class shuffled split; both halves are returned in ascending index order.
pub(crate) fn stratified(labels: &[usize], test_fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut by_class: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &l) in labels.iter().enumerate() {
        by_class.entry(l).or_default().push(i);
    }
    let mut rng = rng::stream(seed, Stream::Split);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (_, mut members) in by_class {
        members.shuffle(&mut rng);
        let n_test = (members.len() as f64 * test_fraction).round() as usize;
        test.extend_from_slice(&members[..n_test]);
        train.extend_from_slice(&members[n_test..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    (train, test)
}

/// Stratified k-fold assignment: returns `(train, validation)` index pairs.
///
/// Each class is shuffled and dealt round-robin over the folds, so fold sizes
/// per class differ by at most one.
pub fn stratified_folds(labels: &[usize], k: usize, seed: u64) -> Vec<(Vec<usize>, Vec<usize>)> {
    let mut by_class: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &l) in labels.iter().enumerate() {
        by_class.entry(l).or_default().push(i);
    }
    let mut rng = rng::stream(seed, Stream::Folds);
    let mut fold_of = vec![0usize; labels.len()];
    let mut next = 0;
    for (_, mut members) in by_class {
        members.shuffle(&mut rng);
        for i in members {
            fold_of[i] = next % k;
            next += 1;
        }
    }
    (0..k)
        .map(|f| {
            let (val, train): (Vec<usize>, Vec<usize>) =
                (0..labels.len()).partition(|&i| fold_of[i] == f);
            (train, val)
        })
        .collect()
}
