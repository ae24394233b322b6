//! Dataset ingestion.
//!
//! Two on-disk layouts are supported:
//!
//! * `jsonl`: one object per line,
//!   `{"id": str?, "label": str, "subject": int?, "view": int?, "joints": J, "frames": [[x1,y1,z1,…,xJ,yJ,zJ], …]}`,
//!   where `frames` holds `T` frames of `3J` coordinates.
//! * `csv-dir`: a directory with one header-free CSV per sequence, `T` rows by
//!   `3J` columns, named `<label>_s<subject>_v<view>_<id>.csv`.
//!
//! Sequences that parse but are unusable (fewer than two frames, non-finite
//! coordinates) are rejected into an [`IngestReport`] instead of failing the
//! whole load. Malformed input is a hard [`Error::Parse`].

use std::collections::BTreeSet;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{LabeledDataset, SkeletonSequence};
use crate::error::{Error, Result};
use crate::linalg::Matrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DatasetFormat {
    CsvDir,
    Jsonl,
}

impl FromStr for DatasetFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv-dir" | "csv" => Ok(DatasetFormat::CsvDir),
            "jsonl" => Ok(DatasetFormat::Jsonl),
            other => Err(Error::Config(format!(
                "unknown dataset format {other:?} (expected csv-dir or jsonl)"
            ))),
        }
    }
}

impl DatasetFormat {
    /// `csv-dir` for directories, `jsonl` otherwise.
    pub fn detect(path: &Path) -> Self {
        if path.is_dir() {
            DatasetFormat::CsvDir
        } else {
            DatasetFormat::Jsonl
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rejection {
    pub source: String,
    pub kind: String,
    pub message: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct IngestReport {
    pub accepted: usize,
    pub rejected: Vec<Rejection>,
}

/// A parsed sequence with its label as written in the file.
#[derive(Clone, Debug)]
pub struct RawSequence {
    pub sequence: SkeletonSequence,
    pub label_name: Option<String>,
}

#[derive(Serialize, Deserialize)]
struct JsonRecord {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    subject: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    view: Option<u32>,
    joints: usize,
    frames: Vec<Vec<f64>>,
}

enum Parsed {
    Accepted(RawSequence),
    Rejected(Rejection, Error),
}

/// Reads every sequence at `path` without requiring labels.
///
/// Fails with the first rejection's error if every sequence was rejected.
pub fn read_sequences(path: &Path, format: DatasetFormat) -> Result<(Vec<RawSequence>, IngestReport)> {
    let parsed = match format {
        DatasetFormat::Jsonl => read_jsonl(path)?,
        DatasetFormat::CsvDir => read_csv_dir(path)?,
    };
    if parsed.is_empty() {
        return Err(Error::EmptyDataset);
    }

    let mut report = IngestReport::default();
    let mut accepted = Vec::new();
    let mut first_error = None;
    for p in parsed {
        match p {
            Parsed::Accepted(raw) => accepted.push(raw),
            Parsed::Rejected(rejection, err) => {
                log::warn!("rejected {}: {}", rejection.source, rejection.message);
                report.rejected.push(rejection);
                first_error.get_or_insert(err);
            }
        }
    }
    if accepted.is_empty() {
        return Err(first_error.unwrap_or(Error::EmptyDataset));
    }

    let joints = accepted[0].sequence.joints();
    if let Some(bad) = accepted.iter().find(|r| r.sequence.joints() != joints) {
        return Err(Error::InconsistentJoints {
            path: source_path(path, format, bad.sequence.id()),
            expected: joints,
            actual: bad.sequence.joints(),
        });
    }
    report.accepted = accepted.len();
    Ok((accepted, report))
}

fn source_path(path: &Path, format: DatasetFormat, id: &str) -> PathBuf {
    match format {
        DatasetFormat::Jsonl => path.to_path_buf(),
        DatasetFormat::CsvDir => path.join(id),
    }
}

/// Loads a labeled dataset; labels are remapped to `[0, C)` in sorted name order.
pub fn load_dataset(path: &Path, format: DatasetFormat) -> Result<LabeledDataset> {
    load_dataset_with_report(path, format).map(|(d, _)| d)
}

pub fn load_dataset_with_report(
    path: &Path,
    format: DatasetFormat,
) -> Result<(LabeledDataset, IngestReport)> {
    let (raw, report) = read_sequences(path, format)?;
    if let Some(unlabeled) = raw.iter().find(|r| r.label_name.is_none()) {
        return Err(Error::Parse {
            path: source_path(path, format, unlabeled.sequence.id()),
            line: 0,
            column: None,
            message: format!("sequence {:?} has no label", unlabeled.sequence.id()),
        });
    }
    let class_names: Vec<String> = raw
        .iter()
        .filter_map(|r| r.label_name.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let sequences = raw
        .into_iter()
        .map(|r| {
            let name = r.label_name.expect("checked above");
            let label = class_names.binary_search(&name).expect("name collected above");
            r.sequence.with_label(label)
        })
        .collect();
    Ok((LabeledDataset::new(sequences, class_names)?, report))
}

/// Writes `dataset` in the jsonl layout.
pub fn save_dataset(dataset: &LabeledDataset, path: &Path) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for seq in dataset.sequences() {
        let record = JsonRecord {
            id: Some(seq.id().to_string()),
            label: seq.label.map(|l| dataset.class_names()[l].clone()),
            subject: seq.subject,
            view: seq.view,
            joints: seq.joints(),
            frames: (0..seq.frames()).map(|t| seq.frame(t)).collect(),
        };
        serde_json::to_writer(&mut w, &record).map_err(|e| Error::json(path, e))?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn read_jsonl(path: &Path) -> Result<Vec<Parsed>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: JsonRecord = serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: lineno,
            column: Some(e.column()),
            message: e.to_string(),
        })?;
        let id = record.id.clone().unwrap_or_else(|| format!("line{lineno}"));
        let width = 3 * record.joints;
        if let Some((t, frame)) = record.frames.iter().enumerate().find(|(_, f)| f.len() != width) {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: lineno,
                column: None,
                message: format!(
                    "frame {t} has {} values, expected 3·{} = {width}",
                    frame.len(),
                    record.joints
                ),
            });
        }
        let parsed = match SkeletonSequence::from_frames(id.clone(), record.joints, &record.frames) {
            Ok(mut seq) => {
                seq.subject = record.subject;
                seq.view = record.view;
                Parsed::Accepted(RawSequence {
                    sequence: seq,
                    label_name: record.label,
                })
            }
            Err(err) => Parsed::Rejected(
                Rejection {
                    source: format!("{}:{lineno}", path.display()),
                    kind: err.kind().to_string(),
                    message: err.to_string(),
                },
                err,
            ),
        };
        out.push(parsed);
    }
    Ok(out)
}

struct CsvName {
    label: String,
    subject: u32,
    view: u32,
}

fn parse_csv_name(stem: &str) -> Option<CsvName> {
    let parts: Vec<&str> = stem.split('_').collect();
    if parts.len() < 4 {
        return None;
    }
    let n = parts.len();
    let subject = parts[n - 3].strip_prefix('s')?.parse().ok()?;
    let view = parts[n - 2].strip_prefix('v')?.parse().ok()?;
    if parts[n - 1].is_empty() {
        return None;
    }
    let label = parts[..n - 3].join("_");
    if label.is_empty() {
        return None;
    }
    Some(CsvName {
        label,
        subject,
        view,
    })
}

fn read_csv_dir(dir: &Path) -> Result<Vec<Parsed>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .collect();
    files.sort();
    files.par_iter().map(|f| read_csv_file(f)).collect()
}

fn read_csv_file(path: &Path) -> Result<Parsed> {
    let file_name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let name = parse_csv_name(&stem).ok_or_else(|| Error::Parse {
        path: path.to_path_buf(),
        line: 0,
        column: None,
        message: "file name does not match <label>_s<subject>_v<view>_<id>.csv".into(),
    })?;

    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: 0,
            column: None,
            message: e.to_string(),
        })?;

    let mut frames: Vec<Vec<f64>> = Vec::new();
    let mut non_finite: Option<(usize, usize)> = None;
    for record in reader.records() {
        let record = record.map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: e.position().map_or(0, |p| p.line() as usize),
            column: None,
            message: e.to_string(),
        })?;
        let line = record.position().map_or(frames.len() + 1, |p| p.line() as usize);
        let mut frame = Vec::with_capacity(record.len());
        for (col, field) in record.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| Error::Parse {
                path: path.to_path_buf(),
                line,
                column: Some(col + 1),
                message: format!("cannot parse {field:?} as a number"),
            })?;
            if !v.is_finite() && non_finite.is_none() {
                non_finite = Some((line, col + 1));
            }
            frame.push(v);
        }
        if frame.len() % 3 != 0 || frame.is_empty() {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line,
                column: None,
                message: format!("{} columns is not a positive multiple of 3", frame.len()),
            });
        }
        frames.push(frame);
    }

    if let Some((line, column)) = non_finite {
        let err = Error::Parse {
            path: path.to_path_buf(),
            line,
            column: Some(column),
            message: "non-finite coordinate".into(),
        };
        return Ok(reject(&file_name, err));
    }
    let joints = frames.first().map_or(0, |f| f.len() / 3);
    if frames.len() < 2 {
        return Ok(reject(&file_name, Error::TooShort(frames.len())));
    }
    let t = frames.len();
    let mut coords = Matrix::zeros(3 * joints, t);
    for (col, frame) in frames.iter().enumerate() {
        for (row, &v) in frame.iter().enumerate() {
            coords[(row, col)] = v;
        }
    }
    let seq = SkeletonSequence::new(file_name, joints, coords)?
        .with_subject(name.subject)
        .with_view(name.view);
    Ok(Parsed::Accepted(RawSequence {
        sequence: seq,
        label_name: Some(name.label),
    }))
}

fn reject(source: &str, err: Error) -> Parsed {
    Parsed::Rejected(
        Rejection {
            source: source.to_string(),
            kind: err.kind().to_string(),
            message: err.to_string(),
        },
        err,
    )
}
