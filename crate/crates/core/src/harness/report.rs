use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::SplitProtocol;
use crate::encoder::csv_field;
use crate::error::{Error, Result};
use crate::net::OptimizerKind;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Mean validation accuracy of one `(fc_size, C_reg)` pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridEntry {
    pub fc_size: usize,
    pub c_reg: f64,
    pub fold_accuracies: Vec<f64>,
    pub mean_accuracy: Option<f64>,
    /// Set when any fold failed; the entry is then excluded from selection.
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub fc_size: usize,
    pub c_reg: f64,
    pub validation_accuracy: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub stage: String,
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema_version: u32,
    pub dataset: String,
    pub protocol: Option<SplitProtocol>,
    pub class_names: Vec<String>,
    pub n_train: usize,
    pub n_test: usize,
    pub optimizer: Option<OptimizerKind>,
    pub grid: Vec<GridEntry>,
    pub selected: Option<Selection>,
    pub train_accuracy: Option<f64>,
    pub test_accuracy: Option<f64>,
    /// Rows are true classes, columns predicted classes.
    pub confusion: Option<Vec<Vec<usize>>>,
    pub timings: Vec<StageTiming>,
    /// True when at least one grid configuration failed.
    pub partial: bool,
    pub warnings: Vec<String>,
    /// Reads of test-split data that happened before the final evaluation.
    pub test_reads_before_final: usize,
}

impl ExperimentReport {
    pub fn total_seconds(&self) -> f64 {
        self.timings.iter().map(|t| t.seconds).sum()
    }

    /// Copy with wall-clock timings zeroed, for run-to-run comparisons.
    pub fn without_timings(&self) -> Self {
        let mut r = self.clone();
        r.timings.iter_mut().for_each(|t| t.seconds = 0.0);
        r
    }

    pub fn from_json(bytes: &[u8], path: &Path) -> Result<Self> {
        serde_json::from_slice(bytes).map_err(|e| Error::json(path, e))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReportFormat {
    #[default]
    TextTable,
    Json,
    Csv,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "text" | "text-table" | "table" => Ok(ReportFormat::TextTable),
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            other => Err(Error::Config(format!("unknown report format {other:?}"))),
        }
    }
}

fn percent(x: Option<f64>) -> String {
    x.map_or_else(|| "-".to_string(), |v| format!("{:.1}%", 100.0 * v))
}

fn method_name(s: &Selection) -> String {
    format!("logcov fc={} C={}", s.fc_size, s.c_reg)
}

pub fn render_report(report: &ExperimentReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(report).expect("report serializes");
            s.push('\n');
            s
        }
        ReportFormat::TextTable => render_text(report),
        ReportFormat::Csv => render_csv(report),
    }
}

fn render_text(r: &ExperimentReport) -> String {
    let mut out = String::new();
    let method = r.selected.as_ref().map_or_else(|| "logcov".to_string(), method_name);
    let width = method.len().max(6) + 4;
    let _ = writeln!(out, "{:<width$}Accuracy", "Method");
    let _ = writeln!(out, "{:<width$}{}", method, percent(r.test_accuracy));
    let _ = writeln!(out);
    let _ = writeln!(out, "dataset: {}  train: {}  test: {}", r.dataset, r.n_train, r.n_test);
    if let Some(acc) = r.train_accuracy {
        let _ = writeln!(out, "train accuracy: {}", percent(Some(acc)));
    }
    if !r.grid.is_empty() {
        let _ = writeln!(out);
        let _ = writeln!(out, "{:>8} {:>10} {:>10}", "fc_size", "C_reg", "val acc");
        for e in &r.grid {
            let status = match &e.error {
                Some(msg) => format!("FAILED: {msg}"),
                None => percent(e.mean_accuracy),
            };
            let _ = writeln!(out, "{:>8} {:>10} {:>10}", e.fc_size, e.c_reg, status);
        }
    }
    if let Some(cm) = &r.confusion {
        let _ = writeln!(out);
        let _ = writeln!(out, "confusion (rows: true, columns: predicted)");
        for (name, row) in r.class_names.iter().zip(cm) {
            let cells: Vec<String> = row.iter().map(|c| format!("{c:>5}")).collect();
            let _ = writeln!(out, "{name:>12} {}", cells.join(""));
        }
    }
    if !r.timings.is_empty() {
        let _ = writeln!(out);
        for t in &r.timings {
            let _ = writeln!(out, "{:<14}{:>10.3}s", t.stage, t.seconds);
        }
    }
    if r.partial {
        let _ = writeln!(out, "\nPARTIAL: some grid configurations failed");
    }
    for w in &r.warnings {
        let _ = writeln!(out, "warning: {w}");
    }
    out
}

fn render_csv(r: &ExperimentReport) -> String {
    let mut out = String::from("kind,fc_size,c_reg,accuracy,status\n");
    let acc = |x: Option<f64>| x.map_or_else(String::new, |v| v.to_string());
    for e in &r.grid {
        let status = e.error.as_deref().map_or_else(|| "ok".to_string(), csv_field);
        let _ = writeln!(out, "validation,{},{},{},{}", e.fc_size, e.c_reg, acc(e.mean_accuracy), status);
    }
    if let Some(s) = &r.selected {
        let _ = writeln!(out, "train,{},{},{},ok", s.fc_size, s.c_reg, acc(r.train_accuracy));
        let _ = writeln!(out, "test,{},{},{},ok", s.fc_size, s.c_reg, acc(r.test_accuracy));
    }
    out
}

/// Writes the rendered report to `path`, or stdout when `None`.
pub fn emit_report(report: &ExperimentReport, format: ReportFormat, path: Option<&Path>) -> Result<()> {
    let text = render_report(report, format);
    match path {
        Some(p) => fs::write(p, text).map_err(|e| Error::io(p, e)),
        None => {
            use std::io::Write;
            std::io::stdout()
                .write_all(text.as_bytes())
                .map_err(|e| Error::io("<stdout>", e))
        }
    }
}
