//! The `logcov` command line.
//!
//! Configuration precedence is: explicit flag (`--seed`, `--dataset`, ...),
//! then `--set key=value` overrides, then the config file, then defaults.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Value};

use crate::bundle::ModelBundle;
use crate::data::{load_dataset, load_dataset_with_report, read_sequences, root_subtract, DatasetFormat, SplitProtocol};
use crate::encoder::{csv_field, encode_all, write_features_csv, EncoderConfig, EncodingCache};
use crate::error::{Error, Result};
use crate::harness::{
    bench, emit_report, evaluate_bundle, load_config, run_experiment, BenchConfig, ExperimentConfig,
    ReportFormat,
};
use crate::net::OptimizerKind;
use crate::selftest;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Text,
    Json,
    Csv,
}

impl From<OutputFormat> for ReportFormat {
    fn from(f: OutputFormat) -> Self {
        match f {
            OutputFormat::Text => ReportFormat::TextTable,
            OutputFormat::Json => ReportFormat::Json,
            OutputFormat::Csv => ReportFormat::Csv,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "logcov", version, about = "Covariance-descriptor classifier for skeleton sequences")]
pub struct Cli {
    /// Master seed for every random stream.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Report and diagnostics format.
    #[arg(long, global = true, value_enum, default_value = "text")]
    pub format: OutputFormat,
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    /// Override a config key, e.g. `--set train.cg_max_iters=50`. Values are
    /// parsed as JSON, falling back to a plain string.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse a dataset, report accepted and rejected sequences.
    Ingest {
        input: PathBuf,
        #[arg(long)]
        input_format: Option<DatasetFormat>,
        /// Write the accepted sequences as jsonl.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write encoded vectors as CSV, label first.
        #[arg(long)]
        dump_features: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        root_index: usize,
    },
    /// Grid-search, retrain on the training split and save a model bundle.
    Train {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        dataset: Option<PathBuf>,
        #[arg(long)]
        input_format: Option<DatasetFormat>,
        #[arg(long, short)]
        out: PathBuf,
        /// Also write the full experiment report here.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Classify sequences with a saved bundle; writes CSV.
    Predict {
        #[arg(long)]
        bundle: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        input_format: Option<DatasetFormat>,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Score a saved bundle on a labeled dataset.
    Evaluate {
        #[arg(long)]
        bundle: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        input_format: Option<DatasetFormat>,
        /// Split protocol as inline JSON or a JSON file; the test split is
        /// scored. Without it every sequence is scored.
        #[arg(long)]
        protocol: Option<String>,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Run the full experiment and emit the report.
    Gridsearch {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        dataset: Option<PathBuf>,
        #[arg(long)]
        input_format: Option<DatasetFormat>,
        #[arg(long, short)]
        out: Option<PathBuf>,
        /// Also save the retrained model.
        #[arg(long)]
        bundle: Option<PathBuf>,
    },
    /// Time encoding and training on synthetic data.
    Bench {
        #[arg(long, default_value_t = 600)]
        sequences: usize,
        #[arg(long, default_value_t = 64)]
        fc_size: usize,
        #[arg(long, value_enum)]
        optimizer: Option<BenchOptimizer>,
    },
    /// Run the embedded invariant checks. Exit status 2 on failure.
    Selftest {
        #[arg(long, hide = true)]
        inject_fault: bool,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum BenchOptimizer {
    Cg,
    Adam,
}

/// Sets `a.b.c = value` on the JSON form of `base`.
pub fn apply_overrides<T: Serialize + DeserializeOwned>(base: T, overrides: &[String]) -> Result<T> {
    if overrides.is_empty() {
        return Ok(base);
    }
    let mut root = serde_json::to_value(&base).map_err(|e| Error::Config(e.to_string()))?;
    for item in overrides {
        let (key, raw) = item
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override {item:?} is not KEY=VALUE")))?;
        let value: Value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
        let (parent, leaf) = match key.rsplit_once('.') {
            Some((p, l)) => (format!("/{}", p.replace('.', "/")), l),
            None => (String::new(), key),
        };
        let obj = root
            .pointer_mut(&parent)
            .and_then(Value::as_object_mut)
            .filter(|o| o.contains_key(leaf))
            .ok_or_else(|| Error::Config(format!("unknown config key {key:?}")))?;
        obj.insert(leaf.to_string(), value);
    }
    serde_json::from_value(root).map_err(|e| Error::Config(format!("bad override: {e}")))
}

fn format_of(path: &Path, given: Option<DatasetFormat>) -> DatasetFormat {
    given.unwrap_or_else(|| DatasetFormat::detect(path))
}

fn experiment_config(
    cli: &Cli,
    config: Option<&Path>,
    dataset: Option<&Path>,
    input_format: Option<DatasetFormat>,
) -> Result<ExperimentConfig> {
    let base = match config {
        Some(p) => load_config(p)?,
        None => ExperimentConfig::default(),
    };
    let mut cfg = apply_overrides(base, &cli.overrides)?;
    if let Some(d) = dataset {
        cfg.dataset = Some(d.to_path_buf());
    }
    if input_format.is_some() {
        cfg.dataset_format = input_format;
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn write_out(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| Error::io(p, e)),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Error::io("<stdout>", e)),
    }
}

fn print_value(format: OutputFormat, value: &Value, text: String) -> Result<()> {
    let out = match format {
        OutputFormat::Json => format!("{}\n", serde_json::to_string_pretty(value).expect("json value")),
        OutputFormat::Csv => {
            let obj = value.as_object().cloned().unwrap_or_default();
            let keys: Vec<&String> = obj.keys().collect();
            let vals: Vec<String> = obj
                .values()
                .map(|v| match v {
                    Value::String(s) => csv_field(s),
                    other => csv_field(&other.to_string()),
                })
                .collect();
            let header: Vec<String> = keys.iter().map(|k| csv_field(k)).collect();
            format!("{}\n{}\n", header.join(","), vals.join(","))
        }
        OutputFormat::Text => text,
    };
    write_out(None, &out)
}

fn cmd_ingest(
    cli: &Cli,
    input: &Path,
    input_format: Option<DatasetFormat>,
    out: Option<&Path>,
    dump: Option<&Path>,
    root_index: usize,
) -> Result<()> {
    let format = format_of(input, input_format);
    let (raw, report) = read_sequences(input, format)?;
    if let Some(out) = out {
        let (dataset, _) = load_dataset_with_report(input, format)?;
        crate::data::save_dataset(&dataset, out)?;
    }
    if let Some(dump) = dump {
        let encoder: EncoderConfig = apply_overrides(EncoderConfig::default(), &cli.overrides)?;
        let prepared = raw
            .iter()
            .map(|r| root_subtract(&r.sequence, root_index))
            .collect::<Result<Vec<_>>>()?;
        let vectors = encode_all(&prepared, &encoder, Some(&EncodingCache::from_env()))?;
        let labels: Vec<String> = raw.iter().map(|r| r.label_name.clone().unwrap_or_default()).collect();
        write_features_csv(dump, &labels, &vectors)?;
    }
    let joints = raw[0].sequence.joints();
    let mut text = format!("accepted {} sequences (J={joints}), rejected {}\n", report.accepted, report.rejected.len());
    for r in &report.rejected {
        text.push_str(&format!("  rejected {}: {}: {}\n", r.source, r.kind, r.message));
    }
    let value = json!({
        "accepted": report.accepted,
        "rejected": report.rejected.len(),
        "joints": joints,
        "rejections": report.rejected,
    });
    if cli.format == OutputFormat::Csv {
        let mut csv = String::from("source,kind,message\n");
        for r in &report.rejected {
            csv.push_str(&format!("{},{},{}\n", csv_field(&r.source), r.kind, csv_field(&r.message)));
        }
        return write_out(None, &csv);
    }
    print_value(cli.format, &value, text)
}

fn cmd_train(
    cli: &Cli,
    config: Option<&Path>,
    dataset: Option<&Path>,
    input_format: Option<DatasetFormat>,
    out: &Path,
    report_path: Option<&Path>,
) -> Result<()> {
    let cfg = experiment_config(cli, config, dataset, input_format)?;
    let outcome = run_experiment(&cfg)?;
    outcome.bundle.save(out)?;
    if let Some(p) = report_path {
        emit_report(&outcome.report, cli.format.into(), Some(p))?;
    }
    let r = &outcome.report;
    let sel = r.selected.as_ref().expect("training always selects");
    let pct = |x: Option<f64>| x.map_or_else(|| "-".to_string(), |v| format!("{:.1}%", 100.0 * v));
    let text = format!(
        "selected fc_size={} C_reg={}\ntrain accuracy {}\ntest accuracy {}\nbundle written to {}\n",
        sel.fc_size,
        sel.c_reg,
        pct(r.train_accuracy),
        pct(r.test_accuracy),
        out.display()
    );
    let value = json!({
        "fc_size": sel.fc_size,
        "c_reg": sel.c_reg,
        "train_accuracy": r.train_accuracy,
        "test_accuracy": r.test_accuracy,
        "bundle": out.display().to_string(),
    });
    print_value(cli.format, &value, text)
}

fn cmd_predict(bundle: &Path, input: &Path, input_format: Option<DatasetFormat>, out: Option<&Path>) -> Result<()> {
    let bundle = ModelBundle::load(bundle)?;
    let (raw, _) = match read_sequences(input, format_of(input, input_format)) {
        Err(Error::EmptyDataset) => return Err(Error::Empty),
        other => other?,
    };
    let seqs: Vec<_> = raw.into_iter().map(|r| r.sequence).collect();
    let preds = bundle.predict(&seqs, Some(&EncodingCache::from_env()))?;
    let mut csv = String::from("id,label");
    for name in &bundle.class_names {
        csv.push_str(&format!(",{}", csv_field(&format!("score_{name}"))));
    }
    csv.push('\n');
    for p in preds {
        csv.push_str(&format!("{},{}", csv_field(&p.id), csv_field(&bundle.class_names[p.label])));
        for s in p.scores {
            csv.push_str(&format!(",{s}"));
        }
        csv.push('\n');
    }
    write_out(out, &csv)
}

fn parse_protocol(arg: &str) -> Result<SplitProtocol> {
    let trimmed = arg.trim_start();
    if trimmed.starts_with('{') {
        serde_json::from_str(trimmed).map_err(|e| Error::Config(format!("bad protocol: {e}")))
    } else {
        let path = Path::new(arg);
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::json(path, e))
    }
}

fn cmd_evaluate(
    cli: &Cli,
    bundle: &Path,
    dataset: &Path,
    input_format: Option<DatasetFormat>,
    protocol: Option<&str>,
    out: Option<&Path>,
) -> Result<()> {
    let model = ModelBundle::load(bundle)?;
    let data = load_dataset(dataset, format_of(dataset, input_format))?;
    let protocol = protocol.map(parse_protocol).transpose()?;
    let mut report = evaluate_bundle(&model, &data, protocol.as_ref(), Some(&EncodingCache::from_env()))?;
    report.dataset = dataset.display().to_string();
    emit_report(&report, cli.format.into(), out)
}

fn cmd_gridsearch(
    cli: &Cli,
    config: Option<&Path>,
    dataset: Option<&Path>,
    input_format: Option<DatasetFormat>,
    out: Option<&Path>,
    bundle: Option<&Path>,
) -> Result<()> {
    let cfg = experiment_config(cli, config, dataset, input_format)?;
    let outcome = run_experiment(&cfg)?;
    if let Some(b) = bundle {
        outcome.bundle.save(b)?;
    }
    emit_report(&outcome.report, cli.format.into(), out)
}

fn cmd_bench(cli: &Cli, sequences: usize, fc_size: usize, optimizer: Option<BenchOptimizer>) -> Result<()> {
    let mut cfg = BenchConfig {
        sequences,
        fc_size,
        ..BenchConfig::default()
    };
    if let Some(o) = optimizer {
        cfg.train.optimizer = match o {
            BenchOptimizer::Cg => OptimizerKind::Cg,
            BenchOptimizer::Adam => OptimizerKind::Adam,
        };
    }
    let mut cfg = apply_overrides(cfg, &cli.overrides)?;
    if let Some(s) = cli.seed {
        cfg.train.seed = s;
        cfg.synthetic.seed = s;
    }
    let r = bench(&cfg)?;
    let text = format!(
        "sequences        {}\nfeature dim      {}\nencode           {:.3}s ({:.3} ms/sequence)\npretrain         {:.3}s ({} iterations)\nsvm              {:.3}s\ntotal            {:.3}s\ntrain accuracy   {:.1}%\n",
        r.sequences,
        r.feature_dim,
        r.encode_seconds,
        r.encode_ms_per_sequence,
        r.pretrain_seconds,
        r.pretrain_iterations,
        r.svm_seconds,
        r.total_seconds,
        100.0 * r.train_accuracy
    );
    let value = serde_json::to_value(&r).expect("bench report serializes");
    print_value(cli.format, &value, text)
}

/// Exit status 2 when any check fails.
fn cmd_selftest(cli: &Cli, inject_fault: bool) -> Result<bool> {
    let results = selftest::run(cli.seed.unwrap_or(0), inject_fault);
    let ok = results.iter().all(|r| r.passed);
    let mut text = String::new();
    for r in &results {
        let status = if r.passed { "PASS" } else { "FAIL" };
        text.push_str(&format!("{status}  {:<44} worst {:.3e} (bound {:.0e})\n", r.name, r.worst, r.bound));
    }
    let value = json!({ "passed": ok, "checks": results });
    print_value(cli.format, &value, text)?;
    Ok(ok)
}

fn init_logging(cli: &Cli) {
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let mut builder = env_logger::Builder::new();
    builder.filter_level(level).parse_env("LOGCOV_LOG");
    if cli.format == OutputFormat::Json {
        builder.format(|buf, record| {
            let line = json!({
                "level": record.level().to_string().to_lowercase(),
                "target": record.target(),
                "message": record.args().to_string(),
            });
            writeln!(buf, "{line}")
        });
    }
    let _ = builder.try_init();
}

fn report_error(format: OutputFormat, e: &Error) {
    if format == OutputFormat::Json {
        eprintln!("{}", json!({ "error": e.kind(), "message": e.to_string() }));
    } else {
        eprintln!("error: {e}");
    }
}

fn dispatch(cli: &Cli) -> Result<bool> {
    match &cli.command {
        Command::Ingest {
            input,
            input_format,
            out,
            dump_features,
            root_index,
        } => cmd_ingest(cli, input, *input_format, out.as_deref(), dump_features.as_deref(), *root_index).map(|_| true),
        Command::Train {
            config,
            dataset,
            input_format,
            out,
            report,
        } => cmd_train(cli, config.as_deref(), dataset.as_deref(), *input_format, out, report.as_deref()).map(|_| true),
        Command::Predict {
            bundle,
            input,
            input_format,
            out,
        } => cmd_predict(bundle, input, *input_format, out.as_deref()).map(|_| true),
        Command::Evaluate {
            bundle,
            dataset,
            input_format,
            protocol,
            out,
        } => cmd_evaluate(cli, bundle, dataset, *input_format, protocol.as_deref(), out.as_deref()).map(|_| true),
        Command::Gridsearch {
            config,
            dataset,
            input_format,
            out,
            bundle,
        } => cmd_gridsearch(cli, config.as_deref(), dataset.as_deref(), *input_format, out.as_deref(), bundle.as_deref())
            .map(|_| true),
        Command::Bench {
            sequences,
            fc_size,
            optimizer,
        } => cmd_bench(cli, *sequences, *fc_size, *optimizer).map(|_| true),
        Command::Selftest { inject_fault } => cmd_selftest(cli, *inject_fault),
    }
}

/// Parses `std::env::args` and runs the chosen subcommand.
pub fn main() -> ExitCode {
    let cli = Cli::parse();
    init_logging(&cli);
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("could not size the thread pool: {e}");
        }
    }
    match dispatch(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            report_error(cli.format, &e);
            ExitCode::from(1)
        }
    }
}
