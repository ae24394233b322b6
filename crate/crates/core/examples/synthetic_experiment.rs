//! Full pipeline on generated data: 3 classes, 300 train / 300 test split by
//! subject, default FC-size and C grids with 5-fold CV.
//!
//!     cargo run --release --example synthetic_experiment

use logcov::data::SplitProtocol;
use logcov::encoder::EncodingCache;
use logcov::harness::synthetic::{generate, SyntheticConfig};
use logcov::harness::{render_report, run_experiment_on, ExperimentConfig, ReportFormat};

fn main() -> logcov::Result<()> {
    let dataset = generate(&SyntheticConfig::default())?;
    let cfg = ExperimentConfig {
        protocol: SplitProtocol::BySubject {
            test_subjects: vec![1, 3, 5, 7, 9],
        },
        ..ExperimentConfig::default()
    };
    let out = run_experiment_on(&dataset, &cfg, &EncodingCache::in_memory())?;
    print!("{}", render_report(&out.report, ReportFormat::TextTable));
    Ok(())
}
