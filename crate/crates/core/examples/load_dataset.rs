//! Writes a small labeled dataset as jsonl, reads it back and splits it.
//!
//! Run with `cargo run --example load_dataset [-- path.jsonl]`.

use std::path::PathBuf;

use logcov::data::{load_dataset_with_report, save_dataset, split, DatasetFormat, SplitProtocol};
use logcov::harness::synthetic::{generate, SyntheticConfig};

fn main() -> logcov::Result<()> {
    let path = std::env::args()
        .nth(1)
        .map_or_else(|| std::env::temp_dir().join("logcov_example.jsonl"), PathBuf::from);
    let cfg = SyntheticConfig { per_class: 8, ..SyntheticConfig::default() };
    save_dataset(&generate(&cfg)?, &path)?;
    println!("wrote {}", path.display());

    let (dataset, report) = load_dataset_with_report(&path, DatasetFormat::detect(&path))?;
    println!(
        "accepted {} sequences, rejected {}; classes {:?}",
        report.accepted,
        report.rejected.len(),
        dataset.class_names()
    );

    let protocol = SplitProtocol::BySubject { test_subjects: vec![1, 3, 5, 7] };
    let (train, test) = split(&dataset, &protocol)?;
    println!("cross-subject split: {} train, {} test", train.len(), test.len());
    Ok(())
}
