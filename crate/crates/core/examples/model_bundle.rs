//! Trains a small model, saves it as a bundle, reloads it and predicts.
//!
//! Run with `cargo run --release --example model_bundle`.

use logcov::bundle::ModelBundle;
use logcov::encoder::EncodingCache;
use logcov::harness::synthetic::{generate, generate_range, SyntheticConfig};
use logcov::harness::{run_experiment_on, ExperimentConfig};

fn main() -> logcov::Result<()> {
    let synth = SyntheticConfig { per_class: 30, joints: 10, ..SyntheticConfig::default() };
    let data = generate(&synth)?;
    let cfg = ExperimentConfig { fc_size_grid: vec![16], c_reg_grid: vec![1.0], ..ExperimentConfig::default() };
    let cache = EncodingCache::in_memory();
    let outcome = run_experiment_on(&data, &cfg, &cache)?;
    println!("test accuracy {:.3}", outcome.report.test_accuracy.unwrap_or(f64::NAN));

    let path = std::env::temp_dir().join("logcov_example_bundle.json");
    outcome.bundle.save(&path)?;
    let loaded = ModelBundle::load(&path)?;
    println!("bundle {} (format {}) reloaded: {}", path.display(), loaded.format_version, loaded == outcome.bundle);

    let fresh = generate_range(&synth, data.len(), 6)?;
    for p in loaded.predict(&fresh, None)? {
        println!("{} -> {} scores {:.3?}", p.id, loaded.class_names[p.label], p.scores);
    }
    Ok(())
}
