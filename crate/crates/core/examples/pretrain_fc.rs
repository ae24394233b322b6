//! Pretrains the sigmoid FC layer with a softmax head, once with full-batch
//! CG and once with minibatch ADAM, then reads out the hidden features.
//!
//! Run with `cargo run --release --example pretrain_fc`.

use logcov::encoder::{encode_all, to_feature_matrix, EncoderConfig};
use logcov::harness::synthetic::{generate, SyntheticConfig};
use logcov::net::{extract_features, pretrain, OptimizerKind, Standardizer, TrainConfig};

fn main() -> logcov::Result<()> {
    let data = generate(&SyntheticConfig { per_class: 60, joints: 8, ..SyntheticConfig::default() })?;
    let vectors = encode_all(data.sequences(), &EncoderConfig::default(), None)?;
    let x = Standardizer::fit(&to_feature_matrix(&vectors)?)?.transform(&to_feature_matrix(&vectors)?)?;
    let labels = data.labels();
    println!("{} samples, {} features, {} classes", x.rows(), x.cols(), data.num_classes());

    for optimizer in [OptimizerKind::Cg, OptimizerKind::Adam] {
        let cfg = TrainConfig { optimizer, cg_max_iters: 100, max_epochs: 200, learning_rate: 1e-2, batch_size: 64, ..TrainConfig::default() };
        let out = pretrain(&x, &labels, data.num_classes(), 16, &cfg)?;
        println!(
            "{optimizer:?}: {} iterations, loss {:.4} -> {:.4}",
            out.iterations,
            out.loss_history.first().copied().unwrap_or(f64::NAN),
            out.loss_history.last().copied().unwrap_or(f64::NAN)
        );
        let hidden = extract_features(&out.model, &x)?;
        println!("  hidden features {}x{}, first row {:.3?}", hidden.rows(), hidden.cols(), &hidden.row(0)[..4]);
    }
    Ok(())
}
