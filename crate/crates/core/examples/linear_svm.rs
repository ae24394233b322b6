//! One-vs-rest L1-hinge linear SVM on three Gaussian blobs.
//!
//! Run with `cargo run --example linear_svm`.

use logcov::linalg::Matrix;
use logcov::svm::{predict, train_svm_with, SvmOptions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> logcov::Result<()> {
    let centers = [[0.0, 3.0], [3.0, -2.0], [-3.0, -2.0]];
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for i in 0..150 {
        let c = centers[i % 3];
        rows.push([c[0] + rng.gen_range(-1.5..1.5), c[1] + rng.gen_range(-1.5..1.5)]);
        labels.push(i % 3);
    }
    let x = Matrix::from_rows(&rows)?;
    for c_reg in [0.01, 1.0, 100.0] {
        let fit = train_svm_with(&x, &labels, 3, &SvmOptions { c_reg, ..SvmOptions::default() })?;
        let pred = predict(&fit.model, &x)?;
        let correct = pred.iter().zip(&labels).filter(|(p, l)| p == l).count();
        println!("C={c_reg}: train accuracy {correct}/{}", labels.len());
        for s in &fit.subproblems {
            println!(
                "  class {} vs rest: {} epochs, primal {:.4}, dual {:.4}, converged {}",
                s.class, s.epochs, s.primal, s.dual, s.converged
            );
        }
    }
    Ok(())
}
