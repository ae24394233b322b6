//! Encodes a skeleton sequence into its log-covariance tangent vector.
//!
//! Run with `cargo run --example encode_sequence`.

use logcov::data::{root_subtract, SkeletonSequence};
use logcov::encoder::{covariance, encode, Centering, EncoderConfig};
use logcov::harness::synthetic::{generate_range, SyntheticConfig};

fn main() -> logcov::Result<()> {
    let cfg = SyntheticConfig::default();
    let seq = generate_range(&cfg, 0, 1)?.remove(0);
    println!("sequence {}: J={} joints, T={} frames", seq.id(), seq.joints(), seq.frames());

    let cov = covariance(&seq, Centering::Standard)?;
    println!("covariance is {0}x{0}", cov.dim());

    let enc = EncoderConfig::default();
    let v = encode(&seq, &enc)?;
    println!("tangent vector length {} (3J(3J+1)/2)", v.len());

    // Reversing time and shifting every joint leave the encoding unchanged.
    let order: Vec<usize> = (0..seq.frames()).rev().collect();
    let reversed = seq.reorder_frames(&order)?;
    let shifted_coords = {
        let mut c = seq.coords().clone();
        c.as_mut_slice().iter_mut().for_each(|x| *x += 10.0);
        c
    };
    let shifted = SkeletonSequence::new("shifted", seq.joints(), shifted_coords)?;
    for (name, other) in [("reversed frames", reversed), ("translated", shifted)] {
        let w = encode(&other, &enc)?;
        let diff = v.values().iter().zip(w.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        println!("{name}: max abs difference {diff:.2e}");
    }

    let rooted = root_subtract(&seq, 0)?;
    println!("after root subtraction joint 0 of frame 0: {:?}", &rooted.frame(0)[..3]);
    Ok(())
}
