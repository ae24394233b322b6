//! Named random streams derived from one master seed.
//!
//! Each consumer draws from its own stream, so adding draws in one component
//! never shifts the numbers another component sees.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stream {
    Init,
    Shuffle,
    Split,
    Folds,
    Svm,
    Holdout,
    Synthetic,
}

impl Stream {
    fn name(self) -> &'static str {
        match self {
            Stream::Init => "init",
            Stream::Shuffle => "shuffle",
            Stream::Split => "split",
            Stream::Folds => "folds",
            Stream::Svm => "svm",
            Stream::Holdout => "holdout",
            Stream::Synthetic => "synthetic",
        }
    }
}

pub fn derive_seed(master: u64, stream: Stream) -> u64 {
    let mut h = Sha256::new();
    h.update(master.to_le_bytes());
    h.update(stream.name().as_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("sha256 has 32 bytes"))
}

pub fn stream(master: u64, stream: Stream) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, stream))
}
