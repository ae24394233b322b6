use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use sha2::{Digest, Sha256};

use super::{encode, EncoderConfig};
use crate::data::SkeletonSequence;
use crate::error::Result;
use crate::linalg::TangentVector;

/// Environment variable naming a directory for the on-disk encoding cache.
pub const CACHE_DIR_ENV: &str = "LOGCOV_CACHE_DIR";

/// Memoizes encodings keyed by sequence id, content and encoder config.
///
/// Safe to share across threads. With a directory attached, entries are also
/// persisted as raw little-endian `f64` files.
#[derive(Debug, Default)]
pub struct EncodingCache {
    entries: Mutex<HashMap<[u8; 32], Arc<TangentVector>>>,
    dir: Option<PathBuf>,
    hits: AtomicUsize,
    misses: AtomicUsize,
}

impl EncodingCache {
    pub fn in_memory() -> Self {
        EncodingCache::default()
    }

    pub fn with_dir(dir: impl Into<PathBuf>) -> Self {
        EncodingCache {
            dir: Some(dir.into()),
            ..EncodingCache::default()
        }
    }

    /// Uses `LOGCOV_CACHE_DIR` for persistence when set.
    pub fn from_env() -> Self {
        match std::env::var_os(CACHE_DIR_ENV) {
            Some(d) if !d.is_empty() => EncodingCache::with_dir(PathBuf::from(d)),
            _ => EncodingCache::in_memory(),
        }
    }

    pub fn hits(&self) -> usize {
        self.hits.load(Ordering::Relaxed)
    }

    pub fn misses(&self) -> usize {
        self.misses.load(Ordering::Relaxed)
    }

    pub fn len(&self) -> usize {
        self.entries.lock().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get_or_encode(&self, seq: &SkeletonSequence, cfg: &EncoderConfig) -> Result<TangentVector> {
        let key = cache_key(seq, cfg);
        if let Some(v) = self.entries.lock().expect("cache lock").get(&key) {
            self.hits.fetch_add(1, Ordering::Relaxed);
            return Ok((**v).clone());
        }
        if let Some(v) = self.dir.as_deref().and_then(|d| read_entry(d, &key, cfg)) {
            self.hits.fetch_add(1, Ordering::Relaxed);
            self.insert(key, &v);
            return Ok(v);
        }
        self.misses.fetch_add(1, Ordering::Relaxed);
        let v = encode(seq, cfg)?;
        if let Some(d) = &self.dir {
            if let Err(e) = write_entry(d, &key, &v) {
                log::warn!("encoding cache write to {} failed: {e}", d.display());
            }
        }
        self.insert(key, &v);
        Ok(v)
    }

    fn insert(&self, key: [u8; 32], v: &TangentVector) {
        self.entries
            .lock()
            .expect("cache lock")
            .insert(key, Arc::new(v.clone()));
    }
}

fn cache_key(seq: &SkeletonSequence, cfg: &EncoderConfig) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update((seq.id().len() as u64).to_le_bytes());
    h.update(seq.id().as_bytes());
    h.update((seq.joints() as u64).to_le_bytes());
    h.update((seq.frames() as u64).to_le_bytes());
    for x in seq.coords().as_slice() {
        h.update(x.to_bits().to_le_bytes());
    }
    h.update(cfg.fingerprint_bytes());
    h.finalize().into()
}

fn entry_path(dir: &Path, key: &[u8; 32]) -> PathBuf {
    let mut name = String::with_capacity(68);
    for b in key {
        let _ = write!(name, "{b:02x}");
    }
    name.push_str(".f64");
    dir.join(name)
}

fn read_entry(dir: &Path, key: &[u8; 32], cfg: &EncoderConfig) -> Option<TangentVector> {
    let bytes = fs::read(entry_path(dir, key)).ok()?;
    if bytes.len() % 8 != 0 {
        return None;
    }
    let values = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    TangentVector::new(values, cfg.offdiag_scale).ok()
}

fn write_entry(dir: &Path, key: &[u8; 32], v: &TangentVector) -> std::io::Result<()> {
    fs::create_dir_all(dir)?;
    let mut bytes = Vec::with_capacity(v.len() * 8);
    for x in v.values() {
        bytes.extend_from_slice(&x.to_le_bytes());
    }
    let path = entry_path(dir, key);
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes)?;
    fs::rename(tmp, path)
}
