//! Seed derivation. Every random stream in the crate is keyed by a parent
//! seed plus a role tag and an index, so replicates and per-model streams can
//! be generated in any order (or in parallel) with identical results.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub type StreamRng = ChaCha8Rng;

/// Derive a child seed from `parent`, a role `tag` and an `index`.
pub fn derive(parent: u64, tag: &str, index: u64) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(parent.to_le_bytes());
    hasher.update((tag.len() as u64).to_le_bytes());
    hasher.update(tag.as_bytes());
    hasher.update(index.to_le_bytes());
    let digest = hasher.finalize();
    let mut out = [0u8; 8];
    out.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(out)
}

/// Derive a child seed keyed by a string label (e.g. a model id).
pub fn derive_keyed(parent: u64, tag: &str, key: &str) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(parent.to_le_bytes());
    hasher.update((tag.len() as u64).to_le_bytes());
    hasher.update(tag.as_bytes());
    hasher.update((key.len() as u64).to_le_bytes());
    hasher.update(key.as_bytes());
    let digest = hasher.finalize();
    let mut out = [0u8; 8];
    out.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(out)
}

pub fn stream(parent: u64, tag: &str, index: u64) -> StreamRng {
    StreamRng::seed_from_u64(derive(parent, tag, index))
}

pub fn keyed_stream(parent: u64, tag: &str, key: &str) -> StreamRng {
    StreamRng::seed_from_u64(derive_keyed(parent, tag, key))
}
