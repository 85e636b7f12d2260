//! Stable seed derivation from a base seed, a list of labels and an index.

use sha2::{Digest, Sha256};

/// First eight bytes (little endian) of SHA-256 over the base seed, each
/// label length-prefixed, and the index. Independent of platform and thread
/// scheduling.
pub fn derive_seed(base_seed: u64, labels: &[&str], index: u64) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(base_seed.to_le_bytes());
    for label in labels {
        hasher.update((label.len() as u64).to_le_bytes());
        hasher.update(label.as_bytes());
    }
    hasher.update(index.to_le_bytes());
    let digest = hasher.finalize();
    let mut head = [0u8; 8];
    head.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(head)
}
