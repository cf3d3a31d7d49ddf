//! Counter-style deterministic RNG streams.
//!
//! Every stream is keyed by a master seed plus a list of byte labels
//! (component name, replication index, spec hash). The key is hashed into a
//! ChaCha seed, so parallel and serial runs draw identical numbers no matter
//! how work is scheduled.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// Derive an independent stream from a master seed and a label path.
pub fn derive_stream(master_seed: u64, labels: &[&[u8]]) -> ChaCha8Rng {
    let mut hasher = Sha256::new();
    hasher.update(master_seed.to_le_bytes());
    for label in labels {
        hasher.update((label.len() as u64).to_le_bytes());
        hasher.update(label);
    }
    let digest = hasher.finalize();
    let mut seed = [0u8; 32];
    seed.copy_from_slice(&digest);
    ChaCha8Rng::from_seed(seed)
}

/// Stream for one component of one replication.
pub fn component_stream(seed: u64, component: &str) -> ChaCha8Rng {
    derive_stream(seed, &[component.as_bytes()])
}

/// Sub-seed for replication `rep` of the spec identified by `spec_hash`.
pub fn replication_seed(master_seed: u64, spec_hash: &[u8; 32], rep: u64) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(master_seed.to_le_bytes());
    hasher.update(spec_hash);
    hasher.update(rep.to_le_bytes());
    let digest = hasher.finalize();
    u64::from_le_bytes(digest[..8].try_into().unwrap())
}
