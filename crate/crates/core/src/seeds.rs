//! Every random component draws from its own stream, derived from the run's
//! single master seed as the first eight bytes (little-endian) of
//! `sha256(master.to_le_bytes() || label)`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub const SYNTH: &str = "synth";
pub const SPLIT: &str = "split";
pub const INIT: &str = "init";
pub const SHUFFLE: &str = "shuffle";
pub const NULL_LABELS: &str = "null-labels";

pub fn derive_seed(master: u64, label: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(master.to_le_bytes());
    h.update(label.as_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}

pub fn rng_for(master: u64, label: &str) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, label))
}
