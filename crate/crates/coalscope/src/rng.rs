//! Deterministic per-replicate random streams. Every replicate draws
//! from its own ChaCha stream keyed by (master seed, scenario tag,
//! replicate index), so results are independent of thread scheduling
//! and repeatable across runs.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// Stream for replicate `index` of the scenario named `tag` under
/// `seed`. The tag is folded into the key with FNV-1a so distinct
/// scenarios sharing a seed never share a stream.
pub fn replicate_rng(seed: u64, tag: &str, index: u64) -> ChaCha12Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&fnv1a(tag.as_bytes()).to_le_bytes());
    key[16..24].copy_from_slice(&index.to_le_bytes());
    ChaCha12Rng::from_seed(key)
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}
