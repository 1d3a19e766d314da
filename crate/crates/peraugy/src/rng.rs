//! Seed derivation for named RNG sub-streams.
//!
//! Every random choice in the crate flows from one root seed via
//! [`derive_rng`]. Streams are named by string scopes (for example
//! `["ds", "iter3", "target:alice"]`), so work items can be processed in
//! parallel and in any order without changing the outcome.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// FNV-1a 64-bit hash. Stable across platforms and Rust versions, unlike
/// `DefaultHasher`; used for seed derivation and raw-text embedding keys.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Mixes a root seed with named scope parts into a child seed.
pub fn derive_seed(seed: u64, scope: &[&str]) -> u64 {
    let mut h = fnv1a64(&seed.to_le_bytes());
    for part in scope {
        h = fnv1a64(part.as_bytes()) ^ h.rotate_left(17).wrapping_mul(0x9e37_79b9_7f4a_7c15);
    }
    h
}

/// Deterministic RNG for the sub-stream named by `scope` under `seed`.
pub fn derive_rng(seed: u64, scope: &[&str]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, scope))
}
