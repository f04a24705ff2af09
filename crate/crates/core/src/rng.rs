//! Deterministic RNG streams.
//!
//! Every stochastic operation takes an explicit RNG. Replicate-level
//! parallelism uses one independently seeded stream per replicate, derived
//! from `(seed, replicate index)` by a splittable counter scheme.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// splitmix64 finalizer; decorrelates consecutive counters.
fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// RNG stream for replicate `index` of a run seeded with `seed`.
pub fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&splitmix64(seed).to_le_bytes());
    key[8..16].copy_from_slice(&splitmix64(seed ^ 0xa5a5_a5a5_a5a5_a5a5).to_le_bytes());
    key[16..24].copy_from_slice(&splitmix64(index).to_le_bytes());
    key[24..32].copy_from_slice(&splitmix64(index ^ 0x5a5a_5a5a_5a5a_5a5a).to_le_bytes());
    ChaCha8Rng::from_seed(key)
}
