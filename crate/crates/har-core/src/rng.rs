//! Deterministic RNG construction and seed fan-out.
//!
//! Every stochastic component (fold shuffling, MLP init, forest bootstraps,
//! the synthetic generator) draws from its own ChaCha stream derived from the
//! run seed and a stream tag, so adding or reordering components never
//! perturbs the others.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer; mixes a seed and a stream tag into a new seed.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seeded RNG with a platform-independent stream.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
