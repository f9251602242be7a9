//! Seeded RNG streams.
//!
//! Every stochastic component derives its own ChaCha8 stream from a base seed
//! and a stream tag, so independent pieces (AP placement, shadowing draws for
//! sample i, weight init, shuffling) stay decoupled: adding draws to one
//! stream never perturbs another, which is what keeps datasets and training
//! runs bit-reproducible.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer; decorrelates nearby (seed, tag) pairs.
#[inline]
pub fn mix(seed: u64, tag: u64) -> u64 {
    let mut z = seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic stream for `(seed, tag)`.
pub fn stream(seed: u64, tag: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix(seed, tag))
}

/// Stream tags used across the crate. Keeping them in one place avoids
/// accidental collisions between modules.
pub mod tags {
    pub const AP_PLACEMENT: u64 = 1;
    pub const TRAJECTORY: u64 = 2;
    pub const MAG_FIELD: u64 = 3;
    pub const SAMPLE_BASE: u64 = 0x1000;
    pub const WEIGHT_INIT: u64 = 11;
    pub const SHUFFLE: u64 = 12;
    pub const SPLIT: u64 = 13;
    pub const SUBSAMPLE: u64 = 14;
}

/// Per-sample stream: independent of how many draws other samples consume.
pub fn sample_stream(seed: u64, index: usize) -> ChaCha8Rng {
    stream(seed, tags::SAMPLE_BASE.wrapping_add(index as u64).wrapping_mul(2).wrapping_add(1))
}
