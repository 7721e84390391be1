//! Deterministic seed derivation.
//!
//! A master seed is split into independent child seeds by hashing
//! `(parent, tag, index)` through SplitMix64. Every consumer (a repetition,
//! the loss stream of a repetition, one agent of a repetition) owns a
//! ChaCha8 generator seeded from its own child seed, so the values drawn by
//! one consumer never depend on how many values another consumer drew or in
//! which order consumers run.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Stream tags.
pub const TAG_REPETITION: u64 = 0x5245_5045_5449_5449;
pub const TAG_LOSS: u64 = 0x4c4f_5353_5354_524d;
pub const TAG_AGENT: u64 = 0x4147_454e_5453_5452;
pub const TAG_COMPARATOR: u64 = 0x434f_4d50_4152_4154;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Child seed for `(tag, index)` under `parent`.
pub fn derive(parent: u64, tag: u64, index: u64) -> u64 {
    splitmix64(splitmix64(parent ^ splitmix64(tag)).wrapping_add(index))
}

pub fn rng_from_seed(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn child_rng(parent: u64, tag: u64, index: u64) -> SimRng {
    rng_from_seed(derive(parent, tag, index))
}
