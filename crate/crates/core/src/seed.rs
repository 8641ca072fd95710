//! Deterministic seeding.
//!
//! Every sampling call draws from its own ChaCha stream keyed by the trial
//! seed, so the order in which modules sample never changes what they get.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Named sub-streams of a trial seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    PrimaryNodes = 1,
    SecondaryNodes = 2,
    PrimaryPairing = 3,
    SecondaryPairing = 4,
    Standalone = 5,
}

/// RNG for one sub-stream of `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of trial `trial` at density index `density_index` of a sweep.
///
/// Depends only on `(master, density_index, trial)`, so appending densities
/// or trials leaves existing trials untouched.
pub fn trial_seed(master: u64, density_index: usize, trial: usize) -> u64 {
    master ^ mix64(((density_index as u64) << 32) | (trial as u64 & 0xffff_ffff))
}
