//! Deterministic random number generation.
//!
//! All randomness in the crate flows from 64-bit seeds through ChaCha12
//! (`rand_chacha::ChaCha12Rng`). ChaCha12 produces the same stream on every
//! platform, so a fixed seed yields bit-identical results everywhere for a
//! given build.
//!
//! Sub-streams (per tree, per fold, per permutation, ...) are derived by
//! mixing tag words into the parent seed with SplitMix64 finalization steps,
//! so independent consumers never share a stream by accident.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// The crate's deterministic generator.
pub type Rng = ChaCha12Rng;

/// SplitMix64 finalization step.
#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a child seed from `seed` and a sequence of tag words.
///
/// Absorbing the tags one by one keeps `seed_chain(s, &[a, b])` distinct from
/// `seed_chain(s, &[b, a])` and from `seed_chain(s, &[a ^ b])`.
pub fn seed_chain(seed: u64, tags: &[u64]) -> u64 {
    let mut state = splitmix64(seed);
    for &tag in tags {
        state = splitmix64(state ^ splitmix64(tag));
    }
    state
}

/// Builds the deterministic generator for a derived seed.
pub fn rng_from(seed: u64, tags: &[u64]) -> Rng {
    Rng::seed_from_u64(seed_chain(seed, tags))
}

/// Stream tags for the crate's independent randomness consumers.
pub mod tags {
    pub const RESAMPLE: u64 = 0x5245_5341_4d50;
    pub const TREE: u64 = 0x5452_4545;
    pub const FOLDS: u64 = 0x464f_4c44;
    pub const SPLIT: u64 = 0x5350_4c49;
    pub const PERMUTE: u64 = 0x5045_524d;
    pub const REPLICATE: u64 = 0x5245_504c;
    pub const INTERP: u64 = 0x494e_5450;
    pub const PREDICT_STEP: u64 = 0x5052_4544;
    pub const PARTITION: u64 = 0x5041_5254;
    pub const BLB_PLAN: u64 = 0x424c_4250;
    pub const THRESHOLD: u64 = 0x5448_5245;
}
