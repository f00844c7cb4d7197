//! Seed derivation.
//!
//! Every random stream in the library is derived from the run seed plus a
//! small tuple of integers naming its role, so independent reimplementations
//! (and tests) can reconstruct the exact stream a routine used.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Role tags mixed into derived seeds.
pub mod tag {
    pub const OUTER_FOLDS: u64 = 1;
    pub const INNER_FOLDS: u64 = 2;
    pub const SAMPLING: u64 = 3;
    pub const SUBSAMPLE: u64 = 4;
    pub const TREE: u64 = 5;
    pub const CATEGORY: u64 = 6;
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes `parts` into `seed`. Order matters.
pub fn derive(seed: u64, parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(splitmix(seed), |acc, &p| splitmix(acc ^ splitmix(p)))
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
