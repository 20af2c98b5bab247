//! Seeded randomness.
//!
//! Every stochastic step in the crate draws from a ChaCha8 stream seeded with a
//! 64-bit value. ChaCha8 output is specified independently of platform and word
//! size, so a seed reproduces the same bits everywhere. Child seeds (per tree,
//! per fold) come from [`derive_seed`], which depends only on the master seed and
//! the child index and never on scheduling order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A second, independent stream for the same seed. Used where one seed must
/// drive two unrelated draws (bootstrap sampling and split-feature sampling).
pub fn rng_from_seed_stream(seed: u64, stream: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Child seed `index` of `master`: two rounds of the SplitMix64 finalizer over
/// the master seed and the index.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    splitmix64(splitmix64(master) ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
