//! Seed derivation.
//!
//! Every random artifact draws from its own ChaCha stream keyed by
//! `(seed, path...)`, so a scene or a round is reproducible regardless of
//! what else was sampled before it.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

pub type SimRng = ChaCha12Rng;

pub mod tag {
    pub const SCENE: u64 = 0x5343_454e;
    pub const BASIS_ROWS: u64 = 1;
    pub const SUPPORT: u64 = 2;
    pub const SIGNS: u64 = 3;
    pub const SIGNATURES: u64 = 4;
    pub const ROUND0: u64 = 5;
    pub const CHANNEL: u64 = 6;
    pub const DOWNLINK: u64 = 7;
    pub const RANDOM_SELECT: u64 = 8;
    pub const REQUEST: u64 = 9;
    pub const SOLVER: u64 = 10;
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a 64-bit key from a root seed and a path of stream labels.
pub fn derive_seed(seed: u64, path: &[u64]) -> u64 {
    path.iter().fold(splitmix64(seed), |acc, &p| splitmix64(acc ^ splitmix64(p.wrapping_add(0x632b_e59b_d9b4_e019))))
}

/// Child generator for `(seed, path...)`.
pub fn stream(seed: u64, path: &[u64]) -> SimRng {
    SimRng::seed_from_u64(derive_seed(seed, path))
}
