//! Seeded randomness.
//!
//! Every random stream in the crate is a [`ChaCha8Rng`] built from a `u64`
//! seed. Independent per-run seeds are derived with [`derive_seed`], so a
//! run's stream depends only on its own coordinates in a sweep grid.

use rand::SeedableRng;
pub use rand_chacha::ChaCha8Rng;

/// The generator used throughout the crate.
pub type SimRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Hashes a master seed together with grid coordinates:
/// `h0 = mix64(master)`, `h_{k+1} = mix64(h_k ^ mix64(c_k))`.
pub fn derive_seed(master: u64, coords: &[u64]) -> u64 {
    coords.iter().fold(mix64(master), |h, &c| mix64(h ^ mix64(c)))
}
