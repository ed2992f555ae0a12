//! Seeding and random streams.
//!
//! Every random draw in the crate comes from a [`ChaCha8Rng`] stream. Streams
//! are keyed by a 64-bit seed produced by [`derive_seed`], which applies the
//! SplitMix64 finalizer to `master + (index + 1) * 0x9E3779B97F4A7C15`
//! (wrapping arithmetic). For a fixed master seed the map from index to seed
//! is a bijection, so distinct indices always get distinct streams.
//!
//! Only determinism within this implementation is promised; the exact values
//! are not meant to match any other simulator.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Stream = ChaCha8Rng;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 output finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives the seed of sub-stream `index` from `master`.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    splitmix64(master.wrapping_add(index.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)))
}

/// Seed for one agent's private stream.
pub fn derive_agent_seed(master_seed: u64, agent_id: u64) -> u64 {
    derive_seed(master_seed, agent_id)
}

pub fn stream(seed: u64) -> Stream {
    ChaCha8Rng::seed_from_u64(seed)
}
