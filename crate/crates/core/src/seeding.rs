// SPDX-License-Identifier: Apache-2.0

//! Seed derivation shared by hash families, simulated clients and experiment runs.
//!
//! Every seed in the system is a pure function of a parent seed and a tag, so an
//! experiment is reproducible from `(config, run seed)` alone.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_xoshiro::SplitMix64;

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 output function: a bijective avalanche mix of a 64-bit word.
pub fn mix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Child seed for `tag` under `parent`: `mix64(parent ^ mix64(tag))`.
pub fn derive_seed(parent: u64, tag: u64) -> u64 {
    mix64(parent ^ mix64(tag))
}

/// Per-client randomness: client `index` of the stream identified by `stream_seed`.
pub fn client_rng(stream_seed: u64, index: u64) -> SplitMix64 {
    SplitMix64::seed_from_u64(derive_seed(stream_seed, index))
}

/// Run-level randomness (permutations, data generation).
pub fn run_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Well-known stream tags. Values are arbitrary but frozen.
pub mod tags {
    pub const ATTR_A: u64 = 0xA;
    pub const ATTR_B: u64 = 0xB;
    pub const MIDDLE: u64 = 0xAB;
    pub const PHASE_ONE: u64 = 0x100;
    pub const LOW_GROUP: u64 = 0x200;
    pub const HIGH_GROUP: u64 = 0x300;
    pub const PARTITION: u64 = 0x400;
    pub const FAMILY: u64 = 0x500;
    pub const DATA: u64 = 0x600;
    pub const KRR: u64 = 0x700;
    pub const REPETITION: u64 = 0x800;
}
