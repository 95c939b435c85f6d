//! Seed derivation for independent random streams.
//!
//! Every stream in a run is a ChaCha8 generator seeded from
//! `mix(run_seed, stream_id)`, so agent `m` of run `r` always sees the same
//! noise regardless of how many other agents or runs exist.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Stream ids reserved for non-agent consumers.
pub const FAILURE_STREAM: u64 = 0xFA11_0000;
pub const OFUL_STREAM: u64 = 0x0F01_0000;
pub const SCENARIO_STREAM: u64 = 0x5CE0_0000;

/// SplitMix64 finalizer applied to the combined seed.
pub fn mix(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn stream(seed: u64, stream: u64) -> StreamRng {
    ChaCha8Rng::seed_from_u64(mix(seed, stream))
}
