//! Seeded, splittable random streams.
//!
//! Every consumer derives its own ChaCha8 stream from `(seed, tag, a, b, c)`,
//! so sampling results never depend on iteration order or thread scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Recorded in output metadata next to the seed.
pub const RNG_NAME: &str = "chacha8/splitmix64-stream-v1";

pub const TAG_PAYOFF: u64 = 1;
pub const TAG_AUX: u64 = 2;
pub const TAG_PIVOT: u64 = 3;
pub const TAG_GRAPH: u64 = 4;
pub const TAG_CONGESTION: u64 = 5;
pub const TAG_INITIAL: u64 = 6;

pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn stream_id(tag: u64, a: u64, b: u64, c: u64) -> u64 {
    let mut h = splitmix64(tag);
    h = splitmix64(h ^ a);
    h = splitmix64(h ^ b);
    splitmix64(h ^ c)
}

pub fn stream(seed: u64, tag: u64, a: u64, b: u64, c: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id(tag, a, b, c));
    rng
}

/// Uniform integer in `lo..=hi`.
pub fn uniform_inclusive(rng: &mut ChaCha8Rng, lo: i128, hi: i128) -> i128 {
    debug_assert!(lo <= hi);
    let span = (hi - lo) as u128;
    if span == 0 {
        return lo;
    }
    if span < u64::MAX as u128 {
        lo + rng.gen_range(0..=span as u64) as i128
    } else {
        lo + rng.gen_range(0..=span) as i128
    }
}
