//! Seeded random streams.
//!
//! Every random draw in the crate goes through [`RngState`], a ChaCha8
//! generator. ChaCha output is specified bit-for-bit, so a seed reproduces
//! the same stream on every platform. Independent streams for clients and
//! rounds are derived by hashing `(seed, tags...)` with SplitMix64 rather
//! than by sharing one generator, which keeps a client's draws unaffected by
//! whether some other client trained in the same round.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type RngState = ChaCha8Rng;

/// Generator for a plain 64-bit seed.
pub fn seeded(seed: u64) -> RngState {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Generator for the stream identified by `seed` and an ordered list of tags.
pub fn derived(seed: u64, tags: &[u64]) -> RngState {
    seeded(derive_seed(seed, tags))
}

pub fn derive_seed(seed: u64, tags: &[u64]) -> u64 {
    let mut h = splitmix64(seed ^ 0x5eed_f00d_cafe_d00d);
    for &tag in tags {
        h = splitmix64(h ^ splitmix64(tag.wrapping_add(0x9e37_79b9_7f4a_7c15)));
    }
    h
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
