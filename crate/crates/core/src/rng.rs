//! Seeded random streams.
//!
//! Every stochastic component draws from a ChaCha stream keyed by a 64-bit
//! seed and a stream id. ChaCha is counter based, so distinct stream ids give
//! independent sequences and the same `(seed, stream)` is bit-reproducible.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

pub type StreamRng = ChaCha12Rng;

/// Stream ids used by the library. Callers may use any other ids.
pub mod streams {
    pub const RULE: u64 = 1;
    pub const DATA: u64 = 2;
    pub const PROBES: u64 = 3;
}

pub fn stream(seed: u64, stream_id: u64) -> StreamRng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(stream_id);
    rng
}

/// Seed for repetition `rep` of an experiment with `base_seed`.
#[inline]
pub fn rep_seed(base_seed: u64, rep: u64) -> u64 {
    base_seed ^ rep
}

/// Derives a child seed from `seed` and a tag (splitmix64 finalizer).
pub fn derive(seed: u64, tag: u64) -> u64 {
    let mut z = seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
