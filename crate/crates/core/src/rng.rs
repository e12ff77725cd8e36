//! Seeded random streams.
//!
//! Every random quantity comes from a ChaCha20 generator keyed by a 64-bit seed
//! and a stream id. ChaCha is counter based, so the dictionary, support,
//! block-shape and noise streams of one seed never overlap, and changing one of
//! them leaves the others untouched.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

/// Independent substreams carved out of one seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    /// Dictionary entries.
    Dictionary = 0,
    /// Support sets.
    Support = 1,
    /// Block magnitudes and within-block shapes.
    Shape = 2,
    /// Measurement noise.
    Noise = 3,
    /// Index-set sampling for diagnostics.
    Sampling = 4,
}

/// Generator for `stream` of `seed`.
pub fn stream_rng(seed: u64, stream: Stream) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}

/// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Hashes a tuple of integers into a child seed.
///
/// Used to give every Monte Carlo cell its own reproducible seed, independent
/// of evaluation order.
pub fn derive_seed(parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(0x6A09_E667_F3BC_C908, |h, &p| mix64(h ^ mix64(p)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn streams_are_distinct_and_reproducible() {
        let a: u64 = stream_rng(7, Stream::Dictionary).random();
        let b: u64 = stream_rng(7, Stream::Noise).random();
        let a2: u64 = stream_rng(7, Stream::Dictionary).random();
        assert_ne!(a, b);
        assert_eq!(a, a2);
    }

    #[test]
    fn derived_seeds_depend_on_order() {
        assert_ne!(derive_seed(&[1, 2]), derive_seed(&[2, 1]));
        assert_eq!(derive_seed(&[1, 2, 3]), derive_seed(&[1, 2, 3]));
    }
}
