//! Counter-based hashing used for edge weights and seed derivation.
//!
//! The mixer is the SplitMix64 finalizer. Words are absorbed one at a time as
//! `h = mix64((h + GOLDEN) ^ w)`, which is injective in `w` for a fixed state.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer: a bijective avalanche mixer on `u64`.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[inline]
pub(crate) fn absorb(h: u64, w: u64) -> u64 {
    mix64(h.wrapping_add(GOLDEN) ^ w)
}

/// Hashes a key made of `words` under `seed`.
#[inline]
pub fn hash_words(seed: u64, words: &[u64]) -> u64 {
    words.iter().fold(mix64(seed), |h, &w| absorb(h, w))
}

/// Maps a 64-bit hash to `[0, 1)` using its top 53 bits.
#[inline]
pub fn unit_interval(h: u64) -> f64 {
    (h >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Tag separating derived seeds from edge-weight keys.
const SEED_TAG: u64 = 0x5EED_5EED_5EED_5EED;

/// Derives a child seed from `master` and a path of indices.
///
/// A replica of a sweep cell uses `derive_seed(master, &[cell, replica])`;
/// single-cell experiments use `derive_seed(master, &[0, replica])`.
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    path.iter().fold(absorb(mix64(master), SEED_TAG), |h, &w| absorb(h, w))
}
