//! Counter-based seeding.
//!
//! Every random draw in a run is addressed by a tuple of integers (run seed,
//! step, member, augmentation index, ...). The tuple is mixed into a single
//! 64-bit seed for a fresh `ChaCha8Rng`, so draws never depend on call order
//! and independent runs can execute concurrently.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
pub fn mix64(mut x: u64) -> u64 {
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Combine an ordered list of keys into one seed.
pub fn key(parts: &[u64]) -> u64 {
    parts.iter().fold(GOLDEN, |acc, &p| {
        mix64(acc.wrapping_add(GOLDEN) ^ mix64(p.wrapping_add(GOLDEN)))
    })
}

pub fn keyed_rng(parts: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(key(parts))
}

/// Draw index for augmentation `aug` of ensemble member `member` at optimizer
/// step `step`.
pub fn augmentation_draw(step: u64, member: u64, aug: u64) -> u64 {
    key(&[step, member, aug])
}
