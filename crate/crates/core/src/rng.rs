//! Seed derivation. Every random quantity in the crate is drawn from a
//! ChaCha8 stream whose 64-bit seed is derived from a user seed plus a small
//! tuple of labels, so independent pieces can be regenerated in any order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finaliser.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Hashes a sequence of labels into one 64-bit value.
pub fn hash_labels(labels: &[u64]) -> u64 {
    labels
        .iter()
        .fold(0x6A09_E667_F3BC_C908, |acc, &l| mix64(acc ^ mix64(l)))
}

/// `seed XOR hash(labels)`.
pub fn derive_seed(seed: u64, labels: &[u64]) -> u64 {
    seed ^ hash_labels(labels)
}

pub fn stream(seed: u64, labels: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, labels))
}
