//! Seeding helpers. Every random stream in the crate is a `ChaCha8Rng`
//! built from an explicit `u64` seed, so runs replay bit-for-bit across
//! platforms.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

pub fn seeded(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// SplitMix64 finalizer; a stable integer hash (unlike `DefaultHasher`).
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-trial seed: `master ^ hash(parts)`.
pub fn derive_seed(master: u64, parts: &[u64]) -> u64 {
    let h = parts
        .iter()
        .fold(0x51_7C_C1_B7_27_22_0A_95u64, |acc, &p| mix64(acc ^ p));
    master ^ h
}
