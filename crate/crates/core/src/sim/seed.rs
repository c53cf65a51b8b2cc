//! Replicate seed derivation.
//!
//! `replicate_seed(master, i)` is the `(i + 1)`-th output of a SplitMix64
//! stream started at `master`:
//!
//! ```text
//! z  = master + (i + 1) * 0x9E3779B97F4A7C15        (wrapping)
//! z  = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//! z  = (z ^ (z >> 27)) * 0x94D049BB133111EB
//! z ^ (z >> 31)
//! ```
//!
//! The replicate's generator is `ChaCha8Rng::seed_from_u64(seed)`.

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn replicate_seed(master_seed: u64, index: u64) -> u64 {
    splitmix64(master_seed.wrapping_add(GOLDEN_GAMMA.wrapping_mul(index.wrapping_add(1))))
}
