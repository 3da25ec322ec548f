//! Seeded generator streams.
//!
//! Every random draw comes from a ChaCha8 generator keyed by `(seed, index)`
//! and placed on a stream chosen by [`Purpose`]. Draws for one purpose never
//! shift the sequence seen by another, so e.g. changing the probe count leaves
//! the dataset untouched.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// What a generator stream is used for.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Bases = 1,
    Examples = 2,
    Confounders = 3,
    Probes = 4,
    SweepOrder = 5,
}

/// Generator for `purpose`, keyed by `seed` and a sub-index (probe number, group, ...).
pub fn stream(seed: u64, purpose: Purpose, index: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&index.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(purpose as u64);
    rng
}

/// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a child seed from a master seed and a list of coordinates.
pub fn derive_seed(master: u64, coords: &[u64]) -> u64 {
    coords
        .iter()
        .fold(mix64(master), |acc, &c| mix64(acc ^ mix64(c)))
}
