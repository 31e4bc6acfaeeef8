//! Seeded random streams.
//!
//! Every Monte-Carlo routine draws from ChaCha8 streams keyed by the user seed
//! plus a small tuple of labels (routine tag, target indices, chunk number).
//! Results are therefore independent of thread scheduling and of the order
//! in which callers evaluate quantities.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Samples per parallel chunk in the Monte-Carlo estimators.
pub const CHUNK: usize = 4096;

pub(crate) const TAG_CONFUSION: u64 = 0x636f_6e66;
pub(crate) const TAG_ASSOCIATION: u64 = 0x6173_736f;
pub(crate) const TAG_WAVEFORM: u64 = 0x7761_7665;
pub(crate) const TAG_NOISE: u64 = 0x6e6f_6973;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Deterministic generator for `(seed, labels...)`.
pub fn derive_rng(seed: u64, labels: &[u64]) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    let mut h = splitmix(seed);
    for &l in labels {
        h = splitmix(h ^ splitmix(l));
    }
    for (i, chunk) in key.chunks_mut(8).enumerate() {
        h = splitmix(h.wrapping_add(i as u64));
        chunk.copy_from_slice(&h.to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}

/// Splits `n` samples into `(chunk index, chunk length)` pieces.
pub(crate) fn chunks(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n.div_ceil(CHUNK)).map(move |c| (c, CHUNK.min(n - c * CHUNK)))
}
