//! Deterministic random streams.
//!
//! Every stream is keyed by `(global seed, pixel index, sample index, tag)`.
//! The key becomes the 256-bit ChaCha8 seed, so a stream's sequence depends on
//! nothing but its key: not on thread scheduling, tile order, or on how many
//! numbers other streams have consumed.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Stream tags. Distinct tags give statistically independent sequences for
/// the same `(seed, pixel, sample)`.
pub mod tag {
    pub const CAMERA: u64 = 0x6361_6d65;
    pub const DIRECT: u64 = 0x6469_7263;
    pub const INDIRECT: u64 = 0x696e_6472;
    pub const OCCUPANCY: u64 = 0x6f63_6375;
    pub const CAMERA_SEARCH: u64 = 0x7365_6172;
    pub const LIGHTS: u64 = 0x6c69_6768;
    pub const SCENE_GEN: u64 = 0x7363_6e67;
    pub const TEST: u64 = 0x7465_7374;
}

#[derive(Debug, Clone)]
pub struct RngStream {
    key: [u64; 4],
    inner: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, pixel: u64, sample: u64, tag: u64) -> Self {
        let mut key = [0u8; 32];
        for (i, word) in [seed, pixel, sample, tag].into_iter().enumerate() {
            key[i * 8..(i + 1) * 8].copy_from_slice(&word.to_le_bytes());
        }
        RngStream {
            key: [seed, pixel, sample, tag],
            inner: ChaCha8Rng::from_seed(key),
        }
    }

    /// A fresh stream with the same `(seed, pixel, sample)` and another tag.
    pub fn with_tag(&self, tag: u64) -> RngStream {
        RngStream::new(self.key[0], self.key[1], self.key[2], tag)
    }

    pub fn key(&self) -> [u64; 4] {
        self.key
    }

    /// Uniform double in `[0, 1)` with 53 bits of precision.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.inner.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform double in `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Uniform integer in `[lo, hi]`.
    pub fn range_inclusive(&mut self, lo: usize, hi: usize) -> usize {
        self.inner.gen_range(lo..=hi)
    }

    /// Uniform index in `[0, n)`; `n` must be positive.
    pub fn index(&mut self, n: usize) -> usize {
        self.inner.gen_range(0..n)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// A child stream keyed by this stream's next output, for hierarchical
    /// derivation (e.g. one stream per generated scene).
    pub fn fork(&mut self, tag: u64) -> RngStream {
        let s = self.next_u64();
        RngStream::new(s, 0, 0, tag)
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.inner.fill_bytes(dest)
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), rand::Error> {
        self.inner.try_fill_bytes(dest)
    }
}
