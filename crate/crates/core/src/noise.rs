//! Reproducible standard Gaussian noise.
//!
//! Every draw in the crate goes through [`stream_rng`]: a ChaCha generator
//! keyed by a 64-bit seed with the member index selecting the stream. A member
//! therefore never depends on how many other members were drawn, or in which
//! order, which keeps parallel evaluation bit-identical to serial.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

pub fn stream_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a named sub-seed so that unrelated consumers of one master seed
/// draw independent streams.
pub fn sub_seed(seed: u64, label: &str) -> u64 {
    // FNV-1a over the label, folded into the seed.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    mix64(seed ^ mix64(h))
}

pub fn gaussian_vector(seed: u64, index: u64, dim: usize) -> Vec<f64> {
    let mut rng = stream_rng(seed, index);
    (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect()
}

/// A reproducible batch of `count` standard Gaussian vectors in `dim` dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NoiseBatch {
    pub seed: u64,
    pub count: usize,
    pub dim: usize,
}

impl NoiseBatch {
    pub fn new(seed: u64, count: usize, dim: usize) -> Self {
        Self { seed, count, dim }
    }

    pub fn member(&self, index: usize) -> Vec<f64> {
        gaussian_vector(self.seed, index as u64, self.dim)
    }

    pub fn vectors(&self) -> Vec<Vec<f64>> {
        (0..self.count).map(|i| self.member(i)).collect()
    }
}
