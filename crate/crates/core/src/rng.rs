//! Splittable random streams.
//!
//! Every random quantity is drawn from a stream identified by
//! `(seed, purpose, index)`. The stream's initial state is
//! `mix(mix(seed ^ mix(purpose)) ^ mix(index + 1))`, where `mix` is the
//! SplitMix64 finalizer, and the stream then advances as a SplitMix64
//! generator. Because a stream depends only on its key, units and bootstrap
//! replicates can be generated in any order (or concurrently) and still
//! reproduce bit-for-bit.

use rand::RngCore;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 output function.
pub fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives the key of sub-stream `index` of `purpose` under `seed`.
pub fn derive(seed: u64, purpose: u64, index: u64) -> u64 {
    mix(mix(seed ^ mix(purpose)) ^ mix(index.wrapping_add(1)))
}

/// Stream purposes used by the generators and the bootstrap.
pub mod purpose {
    pub const CONTEXT_ASSIGN: u64 = 1;
    pub const CONTEXT_LATENT: u64 = 2;
    pub const COVARIATE: u64 = 3;
    pub const TREATMENT: u64 = 4;
    pub const EXPOSURE: u64 = 5;
    pub const NOISE: u64 = 6;
    pub const BOOTSTRAP: u64 = 7;
    pub const GEOMETRY: u64 = 8;
}

/// A SplitMix64 generator positioned at the start of a derived sub-stream.
#[derive(Debug, Clone)]
pub struct Stream {
    state: u64,
}

impl Stream {
    pub fn new(seed: u64, purpose: u64, index: u64) -> Self {
        Stream {
            state: derive(seed, purpose, index),
        }
    }

    /// Uniform draw in [0, 1) with 53 bits of precision.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform() < p
    }

    /// Uniform index in `0..n` (Lemire's multiply-shift; bias below 2^-64 * n).
    pub fn below(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        ((self.next_u64() as u128 * n as u128) >> 64) as usize
    }
}

impl RngCore for Stream {
    fn next_u32(&mut self) -> u32 {
        (self.next_u64() >> 32) as u32
    }

    fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN);
        mix(self.state)
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        for chunk in dst.chunks_mut(8) {
            let bytes = self.next_u64().to_le_bytes();
            chunk.copy_from_slice(&bytes[..chunk.len()]);
        }
    }
}
