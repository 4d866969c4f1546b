//! Reproducible random number streams.
//!
//! A [`RngStream`] is keyed by a (seed, stream_id) pair: equal pairs replay
//! the exact same draw sequence, distinct stream ids give statistically
//! independent substreams. The pair is expanded into a ChaCha8 key with a
//! splitmix64 chain, so the mapping is fixed by this crate and does not
//! depend on upstream stream-extension APIs.

use crate::error::{domain, Result};
use rand::distr::Open01;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution, Poisson, StandardNormal};

/// Distributions available through [`RngStream::sample`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Dist {
    Uniform01,
    StdNormal,
    ChiSquare(u32),
    Poisson(f64),
}

/// A seeded, replayable random stream.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> RngStream {
        let rng = ChaCha8Rng::from_seed(chacha_key(seed, stream_id));
        RngStream { seed, stream_id, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// A uniform draw on the open interval (0, 1).
    #[inline]
    pub fn uniform01(&mut self) -> f64 {
        self.rng.sample(Open01)
    }

    #[inline]
    pub fn std_normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    pub fn chi_square(&mut self, r: u32) -> Result<f64> {
        if r < 1 {
            return Err(domain("chi-square degrees of freedom must be >= 1"));
        }
        let d = ChiSquared::new(r as f64)
            .map_err(|e| domain(format!("chi-square parameter rejected: {e}")))?;
        Ok(d.sample(&mut self.rng))
    }

    /// A Poisson count; rate 0 degenerates to the constant 0.
    pub fn poisson(&mut self, theta: f64) -> Result<u64> {
        if !(theta >= 0.0) || !theta.is_finite() {
            return Err(domain(format!("Poisson rate must be >= 0, got {theta}")));
        }
        if theta == 0.0 {
            return Ok(0);
        }
        let d = Poisson::new(theta)
            .map_err(|e| domain(format!("Poisson parameter rejected: {e}")))?;
        let v: f64 = d.sample(&mut self.rng);
        Ok(v as u64)
    }

    /// One variate from `dist`, as a real number.
    pub fn sample(&mut self, dist: Dist) -> Result<f64> {
        match dist {
            Dist::Uniform01 => Ok(self.uniform01()),
            Dist::StdNormal => Ok(self.std_normal()),
            Dist::ChiSquare(r) => self.chi_square(r),
            Dist::Poisson(theta) => Ok(self.poisson(theta)? as f64),
        }
    }

    /// Derive a fresh seed from this stream, for seeding a nested
    /// Monte Carlo estimator inside a simulation replicate.
    pub fn derive_seed(&mut self) -> u64 {
        self.rng.next_u64()
    }
}

/// Combine two indices into a single substream id (for keying one stream
/// per (grid cell, replicate) pair).
pub fn substream_id(a: u64, b: u64) -> u64 {
    let mut s = a
        .wrapping_mul(0xA076_1D64_78BD_642F)
        .wrapping_add(b.rotate_left(32))
        .wrapping_add(0x9E37_79B9_7F4A_7C15);
    splitmix64(&mut s)
}

fn chacha_key(seed: u64, stream_id: u64) -> [u8; 32] {
    let mut s = seed ^ 0xD1B5_4A32_D192_ED03;
    let a = splitmix64(&mut s);
    let b = splitmix64(&mut s);
    let mut t = stream_id ^ b;
    let c = splitmix64(&mut t);
    let d = splitmix64(&mut t);
    let mut key = [0u8; 32];
    key[0..8].copy_from_slice(&a.to_le_bytes());
    key[8..16].copy_from_slice(&b.to_le_bytes());
    key[16..24].copy_from_slice(&c.to_le_bytes());
    key[24..32].copy_from_slice(&d.to_le_bytes());
    key
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
