//! Counter-based pseudo-random numbers for reproducible fixtures.
//!
//! Every draw is a pure function of `(seed, stream, index)`, so rows of a
//! phantom can be generated in any order or in parallel and still produce
//! identical bytes on every platform.
//!
//! The mixing function is the SplitMix64 finalizer:
//!
//! ```text
//! z  = seed + GOLDEN * (stream * STREAM_STRIDE + index + 1)   (wrapping)
//! z  = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//! z  = (z ^ (z >> 27)) * 0x94D049BB133111EB
//! z  =  z ^ (z >> 31)
//! ```
//!
//! with `GOLDEN = 0x9E3779B97F4A7C15` and `STREAM_STRIDE = 2^40`.
//! Uniform doubles take the top 53 bits; normals use Box-Muller on the
//! pair of uniforms at counters `2k` and `2k + 1`.

use std::f64::consts::TAU;

pub const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;
pub const MIX_1: u64 = 0xBF58_476D_1CE4_E5B9;
pub const MIX_2: u64 = 0x94D0_49BB_1331_11EB;
pub const STREAM_STRIDE: u64 = 1 << 40;

#[inline]
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(MIX_1);
    z = (z ^ (z >> 27)).wrapping_mul(MIX_2);
    z ^ (z >> 31)
}

/// A keyed, stateless generator. `stream` separates independent uses of the
/// same seed (e.g. ROI noise vs background noise).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CounterRng {
    seed: u64,
    stream: u64,
}

impl CounterRng {
    pub fn new(seed: u64) -> Self {
        CounterRng { seed, stream: 0 }
    }

    pub fn with_stream(self, stream: u64) -> Self {
        CounterRng { stream, ..self }
    }

    #[inline]
    pub fn u64_at(&self, index: u64) -> u64 {
        let counter = self
            .stream
            .wrapping_mul(STREAM_STRIDE)
            .wrapping_add(index)
            .wrapping_add(1);
        mix(self.seed.wrapping_add(GOLDEN.wrapping_mul(counter)))
    }

    /// Uniform in `[0, 1)`.
    #[inline]
    pub fn uniform_at(&self, index: u64) -> f64 {
        (self.u64_at(index) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal draw number `k` (consumes counters `2k` and `2k+1`).
    pub fn normal_at(&self, k: u64) -> f64 {
        // 1 - u keeps the log argument in (0, 1].
        let u1 = 1.0 - self.uniform_at(2 * k);
        let u2 = self.uniform_at(2 * k + 1);
        (-2.0 * u1.ln()).sqrt() * (TAU * u2).cos()
    }

    /// Phase uniform in `[0, 2π)`.
    pub fn phase_at(&self, index: u64) -> f64 {
        TAU * self.uniform_at(index)
    }
}

/// Sequential cursor over a [`CounterRng`], for callers that just want a
/// stream of numbers.
#[derive(Clone, Debug)]
pub struct RngCursor {
    rng: CounterRng,
    next: u64,
}

impl RngCursor {
    pub fn new(rng: CounterRng) -> Self {
        RngCursor { rng, next: 0 }
    }

    pub fn uniform(&mut self) -> f64 {
        let v = self.rng.uniform_at(self.next);
        self.next += 1;
        v
    }

    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    pub fn normal(&mut self) -> f64 {
        let v = self.rng.normal_at(self.next);
        self.next += 1;
        v
    }

    /// Integer uniform in `[0, n)`.
    pub fn below(&mut self, n: u64) -> u64 {
        let v = self.rng.u64_at(self.next);
        self.next += 1;
        // Multiply-shift; bias is below 2^-64 * n and irrelevant for fixtures.
        ((v as u128 * n as u128) >> 64) as u64
    }
}
