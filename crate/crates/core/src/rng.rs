//! Seeded randomness with a fixed, documented algorithm chain so that
//! golden values are reproducible across platforms and crate upgrades.
//!
//! - Bit source: ChaCha8 seeded through `SeedableRng::seed_from_u64`.
//! - Uniform `[0, 1)`: top 53 bits of `next_u64`, times `2^-53`.
//! - Standard normal: Box-Muller, `sqrt(-2 ln u1) cos(2 pi u2)` with
//!   `u1 = 1 - uniform()` and `u2 = uniform()`; the sine half is discarded.
//! - Gamma(alpha, 1): Marsaglia-Tsang squeeze/accept; for `alpha < 1` the
//!   draw is `Gamma(alpha + 1) * u^(1 / alpha)`, carried in log space.
//! - Dirichlet: one gamma per coordinate in index order, normalized.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

const TWO_POW_53: f64 = 9_007_199_254_740_992.0;

pub struct Stream {
    inner: ChaCha8Rng,
}

impl Stream {
    pub fn new(seed: u64) -> Self {
        Stream {
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Uniform on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        (self.inner.next_u64() >> 11) as f64 / TWO_POW_53
    }

    /// Uniform on `[-1, 1)`.
    pub fn symmetric(&mut self) -> f64 {
        2.0 * self.uniform() - 1.0
    }

    pub fn normal(&mut self) -> f64 {
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }

    /// `ln X` for `X ~ Gamma(alpha, 1)`.
    pub fn ln_gamma_variate(&mut self, alpha: f64) -> f64 {
        if alpha < 1.0 {
            let boosted = self.ln_gamma_variate(alpha + 1.0);
            let u = 1.0 - self.uniform();
            return boosted + u.ln() / alpha;
        }
        let d = alpha - 1.0 / 3.0;
        let c = 1.0 / (9.0 * d).sqrt();
        loop {
            let z = self.normal();
            let mut v = 1.0 + c * z;
            if v <= 0.0 {
                continue;
            }
            v = v * v * v;
            let u = 1.0 - self.uniform();
            if u < 1.0 - 0.0331 * z * z * z * z || u.ln() < 0.5 * z * z + d * (1.0 - v + v.ln()) {
                return (d * v).ln();
            }
        }
    }
}

/// Dirichlet(alpha) sample for the given seed.
///
/// Works from log-gamma variates so tiny concentrations (which underflow
/// `u^(1/alpha)`) still give a valid simplex point.
pub fn dirichlet(alpha: &[f64], seed: u64) -> Result<Vec<f64>> {
    if alpha.is_empty() {
        return Err(Error::InvalidArgument("empty concentration vector".into()));
    }
    if let Some(a) = alpha.iter().find(|a| !(a.is_finite() && **a > 0.0)) {
        return Err(Error::InvalidArgument(format!(
            "Dirichlet concentrations must be positive and finite, got {a}"
        )));
    }
    let mut stream = Stream::new(seed);
    let logs: Vec<f64> = alpha.iter().map(|&a| stream.ln_gamma_variate(a)).collect();
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logs.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    Ok(exps.into_iter().map(|e| e / total).collect())
}

/// SplitMix64 output finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent child seed for `(seed, index)`: SplitMix64 of the seed
/// advanced by `index + 1` golden-ratio increments.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    splitmix64(seed.wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(index.wrapping_add(1))))
}
