//! Style diversification: re-style a feature map by an affine map of its
//! Fourier amplitude while leaving the phase untouched.
//!
//! Per channel `c`, with base statistics `(mu_base, sigma_base)` of the
//! spatial plane and Dirichlet weights `W`:
//!
//! ```text
//! mu[c]    = W[c] * mu_base[c]
//! sigma[c] = W[c] * sigma_base[c]
//! a_new    = sigma[c] * a + mu[c]      (every bin, DC included)
//! x_tilde  = IFFT(compose(a_new, p))
//! ```

use crate::error::{Error, Result};
use crate::rng;
use crate::spectral::{self, AmpPhase};
use crate::tensor::FeatureMap;

/// Per-channel mean and population standard deviation of the spatial plane.
#[derive(Debug, Clone, PartialEq)]
pub struct StyleStats {
    pub mu_base: Vec<f64>,
    pub sigma_base: Vec<f64>,
}

impl StyleStats {
    pub fn new(mu_base: Vec<f64>, sigma_base: Vec<f64>) -> Result<Self> {
        if mu_base.len() != sigma_base.len() {
            return Err(Error::ShapeMismatch("mu/sigma length differ".into()));
        }
        if sigma_base.iter().any(|s| s.is_nan() || *s < 0.0) {
            return Err(Error::InvalidArgument("sigma_base must be >= 0".into()));
        }
        Ok(StyleStats {
            mu_base,
            sigma_base,
        })
    }

    pub fn channels(&self) -> usize {
        self.mu_base.len()
    }
}

/// How sampled simplex weights scale the base statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ScaleMode {
    /// Use `W` as sampled; `E[W] = 1 / C`.
    Raw,
    /// Use `C * W` so the expected map stays near the base statistics.
    #[default]
    TimesChannels,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StyleWeights {
    pub alpha: Vec<f64>,
    pub weights: Vec<f64>,
    pub scale_mode: ScaleMode,
}

impl StyleWeights {
    /// Weights supplied directly instead of sampled. Only non-negativity
    /// is checked, so degenerate vectors can be injected on purpose.
    pub fn from_parts(alpha: Vec<f64>, weights: Vec<f64>, scale_mode: ScaleMode) -> Result<Self> {
        if alpha.len() != weights.len() {
            return Err(Error::ShapeMismatch("alpha/weights length differ".into()));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidArgument("weights must be finite and >= 0".into()));
        }
        Ok(StyleWeights {
            alpha,
            weights,
            scale_mode,
        })
    }

    pub fn with_scale_mode(mut self, scale_mode: ScaleMode) -> Self {
        self.scale_mode = scale_mode;
        self
    }

    /// The multipliers actually applied to the base statistics.
    pub fn effective(&self) -> Vec<f64> {
        let k = match self.scale_mode {
            ScaleMode::Raw => 1.0,
            ScaleMode::TimesChannels => self.weights.len() as f64,
        };
        self.weights.iter().map(|w| w * k).collect()
    }
}

pub fn channel_stats(x: &FeatureMap) -> StyleStats {
    let n = x.plane_len() as f64;
    let (mut mu, mut sigma) = (Vec::new(), Vec::new());
    for c in 0..x.channels() {
        let plane = x.channel(c);
        let mean = plane.iter().sum::<f64>() / n;
        let var = plane.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        mu.push(mean);
        sigma.push(var.sqrt());
    }
    StyleStats {
        mu_base: mu,
        sigma_base: sigma,
    }
}

/// Draws `W ~ Dirichlet(alpha)`; deterministic in `(alpha, seed)`.
pub fn sample_dirichlet(alpha: &[f64], seed: u64) -> Result<StyleWeights> {
    let weights = rng::dirichlet(alpha, seed)?;
    Ok(StyleWeights {
        alpha: alpha.to_vec(),
        weights,
        scale_mode: ScaleMode::default(),
    })
}

/// Per-channel `(sigma, mu)` actually applied by [`style_fuse`].
pub fn affine_coefficients(stats: &StyleStats, w: &StyleWeights) -> (Vec<f64>, Vec<f64>) {
    let eff = w.effective();
    let sigma = eff.iter().zip(&stats.sigma_base).map(|(w, s)| w * s).collect();
    let mu = eff.iter().zip(&stats.mu_base).map(|(w, m)| w * m).collect();
    (sigma, mu)
}

/// Maps every amplitude bin of channel `c` to `sigma[c] * a + mu[c]`.
pub fn style_fuse(ap: &AmpPhase, stats: &StyleStats, w: &StyleWeights) -> Result<AmpPhase> {
    let c = ap.channels();
    if stats.channels() != c || w.weights.len() != c {
        return Err(Error::ShapeMismatch(format!(
            "style_fuse: {c} channels, {} stats, {} weights",
            stats.channels(),
            w.weights.len()
        )));
    }
    let (sigma, mu) = affine_coefficients(stats, w);
    let n = ap.plane_len();
    let amplitude = ap
        .amplitude()
        .iter()
        .enumerate()
        .map(|(i, &a)| sigma[i / n] * a + mu[i / n])
        .collect();
    ap.with_amplitude(amplitude)
}

/// Full pipeline with the statistics and weights supplied by the caller.
pub fn sda_forward_with(x: &FeatureMap, stats: &StyleStats, w: &StyleWeights) -> Result<FeatureMap> {
    let ap = spectral::decompose(&spectral::fft2(x));
    let fused = style_fuse(&ap, stats, w)?;
    Ok(spectral::ifft2(&spectral::compose(&fused))?.map)
}

/// Style-diversified copy of `x` with `W ~ Dirichlet(alpha)` drawn from `seed`.
pub fn sda_forward(x: &FeatureMap, alpha: &[f64], seed: u64) -> Result<FeatureMap> {
    if alpha.len() != x.channels() {
        return Err(Error::ShapeMismatch(format!(
            "{} concentrations for {} channels",
            alpha.len(),
            x.channels()
        )));
    }
    let w = sample_dirichlet(alpha, seed)?;
    sda_forward_with(x, &channel_stats(x), &w)
}

/// Statistics/weights pair for which the amplitude map is the identity
/// (`sigma = 1`, `mu = 0` in every channel).
pub fn identity_style(channels: usize) -> (StyleStats, StyleWeights) {
    let stats = StyleStats {
        mu_base: vec![0.0; channels],
        sigma_base: vec![1.0; channels],
    };
    let w = StyleWeights {
        alpha: vec![1.0; channels],
        weights: vec![1.0; channels],
        scale_mode: ScaleMode::Raw,
    };
    (stats, w)
}
