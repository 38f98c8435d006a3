//! Seeded synthetic stand-ins for backbone features.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::rng::Stream;
use crate::tensor::{conv2d, ConvKernel, FeatureMap};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureKind {
    /// Uniform on `[-1, 1)`, drawn in row-major `(c, h, w)` order.
    Noise,
    /// `Noise` (same seed) blurred per channel by a 5x5 Gaussian, sigma 1,
    /// zero-padded.
    Smooth,
    /// `(-1)^(h + w)` in every channel; all energy at the Nyquist bin.
    Checker,
}

impl FromStr for FeatureKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "noise" => Ok(FeatureKind::Noise),
            "smooth" => Ok(FeatureKind::Smooth),
            "checker" => Ok(FeatureKind::Checker),
            other => Err(Error::InvalidArgument(format!(
                "unknown feature kind '{other}' (expected noise, smooth or checker)"
            ))),
        }
    }
}

impl fmt::Display for FeatureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FeatureKind::Noise => "noise",
            FeatureKind::Smooth => "smooth",
            FeatureKind::Checker => "checker",
        })
    }
}

/// Normalized 5x5 Gaussian taps with sigma 1.
pub fn gaussian_taps() -> [f64; 25] {
    let mut taps = [0.0; 25];
    for i in 0..5 {
        for j in 0..5 {
            let (dy, dx) = (i as f64 - 2.0, j as f64 - 2.0);
            taps[i * 5 + j] = (-(dy * dy + dx * dx) / 2.0).exp();
        }
    }
    let total: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|t| *t /= total);
    taps
}

/// Depthwise 5x5 Gaussian blur.
pub fn gaussian_blur(x: &FeatureMap) -> Result<FeatureMap> {
    let c = x.channels();
    let taps = gaussian_taps();
    let mut data = vec![0.0; c * c * 25];
    for ch in 0..c {
        data[(ch * c + ch) * 25..][..25].copy_from_slice(&taps);
    }
    conv2d(x, &ConvKernel::new(c, c, 5, data)?, 2)
}

pub fn gen_features(kind: FeatureKind, c: usize, h: usize, w: usize, seed: u64) -> Result<FeatureMap> {
    match kind {
        FeatureKind::Noise => {
            let mut s = Stream::new(seed);
            FeatureMap::from_fn(c, h, w, |_, _, _| s.symmetric())
        }
        FeatureKind::Smooth => gaussian_blur(&gen_features(FeatureKind::Noise, c, h, w, seed)?),
        FeatureKind::Checker => {
            FeatureMap::from_fn(c, h, w, |_, y, x| if (y + x) % 2 == 0 { 1.0 } else { -1.0 })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{band_energy, decompose, fft2};

    #[test]
    fn checker_definition() {
        let x = gen_features(FeatureKind::Checker, 1, 2, 2, 0).unwrap();
        assert_eq!(x.data(), &[1.0, -1.0, -1.0, 1.0]);
    }

    #[test]
    fn smoothing_lowers_high_band_fraction() {
        for seed in 0..10 {
            let frac = |k| {
                let x = gen_features(k, 3, 16, 16, seed).unwrap();
                band_energy(&decompose(&fft2(&x)), 0.25).high_fraction()
            };
            assert!(frac(FeatureKind::Smooth) < frac(FeatureKind::Noise));
        }
    }

    #[test]
    fn deterministic_and_bounded() {
        let a = gen_features(FeatureKind::Noise, 2, 5, 3, 9).unwrap();
        assert_eq!(a, gen_features(FeatureKind::Noise, 2, 5, 3, 9).unwrap());
        assert_ne!(a, gen_features(FeatureKind::Noise, 2, 5, 3, 10).unwrap());
        assert!(a.data().iter().all(|v| (-1.0..1.0).contains(v)));
    }

    #[test]
    fn kind_parsing() {
        assert_eq!("smooth".parse::<FeatureKind>().unwrap(), FeatureKind::Smooth);
        assert!("plaid".parse::<FeatureKind>().is_err());
        assert_eq!(FeatureKind::Checker.to_string(), "checker");
    }

    #[test]
    fn gaussian_taps_sum_to_one() {
        let t = gaussian_taps();
        assert!((t.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!(t[12] > t[11] && t[11] > t[10]);
    }
}
