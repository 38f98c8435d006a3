//! Per-channel 2-D Fourier analysis of feature maps.
//!
//! Conventions used throughout the crate:
//! - the forward transform is unnormalized (the DC bin is the plane sum),
//!   the inverse carries the `1 / (H * W)` factor;
//! - every channel is transformed independently over its `H x W` plane;
//! - amplitude is `sqrt(re^2 + im^2 + AMPLITUDE_EPS)` so it stays
//!   differentiable at empty bins; phase is `atan2(im, re)`.

mod fft;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::tensor::{FeatureMap, Matrix};

pub(crate) use fft::FftPlan;

/// Regularizer inside the amplitude square root.
pub const AMPLITUDE_EPS: f64 = 1e-24;

/// Smallest amplitude [`decompose`] can return, `sqrt(AMPLITUDE_EPS)`.
pub const AMPLITUDE_FLOOR: f64 = 1e-12;

/// Largest `H * W` the quadratic-time oracle accepts.
pub const ORACLE_MAX_BINS: usize = 4096;

/// `ifft2` rejects spectra whose inverse has an imaginary part above this
/// fraction of the largest real output value.
pub const SYMMETRY_TOLERANCE: f64 = 1e-6;

/// Complex spectrum indexed `(c, u, v)`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    channels: usize,
    height: usize,
    width: usize,
    data: Vec<Complex64>,
}

impl Spectrum {
    pub fn new(channels: usize, height: usize, width: usize, data: Vec<Complex64>) -> Result<Self> {
        if channels * height * width == 0 || data.len() != channels * height * width {
            return Err(Error::ShapeMismatch(format!(
                "{} bins for a {channels}x{height}x{width} spectrum",
                data.len()
            )));
        }
        Ok(Spectrum {
            channels,
            height,
            width,
            data,
        })
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.channels, self.height, self.width)
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn get(&self, c: usize, u: usize, v: usize) -> Complex64 {
        self.data[(c * self.height + u) * self.width + v]
    }

    pub fn real_part(&self) -> Vec<f64> {
        self.data.iter().map(|z| z.re).collect()
    }

    pub fn imag_part(&self) -> Vec<f64> {
        self.data.iter().map(|z| z.im).collect()
    }

    pub fn max_abs_diff(&self, other: &Spectrum) -> f64 {
        assert_eq!(self.dims(), other.dims());
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).norm()))
    }

    /// Largest `|X(u, v) - conj(X(-u, -v))|` over all bins and channels.
    pub fn conjugate_symmetry_error(&self) -> f64 {
        let (c, h, w) = self.dims();
        let mut worst: f64 = 0.0;
        for ch in 0..c {
            for u in 0..h {
                for v in 0..w {
                    let z = self.get(ch, u, v);
                    let m = self.get(ch, (h - u) % h, (w - v) % w);
                    worst = worst.max((z - m.conj()).norm());
                }
            }
        }
        worst
    }
}

/// Polar form of a [`Spectrum`]. Amplitude may be signed after
/// normalization; a negative amplitude composes as a half-turn of phase.
#[derive(Debug, Clone, PartialEq)]
pub struct AmpPhase {
    channels: usize,
    height: usize,
    width: usize,
    amplitude: Vec<f64>,
    phase: Vec<f64>,
}

impl AmpPhase {
    pub fn new(
        channels: usize,
        height: usize,
        width: usize,
        amplitude: Vec<f64>,
        phase: Vec<f64>,
    ) -> Result<Self> {
        let n = channels * height * width;
        if n == 0 || amplitude.len() != n || phase.len() != n {
            return Err(Error::ShapeMismatch(format!(
                "amplitude/phase lengths {}/{} for {channels}x{height}x{width}",
                amplitude.len(),
                phase.len()
            )));
        }
        Ok(AmpPhase {
            channels,
            height,
            width,
            amplitude,
            phase,
        })
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.channels, self.height, self.width)
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn plane_len(&self) -> usize {
        self.height * self.width
    }

    pub fn amplitude(&self) -> &[f64] {
        &self.amplitude
    }

    pub fn phase(&self) -> &[f64] {
        &self.phase
    }

    pub fn amplitude_channel(&self, c: usize) -> &[f64] {
        let n = self.plane_len();
        &self.amplitude[c * n..(c + 1) * n]
    }

    /// Same phase (bit for bit), new amplitude.
    pub fn with_amplitude(&self, amplitude: Vec<f64>) -> Result<AmpPhase> {
        AmpPhase::new(
            self.channels,
            self.height,
            self.width,
            amplitude,
            self.phase.clone(),
        )
    }
}

/// Transforms every `H x W` plane of `data` (channel-major) in place.
fn transform_planes(data: &mut [Complex64], h: usize, w: usize, inverse: bool) {
    let row_plan = FftPlan::new(w);
    let col_plan = FftPlan::new(h);
    data.par_chunks_mut(h * w).for_each(|plane| {
        for row in plane.chunks_mut(w) {
            if inverse {
                row_plan.inverse_unscaled(row);
            } else {
                row_plan.forward(row);
            }
        }
        let mut col = vec![Complex64::new(0.0, 0.0); h];
        for v in 0..w {
            for u in 0..h {
                col[u] = plane[u * w + v];
            }
            if inverse {
                col_plan.inverse_unscaled(&mut col);
            } else {
                col_plan.forward(&mut col);
            }
            for u in 0..h {
                plane[u * w + v] = col[u];
            }
        }
    });
}

/// Projects each plane onto exact Hermitian symmetry,
/// `X(u, v) <- (X(u, v) + conj(X(-u, -v))) / 2`.
///
/// For the transform of a real plane this only moves roundoff, but it makes
/// mirrored bins exact conjugates, so amplitudes match bit for bit and
/// phases are exact negatives. Downstream amplitude edits then keep the
/// inverse real.
fn hermitian_project(data: &mut [Complex64], h: usize, w: usize) {
    for plane in data.chunks_mut(h * w) {
        for u in 0..h {
            for v in 0..w {
                let i = u * w + v;
                let j = ((h - u) % h) * w + (w - v) % w;
                if j < i {
                    continue;
                }
                let (a, b) = (plane[i], plane[j]);
                let re = (a.re + b.re) / 2.0;
                let im = (a.im - b.im) / 2.0;
                plane[i] = Complex64::new(re, im);
                plane[j] = Complex64::new(re, (b.im - a.im) / 2.0);
            }
        }
    }
}

/// Forward per-channel 2-D FFT (unnormalized).
pub fn fft2(x: &FeatureMap) -> Spectrum {
    let (c, h, w) = x.dims();
    let mut data: Vec<Complex64> = x.data().iter().map(|&v| Complex64::new(v, 0.0)).collect();
    transform_planes(&mut data, h, w, false);
    hermitian_project(&mut data, h, w);
    Spectrum {
        channels: c,
        height: h,
        width: w,
        data,
    }
}

/// Result of an inverse transform: the real part plus the largest
/// imaginary magnitude that was dropped.
#[derive(Debug, Clone)]
pub struct Reconstruction {
    pub map: FeatureMap,
    pub imag_residue: f64,
}

/// Inverse per-channel 2-D FFT with `1 / (H * W)` scaling.
///
/// Fails with [`Error::SymmetryViolation`] when the imaginary residue
/// exceeds [`SYMMETRY_TOLERANCE`] times the largest real output magnitude,
/// i.e. when `s` is not the spectrum of a real map.
pub fn ifft2(s: &Spectrum) -> Result<Reconstruction> {
    let (c, h, w) = s.dims();
    let mut data = s.data.clone();
    transform_planes(&mut data, h, w, true);
    let scale = 1.0 / (h * w) as f64;
    let mut residue: f64 = 0.0;
    let real: Vec<f64> = data
        .iter()
        .map(|z| {
            residue = residue.max((z.im * scale).abs());
            z.re * scale
        })
        .collect();
    let map = FeatureMap::new(c, h, w, real)?;
    let out_scale = map.max_abs();
    if residue > SYMMETRY_TOLERANCE * out_scale {
        return Err(Error::SymmetryViolation {
            residue,
            scale: out_scale,
        });
    }
    Ok(Reconstruction {
        map,
        imag_residue: residue,
    })
}

fn oracle_guard(h: usize, w: usize) -> Result<()> {
    if h * w > ORACLE_MAX_BINS {
        Err(Error::SizeGuard {
            size: h * w,
            limit: ORACLE_MAX_BINS,
        })
    } else {
        Ok(())
    }
}

/// Direct double-sum 2-D DFT, quadratic in `H * W`. Reference for [`fft2`].
pub fn dft2_oracle(x: &FeatureMap) -> Result<Spectrum> {
    let (c, h, w) = x.dims();
    oracle_guard(h, w)?;
    let mut data = Vec::with_capacity(c * h * w);
    for ch in 0..c {
        let plane = x.channel(ch);
        for u in 0..h {
            for v in 0..w {
                let mut acc = Complex64::new(0.0, 0.0);
                for y in 0..h {
                    for z in 0..w {
                        let turns = ((u * y) % h) as f64 / h as f64 + ((v * z) % w) as f64 / w as f64;
                        let (s, co) = (-2.0 * std::f64::consts::PI * turns).sin_cos();
                        acc += Complex64::new(co, s) * plane[y * w + z];
                    }
                }
                data.push(acc);
            }
        }
    }
    Spectrum::new(c, h, w, data)
}

/// Direct double-sum inverse DFT with `1 / (H * W)` scaling; returns the
/// complex spatial values channel-major.
pub fn idft2_oracle(s: &Spectrum) -> Result<Vec<Complex64>> {
    let (c, h, w) = s.dims();
    oracle_guard(h, w)?;
    let scale = 1.0 / (h * w) as f64;
    let mut out = Vec::with_capacity(c * h * w);
    for ch in 0..c {
        for y in 0..h {
            for z in 0..w {
                let mut acc = Complex64::new(0.0, 0.0);
                for u in 0..h {
                    for v in 0..w {
                        let turns = ((u * y) % h) as f64 / h as f64 + ((v * z) % w) as f64 / w as f64;
                        let (sn, co) = (2.0 * std::f64::consts::PI * turns).sin_cos();
                        acc += Complex64::new(co, sn) * s.get(ch, u, v);
                    }
                }
                out.push(acc * scale);
            }
        }
    }
    Ok(out)
}

pub fn decompose(s: &Spectrum) -> AmpPhase {
    let amplitude = s
        .data
        .iter()
        .map(|z| (z.re * z.re + z.im * z.im + AMPLITUDE_EPS).sqrt())
        .collect();
    let phase = s.data.iter().map(|z| z.im.atan2(z.re)).collect();
    AmpPhase {
        channels: s.channels,
        height: s.height,
        width: s.width,
        amplitude,
        phase,
    }
}

pub fn compose(ap: &AmpPhase) -> Spectrum {
    let data = ap
        .amplitude
        .iter()
        .zip(&ap.phase)
        .map(|(&a, &p)| {
            let (s, c) = p.sin_cos();
            Complex64::new(a * c, a * s)
        })
        .collect();
    Spectrum {
        channels: ap.channels,
        height: ap.height,
        width: ap.width,
        data,
    }
}

/// Signed frequency index of bin `u` on a length-`n` axis, matching the
/// layout after [`fftshift`] (DC at `n / 2`).
pub fn signed_frequency(u: usize, n: usize) -> isize {
    ((u + n / 2) % n) as isize - (n / 2) as isize
}

/// Radial frequency of bin `(u, v)` with each axis scaled so its Nyquist
/// frequency is 1.
pub fn normalized_radius(u: usize, v: usize, h: usize, w: usize) -> f64 {
    let fy = signed_frequency(u, h) as f64 / (h as f64 / 2.0);
    let fx = signed_frequency(v, w) as f64 / (w as f64 / 2.0);
    (fy * fy + fx * fx).sqrt()
}

/// Moves the DC bin of an `h x w` plane to `(h / 2, w / 2)`.
pub fn fftshift<T: Copy>(plane: &[T], h: usize, w: usize) -> Vec<T> {
    assert_eq!(plane.len(), h * w);
    let mut out = plane.to_vec();
    for u in 0..h {
        for v in 0..w {
            out[((u + h / 2) % h) * w + (v + w / 2) % w] = plane[u * w + v];
        }
    }
    out
}

/// Squared-amplitude mass split at a radial frequency, averaged over channels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandEnergy {
    pub low: f64,
    pub high: f64,
}

impl BandEnergy {
    /// `high / (low + high)`, or 0 for an empty spectrum.
    pub fn high_fraction(&self) -> f64 {
        let total = self.low + self.high;
        if total > 0.0 {
            self.high / total
        } else {
            0.0
        }
    }
}

/// Splits `sum(a^2)` into bins with normalized radius `<= radial_cut` (low)
/// and `> radial_cut` (high); see [`normalized_radius`].
pub fn band_energy(ap: &AmpPhase, radial_cut: f64) -> BandEnergy {
    let (c, h, w) = ap.dims();
    let mut low_mask = vec![false; h * w];
    for u in 0..h {
        for v in 0..w {
            low_mask[u * w + v] = normalized_radius(u, v, h, w) <= radial_cut;
        }
    }
    let (mut low, mut high) = (0.0, 0.0);
    for ch in 0..c {
        for (a, &is_low) in ap.amplitude_channel(ch).iter().zip(&low_mask) {
            if is_low {
                low += a * a;
            } else {
                high += a * a;
            }
        }
    }
    BandEnergy {
        low: low / c as f64,
        high: high / c as f64,
    }
}

/// Channel-averaged `ln(1 + |a| - AMPLITUDE_FLOOR)`, DC at the center.
/// Subtracting the floor makes empty bins exactly 0. Signed amplitudes
/// contribute their magnitude.
pub fn heatmap(ap: &AmpPhase) -> Matrix {
    let (c, h, w) = ap.dims();
    let mut acc = vec![0.0; h * w];
    for ch in 0..c {
        for (dst, a) in acc.iter_mut().zip(ap.amplitude_channel(ch)) {
            *dst += (a.abs() - AMPLITUDE_FLOOR).max(0.0).ln_1p();
        }
    }
    for v in acc.iter_mut() {
        *v /= c as f64;
    }
    Matrix::new(h, w, fftshift(&acc, h, w)).expect("heatmap values are finite")
}

#[cfg(test)]
mod tests {
    use super::*;
    use freqadapt_oracle as oracle;
    use proptest::prelude::*;
    use rand_chacha::rand_core::{RngCore, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn noise(c: usize, h: usize, w: usize, seed: u64) -> FeatureMap {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        FeatureMap::from_fn(c, h, w, |_, _, _| {
            (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
        })
        .unwrap()
    }

    #[test]
    fn constant_and_impulse() {
        let s = fft2(&FeatureMap::new(1, 2, 2, vec![1.0; 4]).unwrap());
        assert_eq!(s.get(0, 0, 0), Complex64::new(4.0, 0.0));
        for (u, v) in [(0, 1), (1, 0), (1, 1)] {
            assert!(s.get(0, u, v).norm() < 1e-15);
        }
        let s = fft2(&FeatureMap::new(1, 2, 2, vec![1.0, 0.0, 0.0, 0.0]).unwrap());
        assert!(s.data().iter().all(|z| (z - Complex64::new(1.0, 0.0)).norm() < 1e-15));
    }

    #[test]
    fn fft_matches_oracle_on_random_map() {
        let x = noise(1, 4, 4, 1);
        assert!(fft2(&x).max_abs_diff(&dft2_oracle(&x).unwrap()) < 1e-10);
        let x = noise(2, 5, 7, 2);
        assert!(fft2(&x).max_abs_diff(&dft2_oracle(&x).unwrap()) < 1e-10);
    }

    #[test]
    fn oracle_size_guard() {
        let x = FeatureMap::zeros(1, 65, 64).unwrap();
        assert!(matches!(dft2_oracle(&x), Err(Error::SizeGuard { .. })));
        assert!(dft2_oracle(&FeatureMap::zeros(1, 64, 64).unwrap()).is_ok());
    }

    #[test]
    fn oracle_constant_and_cosine() {
        let s = dft2_oracle(&FeatureMap::new(1, 3, 3, vec![0.5; 9]).unwrap()).unwrap();
        assert!((s.get(0, 0, 0).re - 4.5).abs() < 1e-14);
        let w = 8;
        let x = FeatureMap::from_fn(1, 3, w, |_, _, z| (2.0 * PI * z as f64 / w as f64).cos()).unwrap();
        let s = dft2_oracle(&x).unwrap();
        for u in 0..3 {
            for v in 0..w {
                let z = s.get(0, u, v);
                if u == 0 && (v == 1 || v == w - 1) {
                    assert!((z.re - 12.0).abs() < 1e-12 && z.im.abs() < 1e-12);
                } else {
                    assert!(z.norm() < 1e-12, "leak at ({u},{v})");
                }
            }
        }
    }

    #[test]
    fn ifft_examples() {
        let x = noise(3, 8, 8, 4);
        let r = ifft2(&fft2(&x)).unwrap();
        assert!(r.map.max_abs_diff(&x) < 1e-10);
        assert!(r.imag_residue < 1e-10);

        let mut dc = vec![Complex64::new(0.0, 0.0); 12];
        dc[0] = Complex64::new(12.0, 0.0);
        let r = ifft2(&Spectrum::new(1, 3, 4, dc).unwrap()).unwrap();
        assert!(r.map.data().iter().all(|v| (v - 1.0).abs() < 1e-15));
    }

    #[test]
    fn ifft_matches_oracle_inverse_on_symmetric_spectrum() {
        let x = noise(2, 6, 5, 9);
        // A random Hermitian spectrum: the transform of a random real map.
        let s = dft2_oracle(&x).unwrap();
        let want = idft2_oracle(&s).unwrap();
        let got = ifft2(&s).unwrap();
        for (a, b) in got.map.data().iter().zip(&want) {
            assert!((a - b.re).abs() < 1e-10);
        }
    }

    #[test]
    fn ifft_flags_asymmetric_spectrum() {
        let mut d = vec![Complex64::new(0.0, 0.0); 16];
        d[1] = Complex64::new(3.0, 0.0);
        let err = ifft2(&Spectrum::new(1, 4, 4, d).unwrap()).unwrap_err();
        assert!(matches!(err, Error::SymmetryViolation { .. }));
    }

    #[test]
    fn decompose_examples() {
        let s = Spectrum::new(
            1,
            1,
            2,
            vec![Complex64::new(3.0, 4.0), Complex64::new(-1.0, 0.0)],
        )
        .unwrap();
        let ap = decompose(&s);
        assert!((ap.amplitude()[0] - 5.0).abs() < 1e-15);
        assert!((ap.phase()[0] - 4f64.atan2(3.0)).abs() < 1e-15);
        assert!((ap.phase()[0] - 0.927_295).abs() < 1e-6);
        assert!((ap.amplitude()[1] - 1.0).abs() < 1e-15);
        assert_eq!(ap.phase()[1], PI);
    }

    #[test]
    fn compose_examples() {
        let ap = AmpPhase::new(1, 1, 3, vec![1.0, -2.0, 2.0], vec![0.0, 0.0, PI]).unwrap();
        let s = compose(&ap);
        assert_eq!(s.data()[0], Complex64::new(1.0, 0.0));
        assert_eq!(s.data()[1], Complex64::new(-2.0, 0.0));
        assert!((s.data()[2] - s.data()[1]).norm() < 1e-15);
    }

    #[test]
    fn band_energy_examples() {
        let ap = decompose(&fft2(&FeatureMap::new(2, 6, 6, vec![1.5; 72]).unwrap()));
        let e = band_energy(&ap, 0.25);
        assert!(e.high < 1e-20, "constant map leaked into high band: {}", e.high);

        let x = FeatureMap::from_fn(1, 6, 8, |_, h, w| if (h + w) % 2 == 0 { 1.0 } else { -1.0 }).unwrap();
        let e = band_energy(&decompose(&fft2(&x)), 0.25);
        assert!(e.low < 1e-20);
        assert!((e.high - 48.0f64.powi(2)).abs() < 1e-9);

        let x = noise(3, 9, 8, 5);
        let ap = decompose(&fft2(&x));
        let e = band_energy(&ap, 0.25);
        let (lo, hi) = oracle::band_energy(ap.amplitude(), 3, 9, 8, 0.25);
        assert!((e.low - lo).abs() <= 1e-12 * lo);
        assert!((e.high - hi).abs() <= 1e-12 * hi);
        assert!((e.high / e.low - hi / lo).abs() <= 1e-12 * (hi / lo));
    }

    #[test]
    fn heatmap_examples() {
        let zero = heatmap(&decompose(&fft2(&FeatureMap::zeros(2, 4, 5).unwrap())));
        assert!(zero.data().iter().all(|&v| v == 0.0));
        assert_eq!(AMPLITUDE_EPS.sqrt(), AMPLITUDE_FLOOR);

        let hm = heatmap(&decompose(&fft2(&FeatureMap::new(1, 5, 4, vec![2.0; 20]).unwrap())));
        for i in 0..5 {
            for j in 0..4 {
                let v = hm.get(i, j);
                if (i, j) == (2, 2) {
                    assert!((v - 41f64.ln()).abs() < 1e-13);
                } else {
                    assert!(v < 1e-14, "({i}, {j}) = {v:e}");
                }
            }
        }

        let ap = decompose(&fft2(&noise(3, 7, 6, 8)));
        let want = oracle::heatmap(ap.amplitude(), 3, 7, 6);
        let got = heatmap(&ap);
        for (a, b) in got.data().iter().zip(&want) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn fftshift_centers_dc_for_odd_and_even() {
        let plane: Vec<usize> = (0..15).collect();
        let s = fftshift(&plane, 3, 5);
        assert_eq!(s[5 + 2], 0);
        assert_eq!(signed_frequency(0, 4), 0);
        assert_eq!(signed_frequency(2, 4), -2);
        assert_eq!(signed_frequency(3, 5), -2);
    }

    #[test]
    fn real_input_spectrum_is_exactly_hermitian() {
        let s = fft2(&noise(2, 6, 7, 21));
        assert_eq!(s.conjugate_symmetry_error(), 0.0);
        let ap = decompose(&s);
        let (_, h, w) = ap.dims();
        for u in 0..h {
            for v in 0..w {
                let m = ((h - u) % h) * w + (w - v) % w;
                assert_eq!(ap.amplitude()[u * w + v], ap.amplitude()[m]);
            }
        }
    }

    proptest! {
        #[test]
        fn parseval(seed in any::<u64>(), h in 4usize..10, w in 4usize..10) {
            let x = noise(2, h, w, seed);
            let energy: f64 = x.data().iter().map(|v| v * v).sum();
            let ap = decompose(&fft2(&x));
            let spec: f64 = ap.amplitude().iter().map(|a| a * a).sum::<f64>() / (h * w) as f64;
            prop_assert!((energy - spec).abs() <= 1e-8 * energy);
        }

        #[test]
        fn fft_and_ifft_are_linear(seed in any::<u64>(), a in -2.0f64..2.0, b in -2.0f64..2.0) {
            let x = noise(2, 5, 6, seed);
            let y = noise(2, 5, 6, seed ^ 0xabc);
            let combo = x.map(|v| a * v).unwrap().add_scaled(&y, b).unwrap();
            let lhs = fft2(&combo);
            let (sx, sy) = (fft2(&x), fft2(&y));
            let rhs: Vec<Complex64> = sx.data().iter().zip(sy.data()).map(|(p, q)| p * a + q * b).collect();
            let rhs = Spectrum::new(2, 5, 6, rhs).unwrap();
            prop_assert!(lhs.max_abs_diff(&rhs) < 1e-10);
            let back = ifft2(&rhs).unwrap().map;
            prop_assert!(back.max_abs_diff(&combo) < 1e-10);
        }

        #[test]
        fn compose_decompose_round_trip(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut u = || (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0;
            let data: Vec<Complex64> = (0..24).map(|_| Complex64::new(u() * 5.0, u() * 5.0)).collect();
            let s = Spectrum::new(2, 3, 4, data).unwrap();
            let back = compose(&decompose(&s));
            for (a, b) in back.data().iter().zip(s.data()) {
                if b.norm() > 1e-9 {
                    prop_assert!((a - b).norm() < 1e-9);
                }
            }
            let amp: Vec<f64> = (0..24).map(|_| u() * 3.0).collect();
            let ph: Vec<f64> = (0..24).map(|_| u() * PI).collect();
            let ap = AmpPhase::new(2, 3, 4, amp.clone(), ph.clone()).unwrap();
            let again = decompose(&compose(&ap));
            for i in 0..24 {
                prop_assert!((again.amplitude()[i] - amp[i].abs()).abs() < 1e-9);
                let d = (again.phase()[i] - ph[i]).rem_euclid(PI);
                prop_assert!(d.min(PI - d) < 1e-9);
            }
        }
    }
}
