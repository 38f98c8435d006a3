//! Reference implementations for checking `freqadapt`.
//!
//! Everything here is written for obviousness rather than speed: nested
//! loops, explicit index arithmetic, and double-double accumulation where
//! the check needs headroom beyond `f64`. None of it shares code with the
//! library under test.

pub mod dd;

use dd::Dd;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Direct 6-loop "same" convolution with zero padding.
///
/// `input` is `[c_in, h, w]`, `kernel` is `[c_out, c_in, k, k]`.
pub fn conv2d(
    input: &[f64],
    c_in: usize,
    h: usize,
    w: usize,
    kernel: &[f64],
    c_out: usize,
    k: usize,
) -> Vec<f64> {
    let pad = (k - 1) / 2;
    let mut out = vec![0.0; c_out * h * w];
    for o in 0..c_out {
        for y in 0..h {
            for x in 0..w {
                let mut acc = 0.0;
                for i in 0..c_in {
                    for ky in 0..k {
                        for kx in 0..k {
                            let sy = y as isize + ky as isize - pad as isize;
                            let sx = x as isize + kx as isize - pad as isize;
                            if sy < 0 || sx < 0 || sy >= h as isize || sx >= w as isize {
                                continue;
                            }
                            acc += kernel[((o * c_in + i) * k + ky) * k + kx]
                                * input[(i * h + sy as usize) * w + sx as usize];
                        }
                    }
                }
                out[(o * h + y) * w + x] = acc;
            }
        }
    }
    out
}

/// Triple-loop matrix product of row-major `[n, m] x [m, p]`.
pub fn matmul(a: &[f64], n: usize, m: usize, b: &[f64], p: usize) -> Vec<f64> {
    let mut out = vec![0.0; n * p];
    for i in 0..n {
        for j in 0..p {
            let mut acc = 0.0;
            for t in 0..m {
                acc += a[i * m + t] * b[t * p + j];
            }
            out[i * p + j] = acc;
        }
    }
    out
}

fn matmul_dd(a: &[Dd], n: usize, m: usize, b: &[Dd], p: usize) -> Vec<Dd> {
    let mut out = vec![Dd::ZERO; n * p];
    for i in 0..n {
        for j in 0..p {
            out[i * p + j] = (0..m).map(|t| a[i * m + t] * b[t * p + j]).sum();
        }
    }
    out
}

fn to_dd(v: &[f64]) -> Vec<Dd> {
    v.iter().map(|&x| Dd::new(x)).collect()
}

/// `x * sigmoid(x)` evaluated in double-double.
pub fn silu(x: f64) -> f64 {
    let x = Dd::new(x);
    (x / (Dd::ONE + (-x).exp())).to_f64()
}

/// Softmax of a single row in double-double.
pub fn softmax_row(row: &[f64]) -> Vec<f64> {
    softmax_row_dd(&to_dd(row)).into_iter().map(Dd::to_f64).collect()
}

fn softmax_row_dd(row: &[Dd]) -> Vec<Dd> {
    let max = row.iter().map(|d| d.hi).fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<Dd> = row.iter().map(|&x| (x - Dd::new(max)).exp()).collect();
    let s: Dd = e.iter().copied().sum();
    e.into_iter().map(|x| x / s).collect()
}

/// Two-pass mean and population standard deviation in double-double.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = Dd::new(values.len() as f64);
    let mean = values.iter().map(|&v| Dd::new(v)).sum::<Dd>() / n;
    let var = values
        .iter()
        .map(|&v| (Dd::new(v) - mean).sqr())
        .sum::<Dd>()
        / n;
    (mean.to_f64(), var.sqrt().to_f64())
}

/// Shapes for [`dense_attention`]; all matrices row-major.
pub struct AttentionShapes {
    pub n_visual: usize,
    pub d_visual: usize,
    pub n_text: usize,
    pub d_text: usize,
    pub d_k: usize,
}

/// `softmax((xv wq)(xt wk)^T / sqrt(d_k)) (xt wv) wo (+ bias)`, every
/// intermediate kept in double-double.
#[allow(clippy::too_many_arguments)]
pub fn dense_attention(
    s: &AttentionShapes,
    xv: &[f64],
    xt: &[f64],
    wq: &[f64],
    wk: &[f64],
    wv: &[f64],
    wo: &[f64],
    bias: Option<&[f64]>,
) -> Vec<f64> {
    let q = matmul_dd(&to_dd(xv), s.n_visual, s.d_visual, &to_dd(wq), s.d_k);
    let k = matmul_dd(&to_dd(xt), s.n_text, s.d_text, &to_dd(wk), s.d_k);
    let v = matmul_dd(&to_dd(xt), s.n_text, s.d_text, &to_dd(wv), s.d_k);
    let scale = Dd::new(s.d_k as f64).sqrt();
    let mut attended = vec![Dd::ZERO; s.n_visual * s.d_k];
    for i in 0..s.n_visual {
        let logits: Vec<Dd> = (0..s.n_text)
            .map(|j| {
                (0..s.d_k)
                    .map(|t| q[i * s.d_k + t] * k[j * s.d_k + t])
                    .sum::<Dd>()
                    / scale
            })
            .collect();
        let weights = softmax_row_dd(&logits);
        for t in 0..s.d_k {
            attended[i * s.d_k + t] = (0..s.n_text).map(|j| weights[j] * v[j * s.d_k + t]).sum();
        }
    }
    let mut out = matmul_dd(&attended, s.n_visual, s.d_k, &to_dd(wo), s.d_visual);
    if let Some(b) = bias {
        for i in 0..s.n_visual {
            for j in 0..s.d_visual {
                out[i * s.d_visual + j] = out[i * s.d_visual + j] + Dd::new(b[j]);
            }
        }
    }
    out.into_iter().map(Dd::to_f64).collect()
}

/// Source index of shifted position `i` for a length-`n` axis (DC lands at `n / 2`).
fn unshift(i: usize, n: usize) -> usize {
    (i + n - n / 2) % n
}

/// Per-bin low/high band sums of squared amplitude on an explicitly
/// fftshift-ed copy, averaged over channels.
pub fn band_energy(amplitude: &[f64], c: usize, h: usize, w: usize, cut: f64) -> (f64, f64) {
    let (mut low, mut high) = (0.0, 0.0);
    for ch in 0..c {
        let mut shifted = vec![0.0; h * w];
        for i in 0..h {
            for j in 0..w {
                shifted[i * w + j] = amplitude[(ch * h + unshift(i, h)) * w + unshift(j, w)];
            }
        }
        for i in 0..h {
            for j in 0..w {
                let fy = (i as f64 - (h / 2) as f64) / (h as f64 / 2.0);
                let fx = (j as f64 - (w / 2) as f64) / (w as f64 / 2.0);
                let a2 = shifted[i * w + j] * shifted[i * w + j];
                if (fy * fy + fx * fx).sqrt() <= cut {
                    low += a2;
                } else {
                    high += a2;
                }
            }
        }
    }
    (low / c as f64, high / c as f64)
}

/// Channel-averaged `ln(1 + |a| - 1e-12)` on an explicitly shifted grid;
/// `1e-12` is the amplitude of an empty bin.
pub fn heatmap(amplitude: &[f64], c: usize, h: usize, w: usize) -> Vec<f64> {
    let mut out = vec![0.0; h * w];
    for ch in 0..c {
        for i in 0..h {
            for j in 0..w {
                let a = amplitude[(ch * h + unshift(i, h)) * w + unshift(j, w)];
                out[i * w + j] += (1.0 + (a.abs() - 1e-12).max(0.0)).ln();
            }
        }
    }
    out.iter().map(|v| v / c as f64).collect()
}

struct Stream(ChaCha8Rng);

impl Stream {
    fn uniform(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 / 9_007_199_254_740_992.0
    }

    fn normal(&mut self) -> f64 {
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }

    fn gamma(&mut self, alpha: f64) -> f64 {
        if alpha < 1.0 {
            let g = self.gamma(alpha + 1.0);
            let u = 1.0 - self.uniform();
            return g * u.powf(1.0 / alpha);
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
                return d * v;
            }
        }
    }
}

/// Dirichlet draw as plain `G_i / sum(G)` over Marsaglia-Tsang gamma
/// variates from a ChaCha8 stream seeded with `seed`.
pub fn dirichlet(alpha: &[f64], seed: u64) -> Vec<f64> {
    let mut s = Stream(ChaCha8Rng::seed_from_u64(seed));
    let g: Vec<f64> = alpha.iter().map(|&a| s.gamma(a)).collect();
    let total: f64 = g.iter().sum();
    g.iter().map(|x| x / total).collect()
}

/// `n` values uniform on `[-1, 1)` from a ChaCha8 stream seeded with `seed`.
pub fn uniform_noise(n: usize, seed: u64) -> Vec<f64> {
    let mut s = Stream(ChaCha8Rng::seed_from_u64(seed));
    (0..n).map(|_| 2.0 * s.uniform() - 1.0).collect()
}
