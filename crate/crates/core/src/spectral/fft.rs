//! 1-D complex FFT for arbitrary lengths.
//!
//! Lengths whose prime factors are all `<= MAX_RADIX` go through a recursive
//! decimation-in-time mixed-radix transform with a generic radix-`p`
//! butterfly. Anything with a larger prime factor is handled by Bluestein's
//! chirp-z algorithm on top of a power-of-two mixed-radix plan.
//!
//! All transforms are unnormalized `X[k] = sum_n x[n] exp(-2 pi i n k / N)`.

use std::f64::consts::PI;

use num_complex::Complex64;

const MAX_RADIX: usize = 13;

#[derive(Debug, Clone)]
pub(crate) struct FftPlan {
    len: usize,
    algo: Algo,
}

#[derive(Debug, Clone)]
enum Algo {
    MixedRadix {
        factors: Vec<usize>,
        /// `exp(-2 pi i t / len)` for `t in 0..len`.
        twiddles: Vec<Complex64>,
    },
    Bluestein {
        inner: Box<FftPlan>,
        /// `exp(-pi i k^2 / len)`.
        chirp: Vec<Complex64>,
        /// Forward transform of the conjugate chirp, wrapped to the inner length.
        kernel: Vec<Complex64>,
    },
}

fn factorize(mut n: usize) -> Vec<usize> {
    let mut factors = Vec::new();
    while n.is_multiple_of(4) {
        factors.push(4);
        n /= 4;
    }
    let mut p = 2;
    while n > 1 {
        while n.is_multiple_of(p) {
            factors.push(p);
            n /= p;
        }
        p += 1;
        if p * p > n && n > 1 {
            factors.push(n);
            break;
        }
    }
    factors
}

fn twiddle(t: usize, n: usize) -> Complex64 {
    let (s, c) = (-2.0 * PI * t as f64 / n as f64).sin_cos();
    Complex64::new(c, s)
}

impl FftPlan {
    pub(crate) fn new(len: usize) -> Self {
        assert!(len >= 1, "FFT length must be positive");
        let factors = factorize(len);
        if factors.iter().all(|&p| p <= MAX_RADIX) {
            let twiddles = (0..len).map(|t| twiddle(t, len)).collect();
            return FftPlan {
                len,
                algo: Algo::MixedRadix { factors, twiddles },
            };
        }

        let m = (2 * len - 1).next_power_of_two();
        let inner = FftPlan::new(m);
        let chirp: Vec<Complex64> = (0..len)
            .map(|k| {
                // k^2 mod 2N keeps the angle small and exact.
                let k2 = (k as u128 * k as u128 % (2 * len as u128)) as f64;
                let (s, c) = (-PI * k2 / len as f64).sin_cos();
                Complex64::new(c, s)
            })
            .collect();
        let mut kernel = vec![Complex64::new(0.0, 0.0); m];
        kernel[0] = chirp[0].conj();
        for k in 1..len {
            kernel[k] = chirp[k].conj();
            kernel[m - k] = chirp[k].conj();
        }
        inner.forward(&mut kernel);
        FftPlan {
            len,
            algo: Algo::Bluestein {
                inner: Box::new(inner),
                chirp,
                kernel,
            },
        }
    }

    pub(crate) fn forward(&self, buf: &mut [Complex64]) {
        assert_eq!(buf.len(), self.len);
        match &self.algo {
            Algo::MixedRadix { factors, twiddles } => {
                let input = buf.to_vec();
                let mut scratch = Vec::new();
                mixed_radix(&input, 0, 1, buf, factors, twiddles, 1, &mut scratch);
            }
            Algo::Bluestein {
                inner,
                chirp,
                kernel,
            } => {
                let m = inner.len;
                let mut a = vec![Complex64::new(0.0, 0.0); m];
                for k in 0..self.len {
                    a[k] = buf[k] * chirp[k];
                }
                inner.forward(&mut a);
                for (v, k) in a.iter_mut().zip(kernel) {
                    *v *= k;
                }
                inner.inverse_unscaled(&mut a);
                let scale = 1.0 / m as f64;
                for k in 0..self.len {
                    buf[k] = a[k] * chirp[k] * scale;
                }
            }
        }
    }

    /// `sum_k X[k] exp(+2 pi i n k / N)` without the `1/N` factor.
    pub(crate) fn inverse_unscaled(&self, buf: &mut [Complex64]) {
        for v in buf.iter_mut() {
            *v = v.conj();
        }
        self.forward(buf);
        for v in buf.iter_mut() {
            *v = v.conj();
        }
    }
}

/// Transforms the `out.len()` samples `input[offset + j * stride]` into `out`.
///
/// `tw_stride` maps the local length onto the full twiddle table:
/// `exp(-2 pi i t / out.len()) == twiddles[t * tw_stride]`.
#[allow(clippy::too_many_arguments)]
fn mixed_radix(
    input: &[Complex64],
    offset: usize,
    stride: usize,
    out: &mut [Complex64],
    factors: &[usize],
    twiddles: &[Complex64],
    tw_stride: usize,
    scratch: &mut Vec<Complex64>,
) {
    let n = out.len();
    let Some((&p, rest)) = factors.split_first() else {
        out[0] = input[offset];
        return;
    };
    let m = n / p;
    for j in 0..p {
        mixed_radix(
            input,
            offset + j * stride,
            stride * p,
            &mut out[j * m..(j + 1) * m],
            rest,
            twiddles,
            tw_stride * p,
            scratch,
        );
    }

    let full = twiddles.len();
    scratch.clear();
    scratch.resize(p, Complex64::new(0.0, 0.0));
    for k in 0..m {
        for j in 0..p {
            let t = (j * k * tw_stride) % full;
            scratch[j] = out[j * m + k] * twiddles[t];
        }
        match p {
            2 => {
                out[k] = scratch[0] + scratch[1];
                out[m + k] = scratch[0] - scratch[1];
            }
            4 => {
                let (a, b, c, d) = (scratch[0], scratch[1], scratch[2], scratch[3]);
                let s0 = a + c;
                let s1 = a - c;
                let s2 = b + d;
                // -i * (b - d)
                let bd = b - d;
                let s3 = Complex64::new(bd.im, -bd.re);
                out[k] = s0 + s2;
                out[m + k] = s1 + s3;
                out[2 * m + k] = s0 - s2;
                out[3 * m + k] = s1 - s3;
            }
            _ => {
                let step = full / p;
                for q in 0..p {
                    let mut acc = scratch[0];
                    for (j, s) in scratch.iter().enumerate().skip(1) {
                        acc += s * twiddles[(j * q % p) * step];
                    }
                    out[q * m + k] = acc;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive(x: &[Complex64]) -> Vec<Complex64> {
        let n = x.len();
        (0..n)
            .map(|k| {
                x.iter()
                    .enumerate()
                    .map(|(j, v)| v * twiddle(j * k % n, n))
                    .sum()
            })
            .collect()
    }

    #[test]
    fn factorization_prefers_radix_four() {
        assert_eq!(factorize(16), vec![4, 4]);
        assert_eq!(factorize(12), vec![4, 3]);
        assert_eq!(factorize(90), vec![2, 3, 3, 5]);
        assert_eq!(factorize(17), vec![17]);
        assert_eq!(factorize(1), Vec::<usize>::new());
    }

    #[test]
    fn matches_naive_dft_for_many_lengths() {
        for n in (1..=40).chain([49, 64, 97, 100, 121, 127, 210]) {
            let x: Vec<Complex64> = (0..n)
                .map(|i| Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 1.3).cos() - 0.2))
                .collect();
            let mut y = x.clone();
            FftPlan::new(n).forward(&mut y);
            let want = naive(&x);
            let err = y
                .iter()
                .zip(&want)
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max);
            assert!(err < 1e-11 * n as f64, "n={n} err={err}");
        }
    }

    #[test]
    fn inverse_round_trip() {
        for n in [6, 8, 17, 31] {
            let plan = FftPlan::new(n);
            let x: Vec<Complex64> = (0..n).map(|i| Complex64::new(i as f64, -0.5)).collect();
            let mut y = x.clone();
            plan.forward(&mut y);
            plan.inverse_unscaled(&mut y);
            for (a, b) in y.iter().zip(&x) {
                assert!((a / n as f64 - b).norm() < 1e-12);
            }
        }
    }
}
