//! Dense `f64` containers and the basic neural ops the adapters build on.
//!
//! Layouts are fixed: feature maps are `(c, h, w)` row-major, matrices are
//! row-major, convolution kernels are `(c_out, c_in, k, k)`.

use rayon::prelude::*;

use crate::error::{Error, Result};

fn check_finite(data: &[f64]) -> Result<()> {
    match data.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(Error::NonFinite { index }),
        None => Ok(()),
    }
}

/// A `C x H x W` activation tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    channels: usize,
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl FeatureMap {
    pub fn new(channels: usize, height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if channels == 0 || height == 0 || width == 0 {
            return Err(Error::InvalidArgument(format!(
                "feature map dims must be >= 1, got {channels}x{height}x{width}"
            )));
        }
        if data.len() != channels * height * width {
            return Err(Error::ShapeMismatch(format!(
                "{} values for a {channels}x{height}x{width} map",
                data.len()
            )));
        }
        check_finite(&data)?;
        Ok(FeatureMap {
            channels,
            height,
            width,
            data,
        })
    }

    pub fn zeros(channels: usize, height: usize, width: usize) -> Result<Self> {
        Self::new(channels, height, width, vec![0.0; channels * height * width])
    }

    pub fn from_fn(
        channels: usize,
        height: usize,
        width: usize,
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(channels * height * width);
        for c in 0..channels {
            for h in 0..height {
                for w in 0..width {
                    data.push(f(c, h, w));
                }
            }
        }
        Self::new(channels, height, width, data)
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// `(C, H, W)`.
    pub fn dims(&self) -> (usize, usize, usize) {
        (self.channels, self.height, self.width)
    }

    pub fn plane_len(&self) -> usize {
        self.height * self.width
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn get(&self, c: usize, h: usize, w: usize) -> f64 {
        self.data[(c * self.height + h) * self.width + w]
    }

    pub fn channel(&self, c: usize) -> &[f64] {
        let n = self.plane_len();
        &self.data[c * n..(c + 1) * n]
    }

    pub fn same_shape(&self, other: &FeatureMap) -> bool {
        self.dims() == other.dims()
    }

    pub(crate) fn ensure_same_shape(&self, other: &FeatureMap, what: &str) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::ShapeMismatch(format!(
                "{what}: {:?} vs {:?}",
                self.dims(),
                other.dims()
            )))
        }
    }

    /// Elementwise map; the result must stay finite.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<FeatureMap> {
        Self::new(
            self.channels,
            self.height,
            self.width,
            self.data.iter().map(|&v| f(v)).collect(),
        )
    }

    /// `self + scale * other`.
    pub fn add_scaled(&self, other: &FeatureMap, scale: f64) -> Result<FeatureMap> {
        self.ensure_same_shape(other, "add_scaled")?;
        Self::new(
            self.channels,
            self.height,
            self.width,
            self.data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + scale * b)
                .collect(),
        )
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.data
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest elementwise absolute difference; shapes must match.
    pub fn max_abs_diff(&self, other: &FeatureMap) -> f64 {
        assert!(self.same_shape(other), "max_abs_diff on mismatched shapes");
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }
}

/// Row-major `rows x cols` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::ShapeMismatch(format!(
                "{} values for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        check_finite(&data)?;
        Ok(Matrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn transpose(&self) -> Matrix {
        let mut data = Vec::with_capacity(self.data.len());
        for c in 0..self.cols {
            for r in 0..self.rows {
                data.push(self.get(r, c));
            }
        }
        Matrix {
            rows: self.cols,
            cols: self.rows,
            data,
        }
    }

    pub fn scale(&self, s: f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }
}

/// Convolution weights `[c_out, c_in, k, k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvKernel {
    c_out: usize,
    c_in: usize,
    k: usize,
    data: Vec<f64>,
}

impl ConvKernel {
    pub fn new(c_out: usize, c_in: usize, k: usize, data: Vec<f64>) -> Result<Self> {
        if c_out == 0 || c_in == 0 || k == 0 {
            return Err(Error::InvalidArgument("kernel dims must be >= 1".into()));
        }
        if k.is_multiple_of(2) {
            return Err(Error::InvalidArgument(format!(
                "kernel size must be odd, got {k}"
            )));
        }
        if data.len() != c_out * c_in * k * k {
            return Err(Error::ShapeMismatch(format!(
                "{} values for a {c_out}x{c_in}x{k}x{k} kernel",
                data.len()
            )));
        }
        check_finite(&data)?;
        Ok(ConvKernel {
            c_out,
            c_in,
            k,
            data,
        })
    }

    pub fn zeros(c_out: usize, c_in: usize, k: usize) -> Result<Self> {
        Self::new(c_out, c_in, k, vec![0.0; c_out * c_in * k * k])
    }

    /// `1 x 1` kernel that copies channel `i` to channel `i`.
    pub fn identity(channels: usize) -> Self {
        let mut data = vec![0.0; channels * channels];
        for i in 0..channels {
            data[i * channels + i] = 1.0;
        }
        ConvKernel {
            c_out: channels,
            c_in: channels,
            k: 1,
            data,
        }
    }

    pub fn c_out(&self) -> usize {
        self.c_out
    }

    pub fn c_in(&self) -> usize {
        self.c_in
    }

    pub fn size(&self) -> usize {
        self.k
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn same_padding(&self) -> usize {
        (self.k - 1) / 2
    }
}

/// Stride-1 "same" convolution with zero padding.
///
/// `padding` must equal `(k - 1) / 2`; anything else would change the
/// output size, which this crate does not support.
pub fn conv2d(input: &FeatureMap, kernel: &ConvKernel, padding: usize) -> Result<FeatureMap> {
    if kernel.c_in != input.channels {
        return Err(Error::ShapeMismatch(format!(
            "kernel expects {} input channels, map has {}",
            kernel.c_in, input.channels
        )));
    }
    if padding != kernel.same_padding() {
        return Err(Error::InvalidArgument(format!(
            "padding {padding} does not preserve size for k={}",
            kernel.k
        )));
    }
    let (h, w, k) = (input.height, input.width, kernel.k);
    let plane = h * w;
    let mut out = vec![0.0; kernel.c_out * plane];
    out.par_chunks_mut(plane).enumerate().for_each(|(o, dst)| {
        for i in 0..kernel.c_in {
            let src = input.channel(i);
            let taps = &kernel.data[(o * kernel.c_in + i) * k * k..][..k * k];
            for ky in 0..k {
                // Output rows y whose source row y + ky - padding is in range.
                let y0 = padding.saturating_sub(ky);
                let y1 = (h + padding).saturating_sub(ky).min(h);
                for kx in 0..k {
                    let wgt = taps[ky * k + kx];
                    if wgt == 0.0 {
                        continue;
                    }
                    let x0 = padding.saturating_sub(kx);
                    let x1 = (w + padding).saturating_sub(kx).min(w);
                    for y in y0..y1 {
                        let sy = y + ky - padding;
                        let row_out = &mut dst[y * w..(y + 1) * w];
                        let row_in = &src[sy * w..(sy + 1) * w];
                        for x in x0..x1 {
                            row_out[x] += wgt * row_in[x + kx - padding];
                        }
                    }
                }
            }
        }
    });
    FeatureMap::new(kernel.c_out, h, w, out)
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[inline]
pub fn silu_scalar(x: f64) -> f64 {
    x * sigmoid(x)
}

/// Derivative of `x * sigmoid(x)`.
#[inline]
pub fn silu_grad_scalar(x: f64) -> f64 {
    let s = sigmoid(x);
    s * (1.0 + x * (1.0 - s))
}

pub fn silu(input: &FeatureMap) -> FeatureMap {
    input
        .map(silu_scalar)
        .expect("silu of finite input is finite")
}

pub fn matmul(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if a.cols != b.rows {
        return Err(Error::ShapeMismatch(format!(
            "matmul {}x{} by {}x{}",
            a.rows, a.cols, b.rows, b.cols
        )));
    }
    let mut out = vec![0.0; a.rows * b.cols];
    for (i, dst) in out.chunks_mut(b.cols.max(1)).enumerate().take(a.rows) {
        for (t, &av) in a.row(i).iter().enumerate() {
            for (d, &bv) in dst.iter_mut().zip(b.row(t)) {
                *d += av * bv;
            }
        }
    }
    Matrix::new(a.rows, b.cols, out)
}

/// Row-wise softmax with max subtraction.
pub fn softmax_rows(m: &Matrix) -> Matrix {
    let mut data = m.data.clone();
    if m.cols > 0 {
        for row in data.chunks_mut(m.cols) {
            let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mut sum = 0.0;
            for v in row.iter_mut() {
                *v = (*v - max).exp();
                sum += *v;
            }
            for v in row.iter_mut() {
                *v /= sum;
            }
        }
    }
    Matrix {
        rows: m.rows,
        cols: m.cols,
        data,
    }
}
