//! Correlation constraint: cross-attend visual tokens to text embeddings,
//! then standardize the Fourier amplitude of the result.
//!
//! ```text
//! Q = Xv Wq,  K = Xt Wk,  V = Xt Wv
//! Xv_hat = softmax(Q K^T / sqrt(d_k)) V Wo  (+ bias)
//! a_norm = (a - mean(a)) / std(a)           per channel, over all H*W bins
//! X_hat  = IFFT(compose(a_norm, p))
//! ```
//!
//! Standardized amplitudes are signed; a negative value composes as a
//! half-turn of the original phase, which keeps the zero-mean property
//! intact.

use crate::error::{Error, Result};
use crate::rng::Stream;
use crate::spectral::{self, AmpPhase};
use crate::tensor::{matmul, softmax_rows, FeatureMap, Matrix};

/// Standard deviations below this make [`amp_normalize`] fail.
pub const DEGENERATE_STD: f64 = 1e-12;

/// Default key/query width.
pub const DEFAULT_DK: usize = 64;

/// `N x d` token embeddings, one token per row.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenMatrix(Matrix);

impl TokenMatrix {
    pub fn new(tokens: usize, dim: usize, data: Vec<f64>) -> Result<Self> {
        Ok(TokenMatrix(Matrix::new(tokens, dim, data)?))
    }

    pub fn from_matrix(m: Matrix) -> Self {
        TokenMatrix(m)
    }

    pub fn tokens(&self) -> usize {
        self.0.rows()
    }

    pub fn dim(&self) -> usize {
        self.0.cols()
    }

    pub fn as_matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }

    pub fn data(&self) -> &[f64] {
        self.0.data()
    }

    /// Seeded `N x d` embeddings with entries uniform on `[-1, 1)`.
    pub fn synthetic(tokens: usize, dim: usize, seed: u64) -> Self {
        let mut s = Stream::new(seed);
        let data = (0..tokens * dim).map(|_| s.symmetric()).collect();
        TokenMatrix(Matrix::new(tokens, dim, data).expect("finite"))
    }
}

/// Projections for single-head cross-attention.
///
/// `wq: d_v x d_k`, `wk: d_t x d_k`, `wv: d_t x d_k`, `wo: d_k x d_v`.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionParams {
    pub wq: Matrix,
    pub wk: Matrix,
    pub wv: Matrix,
    pub wo: Matrix,
    /// Optional output-projection bias, length `d_v`.
    pub bias: Option<Vec<f64>>,
}

impl AttentionParams {
    pub fn new(wq: Matrix, wk: Matrix, wv: Matrix, wo: Matrix, bias: Option<Vec<f64>>) -> Result<Self> {
        let d_k = wq.cols();
        if d_k == 0 {
            return Err(Error::InvalidArgument("d_k must be >= 1".into()));
        }
        if wk.cols() != d_k || wv.cols() != d_k || wo.rows() != d_k {
            return Err(Error::ShapeMismatch(format!(
                "projection widths disagree: wq {}x{}, wk {}x{}, wv {}x{}, wo {}x{}",
                wq.rows(),
                wq.cols(),
                wk.rows(),
                wk.cols(),
                wv.rows(),
                wv.cols(),
                wo.rows(),
                wo.cols()
            )));
        }
        if wk.rows() != wv.rows() {
            return Err(Error::ShapeMismatch("wk and wv take different text widths".into()));
        }
        if wo.cols() != wq.rows() {
            return Err(Error::ShapeMismatch(format!(
                "wo maps back to {} dims but queries come from {}",
                wo.cols(),
                wq.rows()
            )));
        }
        if let Some(b) = &bias {
            if b.len() != wo.cols() || b.iter().any(|v| !v.is_finite()) {
                return Err(Error::ShapeMismatch("bias must be finite with length d_v".into()));
            }
        }
        Ok(AttentionParams {
            wq,
            wk,
            wv,
            wo,
            bias,
        })
    }

    /// Uniform init with variance `1 / fan_in` per matrix, drawn in the
    /// order `wq, wk, wv, wo`.
    pub fn seeded(d_visual: usize, d_text: usize, d_k: usize, seed: u64) -> Result<Self> {
        let mut s = Stream::new(seed);
        let mut init = |rows: usize, cols: usize| {
            let bound = (3.0 / rows as f64).sqrt();
            let data = (0..rows * cols).map(|_| bound * s.symmetric()).collect();
            Matrix::new(rows, cols, data)
        };
        let wq = init(d_visual, d_k)?;
        let wk = init(d_text, d_k)?;
        let wv = init(d_text, d_k)?;
        let wo = init(d_k, d_visual)?;
        Self::new(wq, wk, wv, wo, None)
    }

    pub fn d_k(&self) -> usize {
        self.wq.cols()
    }

    pub fn d_visual(&self) -> usize {
        self.wq.rows()
    }

    pub fn d_text(&self) -> usize {
        self.wk.rows()
    }

    pub(crate) fn check_inputs(&self, xv: &TokenMatrix, xt: &TokenMatrix) -> Result<()> {
        if xv.dim() != self.d_visual() {
            return Err(Error::ShapeMismatch(format!(
                "visual tokens have dim {}, wq expects {}",
                xv.dim(),
                self.d_visual()
            )));
        }
        if xt.dim() != self.d_text() {
            return Err(Error::ShapeMismatch(format!(
                "text tokens have dim {}, wk/wv expect {}",
                xt.dim(),
                self.d_text()
            )));
        }
        if xt.tokens() == 0 {
            return Err(Error::InvalidArgument("need at least one text token".into()));
        }
        Ok(())
    }
}

/// Token `h * W + w` holds the channel vector at `(h, w)`.
pub fn flatten_tokens(x: &FeatureMap) -> TokenMatrix {
    let (c, h, w) = x.dims();
    let n = h * w;
    let mut data = vec![0.0; n * c];
    for ch in 0..c {
        for (i, &v) in x.channel(ch).iter().enumerate() {
            data[i * c + ch] = v;
        }
    }
    TokenMatrix(Matrix::new(n, c, data).expect("finite"))
}

pub fn unflatten_tokens(t: &TokenMatrix, height: usize, width: usize) -> Result<FeatureMap> {
    if t.tokens() != height * width {
        return Err(Error::ShapeMismatch(format!(
            "{} tokens cannot fill a {height}x{width} plane",
            t.tokens()
        )));
    }
    let c = t.dim();
    FeatureMap::from_fn(c, height, width, |ch, h, w| t.0.get(h * width + w, ch))
}

/// `softmax(Q K^T / sqrt(d_k))`, one row per visual token.
pub fn attention_weights(xv: &TokenMatrix, xt: &TokenMatrix, p: &AttentionParams) -> Result<Matrix> {
    p.check_inputs(xv, xt)?;
    let q = matmul(&xv.0, &p.wq)?;
    let k = matmul(&xt.0, &p.wk)?;
    let logits = matmul(&q, &k.transpose())?.scale(1.0 / (p.d_k() as f64).sqrt());
    Ok(softmax_rows(&logits))
}

/// Attention-enhanced visual tokens. No residual is added here; the
/// adapter frame owns the skip connection.
pub fn cross_attention(xv: &TokenMatrix, xt: &TokenMatrix, p: &AttentionParams) -> Result<TokenMatrix> {
    let weights = attention_weights(xv, xt, p)?;
    let v = matmul(&xt.0, &p.wv)?;
    let out = matmul(&matmul(&weights, &v)?, &p.wo)?;
    Ok(TokenMatrix(add_bias(out, p.bias.as_deref())))
}

pub(crate) fn add_bias(m: Matrix, bias: Option<&[f64]>) -> Matrix {
    let Some(b) = bias else { return m };
    let (rows, cols) = (m.rows(), m.cols());
    let mut data = m.into_data();
    for row in data.chunks_mut(cols) {
        for (v, bb) in row.iter_mut().zip(b) {
            *v += bb;
        }
    }
    Matrix::new(rows, cols, data).expect("finite")
}

/// Which bins share one mean/std in [`amp_normalize_with`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NormGroups {
    #[default]
    PerChannel,
    /// One mean/std over every bin of every channel.
    WholeTensor,
}

impl NormGroups {
    /// `(group count, group length)` for a `c`-channel spectrum with `n` bins per channel.
    pub(crate) fn layout(self, c: usize, n: usize) -> (usize, usize) {
        match self {
            NormGroups::PerChannel => (c, n),
            NormGroups::WholeTensor => (1, c * n),
        }
    }
}

/// Standardizes the amplitude per channel; phase is passed through untouched.
pub fn amp_normalize(ap: &AmpPhase) -> Result<AmpPhase> {
    amp_normalize_with(ap, NormGroups::PerChannel)
}

pub fn amp_normalize_with(ap: &AmpPhase, groups: NormGroups) -> Result<AmpPhase> {
    let (g, len) = groups.layout(ap.channels(), ap.plane_len());
    let mut out = Vec::with_capacity(ap.amplitude().len());
    for (gi, chunk) in ap.amplitude().chunks(len).enumerate().take(g) {
        let n = chunk.len() as f64;
        let mean = chunk.iter().sum::<f64>() / n;
        let std = (chunk.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / n).sqrt();
        if std.is_nan() || std <= DEGENERATE_STD {
            return Err(Error::DegenerateSpectrum { group: gi, std });
        }
        out.extend(chunk.iter().map(|a| (a - mean) / std));
    }
    ap.with_amplitude(out)
}

/// The frequency stage on its own: `IFFT(compose(amp_normalize(decompose(FFT(x)))))`.
pub fn normalize_frequency(x: &FeatureMap, groups: NormGroups) -> Result<FeatureMap> {
    let ap = spectral::decompose(&spectral::fft2(x));
    let normed = amp_normalize_with(&ap, groups)?;
    Ok(spectral::ifft2(&spectral::compose(&normed))?.map)
}

/// Attention on the flattened map followed by the frequency stage.
pub fn cca_forward(x: &FeatureMap, xt: &TokenMatrix, p: &AttentionParams) -> Result<FeatureMap> {
    cca_forward_with(x, xt, p, NormGroups::PerChannel)
}

pub fn cca_forward_with(
    x: &FeatureMap,
    xt: &TokenMatrix,
    p: &AttentionParams,
    groups: NormGroups,
) -> Result<FeatureMap> {
    let enhanced = cross_attention(&flatten_tokens(x), xt, p)?;
    let map = unflatten_tokens(&enhanced, x.height(), x.width())?;
    normalize_frequency(&map, groups)
}

/// High-band energy fraction of `after` minus that of `before`.
pub fn hf_shift(before: &FeatureMap, after: &FeatureMap, radial_cut: f64) -> Result<f64> {
    before.ensure_same_shape(after, "hf_shift")?;
    let frac = |x: &FeatureMap| {
        spectral::band_energy(&spectral::decompose(&spectral::fft2(x)), radial_cut).high_fraction()
    };
    Ok(frac(after) - frac(before))
}

/// Share of channel `c`'s squared amplitude held by the DC bin.
pub fn dc_share(ap: &AmpPhase, c: usize) -> f64 {
    let plane = ap.amplitude_channel(c);
    let total: f64 = plane.iter().map(|a| a * a).sum();
    plane[0] * plane[0] / total
}
