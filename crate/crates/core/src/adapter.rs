//! The plain adapter block and per-stage placement.
//!
//! ```text
//! b   = silu(agg((conv3(x) + conv5(x) + conv7(x)) / 3))
//! out = proj(x + augment(b))        ResidualOrder::BeforeProjection
//! out = x + proj(augment(b))        ResidualOrder::AfterProjection
//! ```

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::cca::{self, AttentionParams, NormGroups, TokenMatrix, DEFAULT_DK};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, Stream};
use crate::sda::{self, StyleStats, StyleWeights};
use crate::tensor::{conv2d, silu, ConvKernel, FeatureMap};

pub const DEFAULT_STAGES: usize = 3;
pub const DEFAULT_TEXT_TOKENS: usize = 8;
pub const DEFAULT_TEXT_DIM: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct AdapterWeights {
    pub k3: ConvKernel,
    pub k5: ConvKernel,
    pub k7: ConvKernel,
    pub agg: ConvKernel,
    pub proj: ConvKernel,
}

impl AdapterWeights {
    pub fn new(k3: ConvKernel, k5: ConvKernel, k7: ConvKernel, agg: ConvKernel, proj: ConvKernel) -> Result<Self> {
        let c = k3.c_in();
        let expect = [(&k3, 3), (&k5, 5), (&k7, 7), (&agg, 1), (&proj, 1)];
        for (i, (k, size)) in expect.iter().enumerate() {
            if k.c_in() != c || k.c_out() != c || k.size() != *size {
                return Err(Error::ShapeMismatch(format!(
                    "adapter kernel {i} is {}x{}x{}x{}, expected {c}x{c}x{size}x{size}",
                    k.c_out(),
                    k.c_in(),
                    k.size(),
                    k.size()
                )));
            }
        }
        Ok(AdapterWeights { k3, k5, k7, agg, proj })
    }

    /// Zero branch, identity projection: the block is the identity map.
    pub fn zero_branch(channels: usize) -> Result<Self> {
        Self::new(
            ConvKernel::zeros(channels, channels, 3)?,
            ConvKernel::zeros(channels, channels, 5)?,
            ConvKernel::zeros(channels, channels, 7)?,
            ConvKernel::zeros(channels, channels, 1)?,
            ConvKernel::identity(channels),
        )
    }

    /// Uniform init with variance `1 / fan_in`, drawn in the order
    /// `k3, k5, k7, agg, proj`.
    pub fn seeded(channels: usize, seed: u64) -> Result<Self> {
        let mut s = Stream::new(seed);
        let mut init = |k: usize| {
            let fan_in = channels * k * k;
            let bound = (3.0 / fan_in as f64).sqrt();
            let data = (0..channels * fan_in).map(|_| bound * s.symmetric()).collect();
            ConvKernel::new(channels, channels, k, data)
        };
        let k3 = init(3)?;
        let k5 = init(5)?;
        let k7 = init(7)?;
        let agg = init(1)?;
        let proj = init(1)?;
        Self::new(k3, k5, k7, agg, proj)
    }

    pub fn channels(&self) -> usize {
        self.k3.c_in()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ResidualOrder {
    #[default]
    BeforeProjection,
    AfterProjection,
}

/// What goes in the augmentation slot.
#[derive(Debug, Clone, PartialEq)]
pub enum Augment {
    Identity,
    /// Dirichlet weights drawn from `seed`, statistics taken from the slot input.
    Sda { alpha: Vec<f64>, seed: u64 },
    SdaFixed { stats: StyleStats, weights: StyleWeights },
    Cca {
        text: TokenMatrix,
        params: AttentionParams,
        groups: NormGroups,
    },
}

impl Augment {
    pub fn apply(&self, x: &FeatureMap) -> Result<FeatureMap> {
        match self {
            Augment::Identity => Ok(x.clone()),
            Augment::Sda { alpha, seed } => sda::sda_forward(x, alpha, *seed),
            Augment::SdaFixed { stats, weights } => sda::sda_forward_with(x, stats, weights),
            Augment::Cca { text, params, groups } => cca::cca_forward_with(x, text, params, *groups),
        }
    }
}

/// The averaged three-kernel branch before the augmentation slot.
pub fn branch(x: &FeatureMap, w: &AdapterWeights) -> Result<FeatureMap> {
    if w.channels() != x.channels() {
        return Err(Error::ShapeMismatch(format!(
            "adapter has {} channels, input has {}",
            w.channels(),
            x.channels()
        )));
    }
    let c3 = conv2d(x, &w.k3, 1)?;
    let c5 = conv2d(x, &w.k5, 2)?;
    let c7 = conv2d(x, &w.k7, 3)?;
    let (c, h, wd) = x.dims();
    let avg: Vec<f64> = c3
        .data()
        .iter()
        .zip(c5.data())
        .zip(c7.data())
        .map(|((a, b), d)| (a + b + d) / 3.0)
        .collect();
    let avg = FeatureMap::new(c, h, wd, avg)?;
    Ok(silu(&conv2d(&avg, &w.agg, 0)?))
}

pub fn plain_forward(x: &FeatureMap, w: &AdapterWeights, augment: &Augment) -> Result<FeatureMap> {
    plain_forward_with(x, w, augment, ResidualOrder::default())
}

pub fn plain_forward_with(
    x: &FeatureMap,
    w: &AdapterWeights,
    augment: &Augment,
    order: ResidualOrder,
) -> Result<FeatureMap> {
    let b = augment.apply(&branch(x, w)?)?;
    match order {
        ResidualOrder::BeforeProjection => conv2d(&x.add_scaled(&b, 1.0)?, &w.proj, 0),
        ResidualOrder::AfterProjection => x.add_scaled(&conv2d(&b, &w.proj, 0)?, 1.0),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StageKind {
    #[default]
    None,
    Plain,
    Sda,
    Cca,
}

impl FromStr for StageKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(StageKind::None),
            "plain" => Ok(StageKind::Plain),
            "sda" => Ok(StageKind::Sda),
            "cca" => Ok(StageKind::Cca),
            other => Err(Error::InvalidArgument(format!(
                "unknown stage kind '{other}' (expected none, plain, sda or cca)"
            ))),
        }
    }
}

impl fmt::Display for StageKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StageKind::None => "none",
            StageKind::Plain => "plain",
            StageKind::Sda => "sda",
            StageKind::Cca => "cca",
        })
    }
}

/// Stage assignment plus the knobs each adapter kind needs. Stages are
/// numbered from 1.
#[derive(Debug, Clone, PartialEq)]
pub struct PlacementConfig {
    stages: Vec<StageKind>,
    /// Dirichlet concentrations; `None` means all ones for whatever channel
    /// count the stage has.
    pub sda_alpha: Option<Vec<f64>>,
    pub d_k: usize,
    pub text_tokens: usize,
    pub text_dim: usize,
    pub cca_bias: bool,
    pub residual: ResidualOrder,
    pub seed: u64,
}

impl Default for PlacementConfig {
    /// SDA at stage 1, CCA at stage 3, three stages.
    fn default() -> Self {
        PlacementConfig {
            stages: vec![StageKind::Sda, StageKind::None, StageKind::Cca],
            sda_alpha: None,
            d_k: DEFAULT_DK,
            text_tokens: DEFAULT_TEXT_TOKENS,
            text_dim: DEFAULT_TEXT_DIM,
            cca_bias: false,
            residual: ResidualOrder::default(),
            seed: 0,
        }
    }
}

impl PlacementConfig {
    /// `count` stages, all passthrough.
    pub fn empty(count: usize) -> Result<Self> {
        if count == 0 {
            return Err(Error::InvalidArgument("need at least one stage".into()));
        }
        Ok(PlacementConfig {
            stages: vec![StageKind::None; count],
            ..Self::default()
        })
    }

    pub fn stage_count(&self) -> usize {
        self.stages.len()
    }

    pub fn stages(&self) -> &[StageKind] {
        &self.stages
    }

    pub fn kind(&self, stage: usize) -> Result<StageKind> {
        self.check_stage(stage)?;
        Ok(self.stages[stage - 1])
    }

    pub fn assign(&mut self, stage: usize, kind: StageKind) -> Result<()> {
        self.check_stage(stage)?;
        self.stages[stage - 1] = kind;
        Ok(())
    }

    /// Applies a list like `1=sda,3=cca`.
    pub fn assign_list(&mut self, list: &str) -> Result<()> {
        for item in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (idx, kind) = item
                .split_once('=')
                .ok_or_else(|| Error::InvalidArgument(format!("stage entry '{item}' is not i=kind")))?;
            let idx: usize = idx
                .trim()
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("bad stage index '{idx}'")))?;
            self.assign(idx, kind.trim().parse()?)?;
        }
        Ok(())
    }

    /// Resizes to `count` stages, keeping existing assignments that still fit.
    pub fn set_stage_count(&mut self, count: usize) -> Result<()> {
        if count == 0 {
            return Err(Error::InvalidArgument("need at least one stage".into()));
        }
        self.stages.resize(count, StageKind::None);
        Ok(())
    }

    fn check_stage(&self, stage: usize) -> Result<()> {
        if stage == 0 || stage > self.stages.len() {
            return Err(Error::InvalidArgument(format!(
                "stage {stage} out of range 1..={}",
                self.stages.len()
            )));
        }
        Ok(())
    }

    /// Seed owned by stage `stage` (1-based).
    pub fn stage_seed(&self, stage: usize) -> u64 {
        derive_seed(self.seed, stage as u64)
    }

    /// Weights and augmentation stage `stage` would use on a
    /// `channels`-channel map. `None` for passthrough stages.
    pub fn stage_adapter(&self, stage: usize, channels: usize) -> Result<Option<(AdapterWeights, Augment)>> {
        let kind = self.kind(stage)?;
        let seed = self.stage_seed(stage);
        let augment = match kind {
            StageKind::None => return Ok(None),
            StageKind::Plain => Augment::Identity,
            StageKind::Sda => {
                let alpha = self.sda_alpha.clone().unwrap_or_else(|| vec![1.0; channels]);
                Augment::Sda {
                    alpha,
                    seed: derive_seed(seed, 1),
                }
            }
            StageKind::Cca => {
                let mut params = AttentionParams::seeded(channels, self.text_dim, self.d_k, derive_seed(seed, 2))?;
                if self.cca_bias {
                    let mut s = Stream::new(derive_seed(seed, 4));
                    params.bias = Some((0..channels).map(|_| 0.1 * s.symmetric()).collect());
                }
                Augment::Cca {
                    text: TokenMatrix::synthetic(self.text_tokens, self.text_dim, derive_seed(seed, 3)),
                    params,
                    groups: NormGroups::PerChannel,
                }
            }
        };
        Ok(Some((AdapterWeights::seeded(channels, derive_seed(seed, 0))?, augment)))
    }

    fn run_stage(&self, stage: usize, x: &FeatureMap) -> Result<FeatureMap> {
        match self.stage_adapter(stage, x.channels())? {
            None => Ok(x.clone()),
            Some((w, aug)) => plain_forward_with(x, &w, &aug, self.residual),
        }
    }
}

/// Runs each stage's adapter on its own feature map. Stages are independent
/// and run in parallel; the result matches sequential evaluation bitwise.
pub fn run_stack(features: &[FeatureMap], cfg: &PlacementConfig) -> Result<Vec<FeatureMap>> {
    if features.len() != cfg.stage_count() {
        return Err(Error::ShapeMismatch(format!(
            "{} feature maps for {} configured stages",
            features.len(),
            cfg.stage_count()
        )));
    }
    features
        .par_iter()
        .enumerate()
        .map(|(i, x)| cfg.run_stage(i + 1, x))
        .collect()
}

/// Runs a single stage, for callers that evaluate stages one at a time.
pub fn run_single_stage(x: &FeatureMap, stage: usize, cfg: &PlacementConfig) -> Result<FeatureMap> {
    cfg.run_stage(stage, x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sda::identity_style;
    use crate::synth::{gen_features, FeatureKind};
    use freqadapt_oracle as oracle;

    fn noise(c: usize, h: usize, w: usize, seed: u64) -> FeatureMap {
        gen_features(FeatureKind::Noise, c, h, w, seed).unwrap()
    }

    #[test]
    fn zero_branch_is_exact_identity() {
        for (i, &(c, h, w)) in [(1, 1, 1), (3, 6, 5), (4, 9, 9)].iter().enumerate() {
            let x = noise(c, h, w, i as u64);
            let wts = AdapterWeights::zero_branch(c).unwrap();
            for order in [ResidualOrder::BeforeProjection, ResidualOrder::AfterProjection] {
                let y = plain_forward_with(&x, &wts, &Augment::Identity, order).unwrap();
                assert_eq!(y, x);
            }
        }
    }

    #[test]
    fn identity_sda_matches_identity_augment() {
        let x = noise(3, 8, 7, 4);
        let w = AdapterWeights::seeded(3, 9).unwrap();
        let (stats, weights) = identity_style(3);
        let a = plain_forward(&x, &w, &Augment::Identity).unwrap();
        let b = plain_forward(&x, &w, &Augment::SdaFixed { stats, weights }).unwrap();
        assert!(a.max_abs_diff(&b) < 1e-9);
    }

    #[test]
    fn matches_stepwise_oracle() {
        let (c, h, w) = (3, 7, 6);
        let x = noise(c, h, w, 21);
        let wts = AdapterWeights::seeded(c, 22).unwrap();
        let conv = |inp: &[f64], k: &ConvKernel| oracle::conv2d(inp, c, h, w, k.data(), c, k.size());
        let c3 = conv(x.data(), &wts.k3);
        let c5 = conv(x.data(), &wts.k5);
        let c7 = conv(x.data(), &wts.k7);
        let avg: Vec<f64> = (0..c3.len()).map(|i| (c3[i] + c5[i] + c7[i]) / 3.0).collect();
        let act: Vec<f64> = conv(&avg, &wts.agg).into_iter().map(oracle::silu).collect();
        let res: Vec<f64> = x.data().iter().zip(&act).map(|(a, b)| a + b).collect();
        let expect = conv(&res, &wts.proj);
        let got = plain_forward(&x, &wts, &Augment::Identity).unwrap();
        let err = got.data().iter().zip(&expect).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-10, "{err}");

        let post = plain_forward_with(&x, &wts, &Augment::Identity, ResidualOrder::AfterProjection).unwrap();
        let projected = conv(&act, &wts.proj);
        let err = post
            .data()
            .iter()
            .zip(x.data().iter().zip(&projected))
            .map(|(g, (a, b))| (g - (a + b)).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-10, "{err}");
    }

    #[test]
    fn channel_mismatch_rejected() {
        let x = noise(2, 4, 4, 0);
        let w = AdapterWeights::zero_branch(3).unwrap();
        assert!(matches!(plain_forward(&x, &w, &Augment::Identity), Err(Error::ShapeMismatch(_))));
        let bad = AdapterWeights::new(
            ConvKernel::zeros(2, 2, 5).unwrap(),
            ConvKernel::zeros(2, 2, 5).unwrap(),
            ConvKernel::zeros(2, 2, 7).unwrap(),
            ConvKernel::zeros(2, 2, 1).unwrap(),
            ConvKernel::identity(2),
        );
        assert!(bad.is_err());
    }

    fn stage_inputs() -> Vec<FeatureMap> {
        vec![noise(3, 8, 8, 1), noise(4, 6, 6, 2), noise(5, 4, 4, 3)]
    }

    #[test]
    fn all_none_is_bitwise_passthrough() {
        let xs = stage_inputs();
        let out = run_stack(&xs, &PlacementConfig::empty(3).unwrap()).unwrap();
        assert_eq!(out, xs);
    }

    #[test]
    fn default_leaves_stage_two_untouched() {
        let xs = stage_inputs();
        let cfg = PlacementConfig { seed: 5, ..Default::default() };
        let out = run_stack(&xs, &cfg).unwrap();
        assert_eq!(out[1].data(), xs[1].data());
        assert_ne!(out[0], xs[0]);
        assert_ne!(out[2], xs[2]);
    }

    #[test]
    fn stack_is_deterministic_and_order_independent() {
        let xs = stage_inputs();
        let mut cfg = PlacementConfig { seed: 77, ..Default::default() };
        cfg.assign_list("2=plain").unwrap();
        let a = run_stack(&xs, &cfg).unwrap();
        let b = run_stack(&xs, &cfg).unwrap();
        assert_eq!(a, b);
        for stage in [3, 1, 2] {
            let single = run_single_stage(&xs[stage - 1], stage, &cfg).unwrap();
            assert_eq!(single, a[stage - 1]);
        }
    }

    #[test]
    fn stage_bounds_and_parsing() {
        let mut cfg = PlacementConfig::default();
        assert!(cfg.assign(0, StageKind::Sda).is_err());
        assert!(cfg.assign(4, StageKind::Sda).is_err());
        assert!(cfg.assign_list("1=cca, 2=sda").is_ok());
        assert_eq!(cfg.stages(), &[StageKind::Cca, StageKind::Sda, StageKind::Cca]);
        assert!(cfg.assign_list("2:sda").is_err());
        assert!(cfg.assign_list("2=film").is_err());
        assert!(run_stack(&stage_inputs()[..2], &cfg).is_err());
        assert_eq!("none".parse::<StageKind>().unwrap().to_string(), "none");
    }

    #[test]
    fn stage_seeds_differ() {
        let cfg = PlacementConfig { seed: 3, ..Default::default() };
        assert_ne!(cfg.stage_seed(1), cfg.stage_seed(2));
        assert_ne!(cfg.stage_seed(1), cfg.stage_seed(3));
    }
}
