//! Run parameters from a `key = value` file and command-line flags.
//!
//! File grammar: one `key = value` per line; `#` starts a comment; blank
//! lines are ignored; a later key replaces an earlier one. Flags replace
//! file values. Unknown keys are rejected.
//!
//! | key           | value                                  | default     |
//! |---------------|----------------------------------------|-------------|
//! | `seed`        | u64                                    | 0           |
//! | `alpha`       | comma list of positive reals           | all ones    |
//! | `dk`          | key width, >= 1                        | 64          |
//! | `cut`         | radial cut in (0, 1)                   | 0.25        |
//! | `stage`       | `i=kind,...` with kind none/plain/sda/cca | SDA@1, CCA@3 |
//! | `text_tokens` | synthetic text token count             | 8           |
//! | `text_dim`    | synthetic text embedding width         | 16          |
//! | `bias`        | bool, output-projection bias           | false       |
//! | `residual`    | `before` or `after` projection         | before      |
//! | `norm`        | `channel` or `tensor`                  | channel     |
//! | `scale_mode`  | `times_c` or `raw`                     | times_c     |
//! | `identity`    | bool, SDA identity-affine hook         | false       |
//! | `probes`      | gradcheck probes per op                | 50          |
//! | `ops`         | comma list of gradcheck ops            | all         |
//! | `kind`        | noise / smooth / checker               | noise       |
//! | `dims`        | `C,H,W`                                | 8,16,16     |
//! | `in`, `out`   | comma list of paths                    | none        |

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use freqadapt::adapter::{PlacementConfig, ResidualOrder, StageKind};
use freqadapt::cca::{NormGroups, DEFAULT_DK};
use freqadapt::gradcheck::GradOp;
use freqadapt::sda::ScaleMode;
use freqadapt::synth::FeatureKind;

use crate::CliError;

pub const KEYS: &[&str] = &[
    "seed",
    "alpha",
    "dk",
    "cut",
    "stage",
    "text_tokens",
    "text_dim",
    "bias",
    "residual",
    "norm",
    "scale_mode",
    "identity",
    "probes",
    "ops",
    "kind",
    "dims",
    "in",
    "out",
];

/// Raw, not yet validated settings.
#[derive(Debug, Clone, Default)]
pub struct Settings(BTreeMap<String, String>);

impl Settings {
    pub fn parse_file(text: &str) -> Result<Self, CliError> {
        let mut s = Settings::default();
        for (no, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("config line {}: expected key = value", no + 1)))?;
            s.set(k.trim(), v.trim())
                .map_err(|e| CliError::Usage(format!("config line {}: {e}", no + 1)))?;
        }
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::parse_file(&text)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        if !KEYS.contains(&key) {
            return Err(CliError::Usage(format!("unknown key '{key}'")));
        }
        self.0.insert(key.to_string(), value.to_string());
        Ok(())
    }

    /// Values in `over` replace ours.
    pub fn overlay(&mut self, over: Settings) {
        self.0.extend(over.0);
    }

    fn get(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub alpha: Option<Vec<f64>>,
    pub dk: usize,
    pub cut: f64,
    pub stage: Option<String>,
    pub text_tokens: usize,
    pub text_dim: usize,
    pub bias: bool,
    pub residual: ResidualOrder,
    pub norm: NormGroups,
    pub scale_mode: ScaleMode,
    pub identity: bool,
    pub probes: usize,
    pub ops: Vec<GradOp>,
    pub kind: FeatureKind,
    pub dims: (usize, usize, usize),
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            alpha: None,
            dk: DEFAULT_DK,
            cut: 0.25,
            stage: None,
            text_tokens: freqadapt::adapter::DEFAULT_TEXT_TOKENS,
            text_dim: freqadapt::adapter::DEFAULT_TEXT_DIM,
            bias: false,
            residual: ResidualOrder::default(),
            norm: NormGroups::default(),
            scale_mode: ScaleMode::default(),
            identity: false,
            probes: 50,
            ops: GradOp::ALL.to_vec(),
            kind: FeatureKind::Noise,
            dims: (8, 16, 16),
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }
}

fn bad(key: &str, value: &str, why: &str) -> CliError {
    CliError::Usage(format!("{key} = '{value}': {why}"))
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, CliError> {
    v.trim().parse().map_err(|_| bad(key, v, "not a valid number"))
}

fn parse_count(key: &str, v: &str) -> Result<usize, CliError> {
    match parse_num::<usize>(key, v)? {
        0 => Err(bad(key, v, "must be >= 1")),
        n => Ok(n),
    }
}

fn parse_bool(key: &str, v: &str) -> Result<bool, CliError> {
    match v.trim() {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        _ => Err(bad(key, v, "expected true or false")),
    }
}

fn split_list(v: &str) -> impl Iterator<Item = &str> {
    v.split(',').map(str::trim).filter(|s| !s.is_empty())
}

impl RunConfig {
    pub fn resolve(s: &Settings) -> Result<Self, CliError> {
        let mut c = RunConfig::default();
        if let Some(v) = s.get("seed") {
            c.seed = parse_num("seed", v)?;
        }
        if let Some(v) = s.get("alpha") {
            let alpha = split_list(v)
                .map(|a| parse_num::<f64>("alpha", a))
                .collect::<Result<Vec<_>, _>>()?;
            if alpha.is_empty() || alpha.iter().any(|a| !(a.is_finite() && *a > 0.0)) {
                return Err(bad("alpha", v, "need positive finite concentrations"));
            }
            c.alpha = Some(alpha);
        }
        if let Some(v) = s.get("dk") {
            c.dk = parse_count("dk", v)?;
        }
        if let Some(v) = s.get("cut") {
            c.cut = parse_num("cut", v)?;
            if !(c.cut > 0.0 && c.cut < 1.0) {
                return Err(bad("cut", v, "must lie in (0, 1)"));
            }
        }
        if let Some(v) = s.get("stage") {
            // Syntax is checked here; ranges once the stage count is known.
            for item in split_list(v) {
                let (i, kind) = item.split_once('=').ok_or_else(|| bad("stage", v, "expected i=kind"))?;
                parse_count("stage", i)?;
                kind.trim()
                    .parse::<StageKind>()
                    .map_err(|e| bad("stage", v, &e.to_string()))?;
            }
            c.stage = Some(v.to_string());
        }
        if let Some(v) = s.get("text_tokens") {
            c.text_tokens = parse_count("text_tokens", v)?;
        }
        if let Some(v) = s.get("text_dim") {
            c.text_dim = parse_count("text_dim", v)?;
        }
        if let Some(v) = s.get("bias") {
            c.bias = parse_bool("bias", v)?;
        }
        if let Some(v) = s.get("identity") {
            c.identity = parse_bool("identity", v)?;
        }
        if let Some(v) = s.get("residual") {
            c.residual = match v {
                "before" => ResidualOrder::BeforeProjection,
                "after" => ResidualOrder::AfterProjection,
                _ => return Err(bad("residual", v, "expected before or after")),
            };
        }
        if let Some(v) = s.get("norm") {
            c.norm = match v {
                "channel" => NormGroups::PerChannel,
                "tensor" => NormGroups::WholeTensor,
                _ => return Err(bad("norm", v, "expected channel or tensor")),
            };
        }
        if let Some(v) = s.get("scale_mode") {
            c.scale_mode = match v {
                "times_c" => ScaleMode::TimesChannels,
                "raw" => ScaleMode::Raw,
                _ => return Err(bad("scale_mode", v, "expected times_c or raw")),
            };
        }
        if let Some(v) = s.get("probes") {
            c.probes = parse_count("probes", v)?;
        }
        if let Some(v) = s.get("ops") {
            c.ops = split_list(v)
                .map(|o| o.parse().map_err(|e: freqadapt::Error| bad("ops", v, &e.to_string())))
                .collect::<Result<_, _>>()?;
            if c.ops.is_empty() {
                return Err(bad("ops", v, "empty op list"));
            }
        }
        if let Some(v) = s.get("kind") {
            c.kind = v.parse().map_err(|e: freqadapt::Error| bad("kind", v, &e.to_string()))?;
        }
        if let Some(v) = s.get("dims") {
            let d = split_list(v)
                .map(|n| parse_count("dims", n))
                .collect::<Result<Vec<_>, _>>()?;
            match d[..] {
                [ch, h, w] => c.dims = (ch, h, w),
                _ => return Err(bad("dims", v, "expected C,H,W")),
            }
        }
        if let Some(v) = s.get("in") {
            c.inputs = split_list(v).map(PathBuf::from).collect();
        }
        if let Some(v) = s.get("out") {
            c.outputs = split_list(v).map(PathBuf::from).collect();
        }
        Ok(c)
    }

    /// Placement for `count` stages: defaults, then `stage` overrides.
    pub fn placement(&self, count: usize) -> Result<PlacementConfig, CliError> {
        let mut p = PlacementConfig::default();
        p.set_stage_count(count)?;
        if let Some(list) = &self.stage {
            p.assign_list(list)?;
        }
        p.sda_alpha = self.alpha.clone();
        p.d_k = self.dk;
        p.text_tokens = self.text_tokens;
        p.text_dim = self.text_dim;
        p.cca_bias = self.bias;
        p.residual = self.residual;
        p.seed = self.seed;
        Ok(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grammar() {
        let s = Settings::parse_file("# comment\nseed = 3\n\ncut=0.3 # trailing\nseed = 9\n").unwrap();
        let c = RunConfig::resolve(&s).unwrap();
        assert_eq!(c.seed, 9);
        assert_eq!(c.cut, 0.3);
    }

    #[test]
    fn unknown_and_malformed_rejected() {
        assert!(Settings::parse_file("sed = 3").is_err());
        assert!(Settings::parse_file("seed 3").is_err());
    }

    #[test]
    fn flags_override_file() {
        let mut s = Settings::parse_file("seed = 1\ndk = 4").unwrap();
        let mut flags = Settings::default();
        flags.set("seed", "2").unwrap();
        s.overlay(flags);
        let c = RunConfig::resolve(&s).unwrap();
        assert_eq!((c.seed, c.dk), (2, 4));
    }

    #[test]
    fn values_validated() {
        for (k, v) in [
            ("cut", "1.5"),
            ("dk", "0"),
            ("alpha", "1,-1"),
            ("dims", "1,2"),
            ("stage", "1:sda"),
            ("bias", "maybe"),
            ("ops", "tanh"),
            ("seed", "-1"),
        ] {
            let mut s = Settings::default();
            s.set(k, v).unwrap();
            assert!(RunConfig::resolve(&s).is_err(), "{k} = {v}");
        }
    }

    #[test]
    fn stage_range_checked_against_count() {
        let mut s = Settings::default();
        s.set("stage", "4=sda").unwrap();
        let c = RunConfig::resolve(&s).unwrap();
        assert!(c.placement(3).is_err());
        assert!(c.placement(4).is_ok());
    }
}
