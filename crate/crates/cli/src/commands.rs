//! `gen`, `apply`, `heatmap` and `gradcheck`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use freqadapt::adapter::{self, AdapterWeights, Augment};
use freqadapt::cca::{self, AttentionParams, TokenMatrix};
use freqadapt::gradcheck::{self, GradReport};
use freqadapt::rng::{derive_seed, Stream};
use freqadapt::sda;
use freqadapt::spectral;
use freqadapt::synth::gen_features;
use freqadapt::{FeatureMap, TensorFile};

use crate::config::RunConfig;
use crate::output;
use crate::{CliError, Transform, EXIT_OK, EXIT_VERIFY};

/// Gradcheck pass criteria.
pub const GRAD_TOL: f64 = 1e-5;
pub const GRAD_MIN_CONVERGED: f64 = 0.9;

fn exactly_one<'a>(paths: &'a [PathBuf], flag: &str) -> Result<&'a Path, CliError> {
    match paths {
        [p] => Ok(p),
        _ => Err(CliError::Usage(format!("expected exactly one --{flag}, got {}", paths.len()))),
    }
}

/// Reads a rank-3 tensor; every failure is reported as a parse error.
pub fn load_map(path: &Path) -> Result<FeatureMap, CliError> {
    TensorFile::load(path)
        .and_then(TensorFile::into_feature_map)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn save_map(path: &Path, x: &FeatureMap) -> Result<(), CliError> {
    TensorFile::from_feature_map(x)
        .save(path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn summary(label: &str, before: &FeatureMap, after: &FeatureMap, cut: f64) -> Result<String, CliError> {
    let (c, h, w) = after.dims();
    let (lo, hi) = after.min_max();
    let shift = cca::hf_shift(before, after, cut)?;
    Ok(format!("{label} {c}x{h}x{w} min={lo:.6e} max={hi:.6e} hf_shift@{cut}={shift:+.6e}"))
}

/// Attention weights and text tokens for a `channels`-wide map, drawn from
/// the same sub-seeds an adapter stage uses.
pub fn cca_inputs(cfg: &RunConfig, channels: usize) -> Result<(AttentionParams, TokenMatrix), CliError> {
    let mut params = AttentionParams::seeded(channels, cfg.text_dim, cfg.dk, derive_seed(cfg.seed, 2))?;
    if cfg.bias {
        let mut s = Stream::new(derive_seed(cfg.seed, 4));
        params.bias = Some((0..channels).map(|_| 0.1 * s.symmetric()).collect());
    }
    let text = TokenMatrix::synthetic(cfg.text_tokens, cfg.text_dim, derive_seed(cfg.seed, 3));
    Ok((params, text))
}

pub fn sda_map(cfg: &RunConfig, x: &FeatureMap) -> Result<FeatureMap, CliError> {
    let c = x.channels();
    if cfg.identity {
        let (stats, w) = sda::identity_style(c);
        return Ok(sda::sda_forward_with(x, &stats, &w)?);
    }
    let alpha = cfg.alpha.clone().unwrap_or_else(|| vec![1.0; c]);
    if alpha.len() != c {
        return Err(CliError::Usage(format!("{} alpha values for {c} channels", alpha.len())));
    }
    let w = sda::sample_dirichlet(&alpha, derive_seed(cfg.seed, 1))?.with_scale_mode(cfg.scale_mode);
    Ok(sda::sda_forward_with(x, &sda::channel_stats(x), &w)?)
}

pub fn gen(cfg: &RunConfig) -> Result<i32, CliError> {
    let out = exactly_one(&cfg.outputs, "out")?;
    let (c, h, w) = cfg.dims;
    let x = gen_features(cfg.kind, c, h, w, cfg.seed)?;
    save_map(out, &x)?;
    let (lo, hi) = x.min_max();
    println!(
        "gen {} {c}x{h}x{w} seed={} min={lo:.6e} max={hi:.6e} -> {}",
        cfg.kind,
        cfg.seed,
        out.display()
    );
    Ok(EXIT_OK)
}

pub fn apply(transform: Transform, cfg: &RunConfig) -> Result<i32, CliError> {
    if cfg.identity && transform != Transform::Sda {
        return Err(CliError::Usage("--identity only applies to `apply sda`".into()));
    }
    if transform == Transform::Stack {
        return apply_stack(cfg);
    }
    let input = exactly_one(&cfg.inputs, "in")?;
    let out = exactly_one(&cfg.outputs, "out")?;
    let x = load_map(input)?;
    let (label, y) = match transform {
        Transform::Sda => ("sda", sda_map(cfg, &x)?),
        Transform::Cca => {
            let (params, text) = cca_inputs(cfg, x.channels())?;
            ("cca", cca::cca_forward_with(&x, &text, &params, cfg.norm)?)
        }
        Transform::Plain => {
            let w = AdapterWeights::seeded(x.channels(), derive_seed(cfg.seed, 0))?;
            ("plain", adapter::plain_forward_with(&x, &w, &Augment::Identity, cfg.residual)?)
        }
        Transform::Stack => unreachable!(),
    };
    save_map(out, &y)?;
    println!("{}", summary(label, &x, &y, cfg.cut)?);
    Ok(EXIT_OK)
}

fn apply_stack(cfg: &RunConfig) -> Result<i32, CliError> {
    let n = cfg.inputs.len();
    if n == 0 || cfg.outputs.len() != n {
        return Err(CliError::Usage(format!(
            "stack needs one --out per --in (got {n} in, {} out)",
            cfg.outputs.len()
        )));
    }
    let placement = cfg.placement(n)?;
    let xs = cfg.inputs.iter().map(|p| load_map(p)).collect::<Result<Vec<_>, _>>()?;
    let ys = adapter::run_stack(&xs, &placement)?;
    for (i, ((x, y), out)) in xs.iter().zip(&ys).zip(&cfg.outputs).enumerate() {
        save_map(out, y)?;
        let label = format!("stage {} {}", i + 1, placement.stages()[i]);
        println!("{}", summary(&label, x, y, cfg.cut)?);
    }
    Ok(EXIT_OK)
}

pub fn heatmap(cfg: &RunConfig, pgm: Option<&Path>, csv: Option<&Path>) -> Result<i32, CliError> {
    let x = load_map(exactly_one(&cfg.inputs, "in")?)?;
    let ap = spectral::decompose(&spectral::fft2(&x));
    let hm = spectral::heatmap(&ap);
    if let Some(p) = pgm {
        output::write_pgm(p, &hm)?;
    }
    if let Some(p) = csv {
        output::write_csv(p, &hm)?;
    }
    let (lo, hi) = hm
        .data()
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let high = spectral::band_energy(&ap, cfg.cut).high_fraction();
    println!(
        "heatmap {}x{} min={lo:.6e} max={hi:.6e} high_fraction@{}={high:.6e}",
        hm.rows(),
        hm.cols(),
        cfg.cut
    );
    Ok(EXIT_OK)
}

pub fn report_table(reports: &[GradReport]) -> String {
    let mut s = format!(
        "{:<16} {:>8} {:>12} {:>8} {:>10}  status\n",
        "op", "probes", "max_rel_err", "step", "converged"
    );
    for r in reports {
        let status = if r.passes(GRAD_TOL, GRAD_MIN_CONVERGED) { "PASS" } else { "FAIL" };
        let _ = writeln!(
            s,
            "{:<16} {:>8} {:>12.3e} {:>8.0e} {:>10.3}  {status}",
            r.op_name, r.num_probes, r.max_rel_err, r.step, r.converged_fraction
        );
    }
    s
}

pub fn report_csv(reports: &[GradReport]) -> String {
    let mut s = String::from("op,probes,max_rel_err,step,converged_fraction,pass\n");
    for r in reports {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            r.op_name,
            r.num_probes,
            r.max_rel_err,
            r.step,
            r.converged_fraction,
            r.passes(GRAD_TOL, GRAD_MIN_CONVERGED)
        );
    }
    s
}

pub fn gradcheck(cfg: &RunConfig, csv: Option<&Path>) -> Result<i32, CliError> {
    let reports = gradcheck::run_gradcheck(&cfg.ops, cfg.seed, cfg.probes)?;
    print!("{}", report_table(&reports));
    if let Some(p) = csv {
        std::fs::write(p, report_csv(&reports)).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
    }
    let ok = reports.iter().all(|r| r.passes(GRAD_TOL, GRAD_MIN_CONVERGED));
    Ok(if ok { EXIT_OK } else { EXIT_VERIFY })
}
