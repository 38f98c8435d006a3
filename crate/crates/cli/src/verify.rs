//! `verify`: oracle comparisons and contract checks, one line per check.

use std::f64::consts::PI;
use std::time::Instant;

use freqadapt::adapter::{self, AdapterWeights, Augment, PlacementConfig, StageKind};
use freqadapt::cca::{self, AttentionParams, TokenMatrix};
use freqadapt::gradcheck;
use freqadapt::rng::{derive_seed, dirichlet, Stream};
use freqadapt::sda;
use freqadapt::spectral::{self, band_energy, compose, decompose, fft2, ifft2};
use freqadapt::synth::{gen_features, FeatureKind};
use freqadapt::tensor::matmul;
use freqadapt::{FeatureMap, Matrix, Result, TensorFile};
use freqadapt_oracle::{self as oracle, AttentionShapes};

use crate::commands::{GRAD_MIN_CONVERGED, GRAD_TOL};
use crate::config::RunConfig;
use crate::{Suite, EXIT_OK, EXIT_VERIFY};

pub const FFT_ORACLE_TOL: f64 = 1e-10;
pub const PARSEVAL_TOL: f64 = 1e-8;
pub const ROUND_TRIP_TOL: f64 = 1e-12;
pub const BAND_ORACLE_TOL: f64 = 1e-12;
pub const PHASE_TOL: f64 = 1e-6;
pub const PHASE_MIN_AMPLITUDE: f64 = 1e-6;
pub const SDA_IDENTITY_TOL: f64 = 1e-9;
pub const SYMMETRY_RESIDUE_TOL: f64 = 1e-8;
pub const NORM_MEAN_TOL: f64 = 1e-10;
pub const NORM_STD_TOL: f64 = 1e-10;
pub const ATTENTION_ORACLE_TOL: f64 = 1e-12;
pub const HF_CORPUS: usize = 100;
pub const HF_MIN_POSITIVE: usize = 95;
pub const HF_CUT: f64 = 0.25;

const TRIALS: u64 = 1000;
const ATTENTION_TRIALS: u64 = 500;

const GOLDEN_DIRICHLET: &[u8] = include_bytes!("../../core/tests/golden/dirichlet_1_1_1_seed42.ftns");
const GOLDEN_NOISE: &[u8] = include_bytes!("../../core/tests/golden/noise_1x4x4_seed7.ftns");

#[derive(Debug, Clone)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn from_result(name: &'static str, r: Result<(bool, String)>) -> Check {
        match r {
            Ok((passed, detail)) => Check { name, passed, detail },
            Err(e) => Check {
                name,
                passed: false,
                detail: format!("error: {e}"),
            },
        }
    }

    pub fn line(&self) -> String {
        format!("{} {:<28} {}", if self.passed { "PASS" } else { "FAIL" }, self.name, self.detail)
    }
}

fn check(name: &'static str, f: impl FnOnce() -> Result<(bool, String)>) -> Check {
    Check::from_result(name, f())
}

fn pick(s: &mut Stream, lo: usize, hi: usize) -> usize {
    lo + ((s.uniform() * (hi - lo + 1) as f64) as usize).min(hi - lo)
}

fn random_dims(s: &mut Stream, max_c: usize, max_side: usize) -> (usize, usize, usize) {
    (pick(s, 1, max_c), pick(s, 1, max_side), pick(s, 1, max_side))
}

fn noise(c: usize, h: usize, w: usize, seed: u64) -> Result<FeatureMap> {
    gen_features(FeatureKind::Noise, c, h, w, seed)
}

// ---------------------------------------------------------------- spectral

pub fn spectral_checks(seed: u64) -> Vec<Check> {
    vec![
        check("fft_vs_dft_oracle", || {
            let mut worst: f64 = 0.0;
            let mut n = 0;
            for c in [1, 3] {
                for h in [1, 2, 3, 4, 5, 6, 7, 8, 11, 12, 16] {
                    for w in [1, 2, 3, 4, 5, 6, 7, 8, 11, 12, 16] {
                        let x = noise(c, h, w, derive_seed(seed, (c * 1000 + h * 37 + w) as u64))?;
                        worst = worst.max(fft2(&x).max_abs_diff(&spectral::dft2_oracle(&x)?));
                        n += 1;
                    }
                }
            }
            Ok((worst <= FFT_ORACLE_TOL, format!("max abs diff {worst:.3e} over {n} shapes (tol {FFT_ORACLE_TOL:e})")))
        }),
        check("parseval", || {
            let mut worst: f64 = 0.0;
            for t in 0..TRIALS {
                let mut s = Stream::new(derive_seed(seed ^ 0x5041, t));
                let (c, h, w) = random_dims(&mut s, 4, 16);
                let x = noise(c, h, w, derive_seed(seed, t))?;
                let space: f64 = x.data().iter().map(|v| v * v).sum();
                let freq: f64 = fft2(&x).data().iter().map(|z| z.norm_sqr()).sum::<f64>() / (h * w) as f64;
                worst = worst.max((space - freq).abs() / space);
            }
            Ok((worst <= PARSEVAL_TOL, format!("max rel err {worst:.3e} over {TRIALS} maps (tol {PARSEVAL_TOL:e})")))
        }),
        check("ifft_round_trip", || {
            let mut worst: f64 = 0.0;
            for t in 0..TRIALS {
                let mut s = Stream::new(derive_seed(seed ^ 0x5254, t));
                let (c, h, w) = random_dims(&mut s, 4, 16);
                let x = noise(c, h, w, derive_seed(seed, t))?;
                worst = worst.max(ifft2(&fft2(&x))?.map.max_abs_diff(&x));
            }
            Ok((worst <= ROUND_TRIP_TOL, format!("max abs diff {worst:.3e} (tol {ROUND_TRIP_TOL:e})")))
        }),
        check("ifft_vs_idft_oracle", || {
            let mut worst: f64 = 0.0;
            for t in 0..200 {
                let mut s = Stream::new(derive_seed(seed ^ 0x4944, t));
                let (c, h, w) = random_dims(&mut s, 3, 12);
                let spec = fft2(&noise(c, h, w, derive_seed(seed, t))?);
                let fast = ifft2(&spec)?.map;
                let slow = spectral::idft2_oracle(&spec)?;
                for (a, z) in fast.data().iter().zip(&slow) {
                    worst = worst.max((a - z.re).abs());
                }
            }
            Ok((worst <= FFT_ORACLE_TOL, format!("max abs diff {worst:.3e} (tol {FFT_ORACLE_TOL:e})")))
        }),
        check("band_energy_vs_oracle", || {
            let mut worst: f64 = 0.0;
            for t in 0..200 {
                let mut s = Stream::new(derive_seed(seed ^ 0x4245, t));
                let (c, h, w) = random_dims(&mut s, 3, 16);
                let cut = 0.05 + 0.9 * s.uniform();
                let ap = decompose(&fft2(&noise(c, h, w, derive_seed(seed, t))?));
                let e = band_energy(&ap, cut);
                let (low, high) = oracle::band_energy(ap.amplitude(), c, h, w, cut);
                let scale = (low + high).max(f64::MIN_POSITIVE);
                worst = worst.max((e.low - low).abs() / scale).max((e.high - high).abs() / scale);
            }
            Ok((worst <= BAND_ORACLE_TOL, format!("max rel err {worst:.3e} (tol {BAND_ORACLE_TOL:e})")))
        }),
        check("heatmap_vs_oracle", || {
            let mut worst: f64 = 0.0;
            for t in 0..200 {
                let mut s = Stream::new(derive_seed(seed ^ 0x484d, t));
                let (c, h, w) = random_dims(&mut s, 3, 16);
                let ap = decompose(&fft2(&noise(c, h, w, derive_seed(seed, t))?));
                let hm = spectral::heatmap(&ap);
                let reference = oracle::heatmap(ap.amplitude(), c, h, w);
                for (a, b) in hm.data().iter().zip(&reference) {
                    worst = worst.max((a - b).abs());
                }
            }
            Ok((worst <= BAND_ORACLE_TOL, format!("max abs diff {worst:.3e} (tol {BAND_ORACLE_TOL:e})")))
        }),
    ]
}

// --------------------------------------------------------------------- sda

/// Phase difference modulo pi, folded into `[0, pi/2]`.
pub fn phase_deviation(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(PI);
    d.min(PI - d)
}

pub fn sda_checks(seed: u64) -> Vec<Check> {
    vec![
        check("sda_phase_preserved", || {
            let mut worst: f64 = 0.0;
            let mut bins = 0usize;
            for t in 0..TRIALS {
                let mut s = Stream::new(derive_seed(seed ^ 0x5344, t));
                let (c, h, w) = random_dims(&mut s, 4, 12);
                let kind = if t % 2 == 0 { FeatureKind::Noise } else { FeatureKind::Smooth };
                let x = gen_features(kind, c, h, w, derive_seed(seed, t))?;
                let alpha: Vec<f64> = (0..c).map(|_| 0.2 + 4.8 * s.uniform()).collect();
                let y = sda::sda_forward(&x, &alpha, derive_seed(seed ^ 0x4449, t))?;
                let before = decompose(&fft2(&x));
                let after = decompose(&fft2(&y));
                for i in 0..before.amplitude().len() {
                    if before.amplitude()[i] > PHASE_MIN_AMPLITUDE && after.amplitude()[i].abs() > PHASE_MIN_AMPLITUDE {
                        worst = worst.max(phase_deviation(after.phase()[i], before.phase()[i]));
                        bins += 1;
                    }
                }
            }
            Ok((worst <= PHASE_TOL, format!("max deviation {worst:.3e} rad over {bins} bins (tol {PHASE_TOL:e})")))
        }),
        check("sda_identity_hook", || {
            let mut worst: f64 = 0.0;
            for t in 0..200 {
                let mut s = Stream::new(derive_seed(seed ^ 0x4948, t));
                let (c, h, w) = random_dims(&mut s, 4, 12);
                let x = noise(c, h, w, derive_seed(seed, t))?;
                let (stats, weights) = sda::identity_style(c);
                worst = worst.max(sda::sda_forward_with(&x, &stats, &weights)?.max_abs_diff(&x));
            }
            Ok((worst <= SDA_IDENTITY_TOL, format!("max abs diff {worst:.3e} (tol {SDA_IDENTITY_TOL:e})")))
        }),
        check("sda_vs_oracle_path", || {
            let mut worst: f64 = 0.0;
            for t in 0..100 {
                let mut s = Stream::new(derive_seed(seed ^ 0x4f50, t));
                let (c, h, w) = random_dims(&mut s, 4, 10);
                let x = noise(c, h, w, derive_seed(seed, t))?;
                let stats = sda::channel_stats(&x);
                let weights = sda::sample_dirichlet(&vec![1.0; c], derive_seed(seed ^ 0x5750, t))?;
                let fast = sda::sda_forward_with(&x, &stats, &weights)?;
                let fused = sda::style_fuse(&decompose(&spectral::dft2_oracle(&x)?), &stats, &weights)?;
                let slow = spectral::idft2_oracle(&compose(&fused))?;
                for (a, z) in fast.data().iter().zip(&slow) {
                    worst = worst.max((a - z.re).abs());
                }
            }
            Ok((worst <= SDA_IDENTITY_TOL, format!("max abs diff {worst:.3e} (tol {SDA_IDENTITY_TOL:e})")))
        }),
        check("sda_output_real", || {
            let mut worst: f64 = 0.0;
            for t in 0..TRIALS {
                let mut s = Stream::new(derive_seed(seed ^ 0x5245, t));
                let (c, h, w) = random_dims(&mut s, 4, 12);
                let x = noise(c, h, w, derive_seed(seed, t))?;
                let alpha: Vec<f64> = (0..c).map(|_| 0.1 + 5.0 * s.uniform()).collect();
                let weights = sda::sample_dirichlet(&alpha, t)?;
                let fused = sda::style_fuse(&decompose(&fft2(&x)), &sda::channel_stats(&x), &weights)?;
                let rec = ifft2(&compose(&fused))?;
                worst = worst.max(rec.imag_residue / rec.map.max_abs().max(f64::MIN_POSITIVE));
            }
            Ok((
                worst <= SYMMETRY_RESIDUE_TOL,
                format!("max relative imaginary residue {worst:.3e} (tol {SYMMETRY_RESIDUE_TOL:e})"),
            ))
        }),
    ]
}

// --------------------------------------------------------------------- cca

/// Counts over the smoothed corpus: `(hf_shift > 0, DC share decreased)`.
pub fn hf_emphasis_counts(seed: u64) -> Result<(usize, usize, f64)> {
    let (c, h, w) = (8, 16, 16);
    let params = AttentionParams::seeded(c, 16, cca::DEFAULT_DK, derive_seed(seed, 2))?;
    let text = TokenMatrix::synthetic(8, 16, derive_seed(seed, 3));
    let (mut positive, mut dc_down, mut mean_shift) = (0, 0, 0.0);
    for i in 0..HF_CORPUS {
        let x = gen_features(FeatureKind::Smooth, c, h, w, derive_seed(seed, 100 + i as u64))?;
        let y = cca::cca_forward(&x, &text, &params)?;
        let shift = cca::hf_shift(&x, &y, HF_CUT)?;
        mean_shift += shift / HF_CORPUS as f64;
        if shift > 0.0 {
            positive += 1;
        }
        let share = |m: &FeatureMap| {
            let ap = decompose(&fft2(m));
            (0..c).map(|ch| cca::dc_share(&ap, ch)).sum::<f64>() / c as f64
        };
        if share(&y) < share(&x) {
            dc_down += 1;
        }
    }
    Ok((positive, dc_down, mean_shift))
}

pub fn cca_checks(seed: u64) -> Vec<Check> {
    let hf = hf_emphasis_counts(seed).map_err(|e| e.to_string());
    let hf_check = |name, f: &dyn Fn(usize, usize, f64) -> (bool, String)| match &hf {
        Ok((pos, dc, mean)) => {
            let (passed, detail) = f(*pos, *dc, *mean);
            Check { name, passed, detail }
        }
        Err(e) => Check {
            name,
            passed: false,
            detail: format!("error: {e}"),
        },
    };
    vec![
        check("cca_normalization_contract", || {
            let (mut mean_err, mut std_err): (f64, f64) = (0.0, 0.0);
            let mut phase_ok = true;
            let mut done = 0;
            for t in 0..TRIALS {
                let mut s = Stream::new(derive_seed(seed ^ 0x4e43, t));
                // At least two bins per channel, else the std is zero by construction.
                let (c, h, w) = (pick(&mut s, 1, 4), pick(&mut s, 2, 12), pick(&mut s, 1, 12));
                let kind = if t % 2 == 0 { FeatureKind::Noise } else { FeatureKind::Smooth };
                let ap = decompose(&fft2(&gen_features(kind, c, h, w, derive_seed(seed, t))?));
                let normed = cca::amp_normalize(&ap)?;
                for ch in 0..c {
                    let (m, sd) = oracle::mean_std(normed.amplitude_channel(ch));
                    mean_err = mean_err.max(m.abs());
                    std_err = std_err.max((sd - 1.0).abs());
                }
                phase_ok &= normed
                    .phase()
                    .iter()
                    .zip(ap.phase())
                    .all(|(a, b)| a.to_bits() == b.to_bits());
                done += 1;
            }
            Ok((
                mean_err <= NORM_MEAN_TOL && std_err <= NORM_STD_TOL && phase_ok,
                format!(
                    "max |mean| {mean_err:.3e}, max |std-1| {std_err:.3e}, phase bitwise {phase_ok} over {done} spectra"
                ),
            ))
        }),
        check("attention_vs_dd_oracle", || {
            let mut worst: f64 = 0.0;
            for t in 0..ATTENTION_TRIALS {
                let mut s = Stream::new(derive_seed(seed ^ 0x4154, t));
                let shapes = AttentionShapes {
                    n_visual: pick(&mut s, 1, 6),
                    d_visual: pick(&mut s, 1, 5),
                    n_text: pick(&mut s, 1, 5),
                    d_text: pick(&mut s, 1, 5),
                    d_k: pick(&mut s, 1, 6),
                };
                let mut p = AttentionParams::seeded(shapes.d_visual, shapes.d_text, shapes.d_k, derive_seed(seed, t))?;
                if t % 2 == 1 {
                    p.bias = Some((0..shapes.d_visual).map(|_| s.symmetric()).collect());
                }
                let xv = TokenMatrix::synthetic(shapes.n_visual, shapes.d_visual, derive_seed(seed ^ 0x5856, t));
                let xt = TokenMatrix::synthetic(shapes.n_text, shapes.d_text, derive_seed(seed ^ 0x5854, t));
                let fast = cca::cross_attention(&xv, &xt, &p)?;
                let slow = oracle::dense_attention(
                    &shapes,
                    xv.data(),
                    xt.data(),
                    p.wq.data(),
                    p.wk.data(),
                    p.wv.data(),
                    p.wo.data(),
                    p.bias.as_deref(),
                );
                for (a, b) in fast.data().iter().zip(&slow) {
                    worst = worst.max((a - b).abs());
                }
            }
            Ok((
                worst <= ATTENTION_ORACLE_TOL,
                format!("max abs diff {worst:.3e} over {ATTENTION_TRIALS} instances (tol {ATTENTION_ORACLE_TOL:e})"),
            ))
        }),
        check("attention_single_token", || {
            let mut exact = true;
            for t in 0..100 {
                let mut s = Stream::new(derive_seed(seed ^ 0x5354, t));
                let (nv, dv, dt, dk) = (pick(&mut s, 1, 8), pick(&mut s, 1, 5), pick(&mut s, 1, 5), pick(&mut s, 1, 8));
                let p = AttentionParams::seeded(dv, dt, dk, derive_seed(seed, t))?;
                let xv = TokenMatrix::synthetic(nv, dv, derive_seed(seed ^ 1, t));
                let xt = TokenMatrix::synthetic(1, dt, derive_seed(seed ^ 2, t));
                let out = cca::cross_attention(&xv, &xt, &p)?;
                let expected = matmul(&matmul(xt.as_matrix(), &p.wv)?, &p.wo)?;
                let weights = cca::attention_weights(&xv, &xt, &p)?;
                exact &= weights.data().iter().all(|&a| a == 1.0);
                exact &= (0..nv).all(|i| out.as_matrix().row(i) == expected.row(0));
            }
            Ok((exact, format!("weights == 1 and rows == V Wo exactly: {exact}")))
        }),
        hf_check("cca_hf_emphasis", &|pos, _, mean| {
            (
                pos >= HF_MIN_POSITIVE,
                format!("hf_shift > 0 in {pos}/{HF_CORPUS} (need {HF_MIN_POSITIVE}), mean {mean:+.4}"),
            )
        }),
        hf_check("cca_dc_share_decrease", &|_, dc, _| {
            (dc == HF_CORPUS, format!("DC share decreased in {dc}/{HF_CORPUS} (need {HF_CORPUS})"))
        }),
    ]
}

// -------------------------------------------------------------------- grad

pub fn grad_checks(cfg: &RunConfig) -> Vec<Check> {
    match gradcheck::run_gradcheck(&cfg.ops, cfg.seed, cfg.probes) {
        Ok(reports) => reports
            .into_iter()
            .zip(&cfg.ops)
            .map(|(r, op)| Check {
                name: op.name(),
                passed: r.passes(GRAD_TOL, GRAD_MIN_CONVERGED),
                detail: format!(
                    "max rel err {:.3e} (tol {GRAD_TOL:e}), converged {:.2} (need {GRAD_MIN_CONVERGED}), {} probes",
                    r.max_rel_err, r.converged_fraction, r.num_probes
                ),
            })
            .collect(),
        Err(e) => vec![Check {
            name: "gradcheck",
            passed: false,
            detail: format!("error: {e}"),
        }],
    }
}

// ------------------------------------------------------------ frame and io

fn bitwise_eq(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
}

fn golden_matches(bytes: &[u8], expected: &TensorFile) -> Result<bool> {
    let pinned = TensorFile::read_from(bytes)?;
    Ok(pinned.dims == expected.dims && bitwise_eq(&pinned.data, &expected.data))
}

pub fn frame_checks(seed: u64) -> Vec<Check> {
    vec![
        check("adapter_zero_branch_identity", || {
            let mut exact = true;
            for t in 0..20 {
                let mut s = Stream::new(derive_seed(seed ^ 0x5a42, t));
                let (c, h, w) = random_dims(&mut s, 4, 10);
                let x = noise(c, h, w, derive_seed(seed, t))?;
                let y = adapter::plain_forward(&x, &AdapterWeights::zero_branch(c)?, &Augment::Identity)?;
                exact &= bitwise_eq(x.data(), y.data());
            }
            Ok((exact, format!("bitwise identity: {exact}")))
        }),
        check("default_placement", || {
            let mut p = PlacementConfig::default();
            p.seed = seed;
            let xs = (0..3)
                .map(|i| noise(4, 8, 8, derive_seed(seed, i)))
                .collect::<Result<Vec<_>>>()?;
            let ys = adapter::run_stack(&xs, &p)?;
            let kinds = p.stages() == [StageKind::Sda, StageKind::None, StageKind::Cca];
            let untouched = bitwise_eq(xs[1].data(), ys[1].data());
            let changed = ys[0].max_abs_diff(&xs[0]) > 0.0 && ys[2].max_abs_diff(&xs[2]) > 0.0;
            Ok((
                kinds && untouched && changed,
                format!("stages sda/none/cca {kinds}, stage 2 bitwise {untouched}, stages 1 and 3 changed {changed}"),
            ))
        }),
        check("stack_deterministic", || {
            let mut p = PlacementConfig::default();
            p.seed = seed;
            let xs = (0..3)
                .map(|i| gen_features(FeatureKind::Smooth, 3, 9, 7, derive_seed(seed, 10 + i)))
                .collect::<Result<Vec<_>>>()?;
            let first = adapter::run_stack(&xs, &p)?;
            let mut same = true;
            for _ in 0..3 {
                let again = adapter::run_stack(&xs, &p)?;
                same &= first.iter().zip(&again).all(|(a, b)| bitwise_eq(a.data(), b.data()));
            }
            let sequential: Vec<FeatureMap> = (0..3)
                .map(|i| adapter::run_single_stage(&xs[i], i + 1, &p))
                .collect::<Result<_>>()?;
            same &= first.iter().zip(&sequential).all(|(a, b)| bitwise_eq(a.data(), b.data()));
            Ok((same, format!("repeated and sequential runs bitwise equal: {same}")))
        }),
        check("tensor_file_round_trip", || {
            let mut s = Stream::new(seed);
            let mut data = vec![0.0, -0.0, f64::MIN_POSITIVE, 5e-324, -5e-324, f64::MAX, f64::MIN, 1.0 / 3.0];
            data.extend((0..64).map(|_| s.normal() * 1e3));
            let t = TensorFile::new(vec![2, 4, 9], data)?;
            let mut buf = Vec::new();
            t.write_to(&mut buf)?;
            let back = TensorFile::read_from(buf.as_slice())?;
            let ok = back.dims == t.dims && bitwise_eq(&back.data, &t.data) && buf.len() == 12 + 3 * 8 + 72 * 8;
            let m = Matrix::new(3, 2, vec![1.5, -0.0, 2.0, 3.0, 4.0, 5.0])?;
            let mut buf2 = Vec::new();
            TensorFile::from_matrix(&m).write_to(&mut buf2)?;
            let ok = ok && bitwise_eq(&TensorFile::read_from(buf2.as_slice())?.data, m.data());
            Ok((ok, format!("bitwise round trip incl. signed zeros and subnormals: {ok}")))
        }),
        check("golden_dirichlet_seed42", || {
            let t = TensorFile::new(vec![3], dirichlet(&[1.0, 1.0, 1.0], 42)?)?;
            let ok = golden_matches(GOLDEN_DIRICHLET, &t)?;
            Ok((ok, format!("Dirichlet(1,1,1) seed 42 matches pinned file: {ok}")))
        }),
        check("golden_noise_seed7", || {
            let t = TensorFile::from_feature_map(&noise(1, 4, 4, 7)?);
            let ok = golden_matches(GOLDEN_NOISE, &t)?;
            Ok((ok, format!("noise 1x4x4 seed 7 matches pinned file: {ok}")))
        }),
    ]
}

pub fn collect(suite: Suite, cfg: &RunConfig) -> Vec<Check> {
    let seed = cfg.seed;
    match suite {
        Suite::Spectral => spectral_checks(seed),
        Suite::Sda => sda_checks(seed),
        Suite::Cca => cca_checks(seed),
        Suite::Grad => grad_checks(cfg),
        Suite::All => {
            let mut all = spectral_checks(seed);
            all.extend(sda_checks(seed));
            all.extend(cca_checks(seed));
            all.extend(grad_checks(cfg));
            all.extend(frame_checks(seed));
            all
        }
    }
}

pub fn run(suite: Suite, cfg: &RunConfig) -> i32 {
    let start = Instant::now();
    let checks = collect(suite, cfg);
    for c in &checks {
        println!("{}", c.line());
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    println!(
        "{}/{} checks passed in {:.1}s",
        checks.len() - failed,
        checks.len(),
        start.elapsed().as_secs_f64()
    );
    if failed == 0 {
        EXIT_OK
    } else {
        EXIT_VERIFY
    }
}
