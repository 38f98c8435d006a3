use freqadapt::cca::{amp_normalize, TokenMatrix, AttentionParams};
use freqadapt::rng::{derive_seed, Stream};
use freqadapt::sda::{channel_stats, sample_dirichlet, style_fuse};
use freqadapt::spectral::{compose, decompose, fft2, ifft2};
use freqadapt::synth::{gen_features, FeatureKind};

fn dims(s: &mut Stream) -> (usize, usize, usize) {
    let pick = |s: &mut Stream, lo: usize, hi: usize| lo + (s.uniform() * (hi - lo + 1) as f64) as usize;
    (pick(s, 1, 4), pick(s, 1, 12), pick(s, 1, 12))
}

#[test]
fn sda_output_is_real_over_ten_thousand_trials() {
    let mut worst = 0.0f64;
    for trial in 0..10_000u64 {
        let mut s = Stream::new(derive_seed(1234, trial));
        let (c, h, w) = dims(&mut s);
        let x = gen_features(FeatureKind::Noise, c, h, w, trial).unwrap();
        let alpha: Vec<f64> = (0..c).map(|_| 0.1 + 5.0 * s.uniform()).collect();
        let weights = sample_dirichlet(&alpha, trial).unwrap();
        let fused = style_fuse(&decompose(&fft2(&x)), &channel_stats(&x), &weights).unwrap();
        let rec = ifft2(&compose(&fused)).unwrap();
        let scale = rec.map.max_abs().max(f64::MIN_POSITIVE);
        worst = worst.max(rec.imag_residue / scale);
    }
    assert!(worst <= 1e-8, "worst relative imaginary residue {worst:e}");
}

#[test]
fn cca_normalized_output_is_real() {
    for trial in 0..500u64 {
        let mut s = Stream::new(derive_seed(99, trial));
        let (c, h, w) = dims(&mut s);
        if h * w < 2 {
            continue;
        }
        let x = gen_features(FeatureKind::Smooth, c, h, w, trial).unwrap();
        let xt = TokenMatrix::synthetic(4, 6, trial);
        let p = AttentionParams::seeded(c, 6, 8, trial).unwrap();
        let y = freqadapt::cca::cross_attention(&freqadapt::cca::flatten_tokens(&x), &xt, &p).unwrap();
        let y = freqadapt::cca::unflatten_tokens(&y, h, w).unwrap();
        let Ok(normed) = amp_normalize(&decompose(&fft2(&y))) else { continue };
        let rec = ifft2(&compose(&normed)).unwrap();
        assert!(rec.imag_residue <= 1e-8 * rec.map.max_abs().max(1e-300), "trial {trial}");
    }
}
