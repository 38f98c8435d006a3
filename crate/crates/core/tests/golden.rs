//! Pinned outputs of the seeded generators. Set `FREQADAPT_BLESS=1` to
//! rewrite the files (only when the documented RNG chain changes on purpose).

use std::path::PathBuf;

use freqadapt::rng::dirichlet;
use freqadapt::synth::{gen_features, FeatureKind};
use freqadapt::TensorFile;
use freqadapt_oracle as oracle;

fn golden(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

fn check_or_bless(name: &str, t: &TensorFile) {
    let path = golden(name);
    if std::env::var_os("FREQADAPT_BLESS").is_some() {
        t.save(&path).unwrap();
    }
    let pinned = TensorFile::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    assert_eq!(pinned.dims, t.dims);
    for (i, (a, b)) in pinned.data.iter().zip(&t.data).enumerate() {
        assert_eq!(a.to_bits(), b.to_bits(), "{name}[{i}]: pinned {a:e}, got {b:e}");
    }
}

#[test]
fn dirichlet_ones_seed_42() {
    let w = dirichlet(&[1.0, 1.0, 1.0], 42).unwrap();
    let reference = oracle::dirichlet(&[1.0, 1.0, 1.0], 42);
    for (a, b) in w.iter().zip(&reference) {
        assert!((a - b).abs() < 1e-15, "{w:?} vs {reference:?}");
    }
    assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    check_or_bless("dirichlet_1_1_1_seed42.ftns", &TensorFile::new(vec![3], w).unwrap());
}

#[test]
fn noise_1x4x4_seed_7() {
    let x = gen_features(FeatureKind::Noise, 1, 4, 4, 7).unwrap();
    let reference = oracle::uniform_noise(16, 7);
    for (a, b) in x.data().iter().zip(&reference) {
        assert_eq!(a.to_bits(), b.to_bits());
    }
    check_or_bless("noise_1x4x4_seed7.ftns", &TensorFile::from_feature_map(&x));
}

#[test]
fn dirichlet_matches_gamma_sum_oracle_broadly() {
    for seed in 0..200 {
        let alpha = [0.3, 1.0, 2.5, 7.0];
        let w = dirichlet(&alpha, seed).unwrap();
        let reference = oracle::dirichlet(&alpha, seed);
        for (a, b) in w.iter().zip(&reference) {
            assert!((a - b).abs() < 1e-12, "seed {seed}: {w:?} vs {reference:?}");
        }
    }
}
