//! Heatmap writers.

use std::fs;
use std::path::Path;

use freqadapt::Matrix;

use crate::CliError;

/// Binary `P5` graymap, min-max scaled to 0..=255. A constant field maps
/// to all zeros.
pub fn pgm_bytes(m: &Matrix) -> Vec<u8> {
    let (lo, hi) = m
        .data()
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let span = hi - lo;
    let mut out = format!("P5\n{} {}\n255\n", m.cols(), m.rows()).into_bytes();
    out.extend(m.data().iter().map(|&v| {
        if span > 0.0 {
            (255.0 * (v - lo) / span).round().clamp(0.0, 255.0) as u8
        } else {
            0
        }
    }));
    out
}

/// One row per line, comma separated, shortest round-tripping decimal form.
pub fn csv_string(m: &Matrix) -> String {
    let mut s = String::new();
    for r in 0..m.rows() {
        let row: Vec<String> = m.row(r).iter().map(|v| v.to_string()).collect();
        s.push_str(&row.join(","));
        s.push('\n');
    }
    s
}

pub fn write_pgm(path: &Path, m: &Matrix) -> Result<(), CliError> {
    fs::write(path, pgm_bytes(m)).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

pub fn write_csv(path: &Path, m: &Matrix) -> Result<(), CliError> {
    fs::write(path, csv_string(m)).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}
