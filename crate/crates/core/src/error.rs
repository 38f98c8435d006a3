use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite value at flat index {index}")]
    NonFinite { index: usize },

    /// The inverse transform left an imaginary part too large to be roundoff.
    #[error("spectrum is not conjugate-symmetric: imaginary residue {residue:e} vs output scale {scale:e}")]
    SymmetryViolation { residue: f64, scale: f64 },

    /// Amplitude normalization over a group with (near) zero spread.
    #[error("degenerate spectrum: amplitude std {std:e} in normalization group {group}")]
    DegenerateSpectrum { group: usize, std: f64 },

    #[error("oracle size guard: {size} bins exceeds {limit}")]
    SizeGuard { size: usize, limit: usize },

    #[error("tensor file format: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
