//! Frequency-domain feature adapters.
//!
//! Feature maps are `C x H x W` real tensors. The two transforms work on the
//! 2-D Fourier spectrum of each channel:
//!
//! - [`sda`] re-styles the amplitude with Dirichlet-weighted channel
//!   statistics and keeps the phase.
//! - [`cca`] cross-attends visual tokens to text embeddings, then
//!   standardizes the amplitude.
//!
//! [`adapter`] wraps either one in a small convolutional block and places
//! blocks on backbone stages; [`gradcheck`] verifies their derivatives.

pub mod adapter;
pub mod cca;
pub mod error;
pub mod gradcheck;
pub mod rng;
pub mod sda;
pub mod spectral;
pub mod synth;
pub mod tensor;
pub mod tensor_file;

pub use error::{Error, Result};
pub use spectral::{AmpPhase, Spectrum};
pub use tensor::{ConvKernel, FeatureMap, Matrix};
pub use tensor_file::TensorFile;
