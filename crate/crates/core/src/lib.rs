//! Causal temporal phase segmentation.
//!
//! The crate is organised bottom-up:
//!
//! - [`autodiff`]: a small reverse-mode engine over dense `f64` tensors.
//! - [`model`]: the causal encoder/decoder stack with windowed attention,
//!   checkpoint I/O and a streaming inference session.
//! - [`loss`]: frame-wise cross-entropy plus the clamped smoothing term.
//! - [`metrics`]: frame and segment metrics with per-video aggregation.
//! - [`synthdata`]: semi-Markov workflow generator and the on-disk formats.
//! - [`training`]: the optimisation loop and evaluation harness.

pub mod autodiff;
pub mod error;
pub mod loss;
pub mod metrics;
pub mod model;
pub mod synthdata;
pub mod training;

pub use error::{Error, Result};
