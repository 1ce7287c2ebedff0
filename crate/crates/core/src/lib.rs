//! Numerical core for continuous valence regression from face-frame
//! sequences.
//!
//! Everything here is pure computation and builds without `std` (an allocator
//! is required). The companion `valence` crate carries file formats, the
//! synthetic data generator and the command line.
//!
//! Layout:
//! - [`tensor`] and [`ops`]: dense `f64` tensors and the differentiable
//!   primitives, each with a hand-written backward pass.
//! - [`models`]: the single-frame regression CNN and the windowed Elman RNN.
//! - [`optim`] and [`train`]: momentum SGD, augmentation and training loops.
//! - [`prep`]: face alignment, photometric normalization, gap filling and
//!   temporal windows.
//! - [`metrics`]: RMSE, Pearson CC, concordance CC and timeline reports.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod error;
#[cfg(feature = "gradcheck")]
pub mod gradcheck;
pub mod metrics;
pub mod models;
pub mod ops;
pub mod optim;
pub mod params;
pub mod prep;
pub mod tensor;
pub mod train;

pub use error::{Error, Result};
pub use models::{
    CnnModel, CnnSpec, CnnTrace, FeatureTimeline, RnnModel, RnnSpec, RnnTrace,
};
pub use ops::{Activation, Mode};
pub use optim::{sgd_step, OptState, SgdConfig};
pub use metrics::{EvalReport, Scores};
pub use params::ParamSet;
pub use tensor::Tensor;

/// Frames per second of the annotation grid.
pub const FRAME_RATE: f64 = 25.0;
