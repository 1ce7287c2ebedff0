//! File formats, dataset preparation, the synthetic corpus, the sweep
//! harness and the command-line front end around `valence-core`.

pub mod cli;
pub mod config;
pub mod dataset;
pub mod error;
pub mod features_io;
pub mod image;
pub mod manifest;
pub mod model_io;
pub mod pipeline;
pub mod report;
pub mod sweep;
pub mod synth;

pub use error::{Error, Result};
