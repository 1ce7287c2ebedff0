//! Run configuration: a JSON document whose omitted fields take defaults.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use valence_core::prep::Template;
use valence_core::train::{AugmentConfig, CnnFlags};
use valence_core::{CnnSpec, RnnSpec, SgdConfig};

use crate::error::{Error, Result};
use crate::synth::SynthConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Seed for every stochastic step; replaces the seeds inside `synth`,
    /// `cnn_sgd` and `rnn_sgd`.
    pub seed: u64,
    pub cnn: CnnSpec,
    pub cnn_flags: CnnFlags,
    pub cnn_sgd: SgdConfig,
    pub augment: AugmentConfig,
    /// `input_dim` is taken from the feature files at training time.
    pub rnn: RnnSpec,
    pub rnn_sgd: SgdConfig,
    pub synth: SynthConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 42,
            cnn: CnnSpec::default(),
            cnn_flags: CnnFlags::default(),
            cnn_sgd: SgdConfig::default(),
            augment: AugmentConfig::default(),
            rnn: RnnSpec::default(),
            rnn_sgd: SgdConfig::rnn_default(),
            synth: SynthConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(Error::read(path))?;
        serde_json::from_str(&text).map_err(|e| Error::parse(path, e.to_string()))
    }

    /// Sets the shared seed and propagates it to every component.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.sync_seeds();
        self
    }

    pub fn sync_seeds(&mut self) {
        self.cnn_sgd.seed = self.seed;
        self.rnn_sgd.seed = self.seed;
        self.synth.seed = self.seed;
    }

    pub fn validate(&self) -> Result<()> {
        self.cnn.shapes()?;
        self.cnn_sgd.validate()?;
        self.rnn_sgd.validate()?;
        self.rnn.validate()?;
        self.synth.validate()?;
        Ok(())
    }
}

pub fn load_template(path: &Path) -> Result<Template> {
    let text = fs::read_to_string(path).map_err(Error::read(path))?;
    let template: Template = serde_json::from_str(&text).map_err(|e| Error::parse(path, e.to_string()))?;
    if template.out_size == 0 {
        return Err(Error::parse(path, "out_size must be positive"));
    }
    Ok(template)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("config types serialize");
    text.push('\n');
    fs::write(path, text).map_err(Error::write(path))
}
