//! Momentum SGD with L2 weight decay folded into the gradient.

use alloc::format;

use crate::error::{Error, Result};
use crate::params::ParamSet;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct SgdConfig {
    pub learning_rate: f64,
    pub momentum: f64,
    pub weight_decay: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for SgdConfig {
    /// Constants used for the CNN: lr 0.01, momentum 0.9, weight decay 1e-5,
    /// batch 128.
    fn default() -> Self {
        SgdConfig {
            learning_rate: 0.01,
            momentum: 0.9,
            weight_decay: 1e-5,
            batch_size: 128,
            epochs: 10,
            seed: 42,
        }
    }
}

impl SgdConfig {
    /// Same as the default except weight decay is off.
    pub fn rnn_default() -> Self {
        SgdConfig {
            weight_decay: 0.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid(format!("learning_rate {} must be > 0", self.learning_rate)));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::invalid(format!("momentum {} outside [0, 1)", self.momentum)));
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return Err(Error::invalid(format!("weight_decay {} must be >= 0", self.weight_decay)));
        }
        if self.batch_size == 0 {
            return Err(Error::invalid("batch_size must be at least 1"));
        }
        Ok(())
    }
}

/// Velocity buffers, one per parameter tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct OptState {
    velocity: ParamSet,
}

impl OptState {
    pub fn new(params: &ParamSet) -> Self {
        OptState {
            velocity: params.zeros_like(),
        }
    }

    pub fn velocity(&self) -> &ParamSet {
        &self.velocity
    }
}

/// One update: `g' = g + wd * p; v = momentum * v - lr * g'; p = p + v`.
/// The learning rate is constant; nothing here anneals it.
pub fn sgd_step(params: &mut ParamSet, grads: &ParamSet, state: &mut OptState, cfg: &SgdConfig) -> Result<()> {
    params.check_congruent(grads, "sgd_step gradients")?;
    params.check_congruent(&state.velocity, "sgd_step velocity")?;
    let (lr, mu, wd) = (cfg.learning_rate, cfg.momentum, cfg.weight_decay);
    for i in 0..params.len() {
        let p = params.at_mut(i).data_mut();
        let g = grads.at(i).data();
        let v = state.velocity.at_mut(i).data_mut();
        for ((pv, gv), vv) in p.iter_mut().zip(g).zip(v.iter_mut()) {
            let g_eff = gv + wd * *pv;
            *vv = mu * *vv - lr * g_eff;
            *pv += *vv;
        }
    }
    Ok(())
}
