use alloc::vec::Vec;

use rand::RngCore;

use super::augment::{AugmentConfig, AugmentDraw};
use super::{shuffled_indices, stream_rng, EpochRecord, Stream, TrainHistory, TrainMonitor};
use crate::error::{Error, Result};
use crate::models::{CnnModel, CnnSpec};
use crate::ops::{mse_loss, Mode};
use crate::optim::{sgd_step, OptState, SgdConfig};
use crate::params::ParamSet;
use crate::tensor::Tensor;

/// Dropout probability used when the dropout variant is requested.
pub const DROPOUT_P: f64 = 0.5;

/// Regularization variant of the single-frame CNN.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct CnnFlags {
    pub dropout: bool,
    pub augment: bool,
}

impl CnnFlags {
    /// Short label: "" (plain), "D", "A" or "AD".
    pub fn label(&self) -> &'static str {
        match (self.augment, self.dropout) {
            (false, false) => "",
            (false, true) => "D",
            (true, false) => "A",
            (true, true) => "AD",
        }
    }
}

/// Mean-MSE loss and its parameter gradient over one minibatch, summed in
/// sample order and divided by the batch size.
pub fn batch_gradient_cnn<R: RngCore + ?Sized>(
    model: &CnnModel,
    batch: &[(&Tensor, f64)],
    mode: Mode,
    rng: &mut R,
) -> Result<(f64, ParamSet)> {
    if batch.is_empty() {
        return Err(Error::Empty("minibatch"));
    }
    let n = batch.len() as f64;
    let mut grads = model.params().zeros_like();
    let mut preds = Vec::with_capacity(batch.len());
    for &(image, label) in batch {
        let out = model.forward(image, mode, rng)?;
        let upstream = 2.0 / n * (out.valence - label);
        let g = model.backward(&out.trace, upstream)?;
        grads.add_scaled(&g, 1.0)?;
        preds.push(out.valence);
    }
    let labels: Vec<f64> = batch.iter().map(|b| b.1).collect();
    let (loss, _) = mse_loss(&Tensor::vector(preds), &Tensor::vector(labels))?;
    Ok((loss, grads))
}

/// Trains the single-frame CNN on `(normalized image, valence)` pairs.
///
/// Each epoch shuffles the samples, walks them in minibatches of
/// `cfg.batch_size` (the last one may be short), and applies one
/// [`sgd_step`] per batch. Dropout is active only with `flags.dropout`;
/// augmentation only with `flags.augment`.
pub fn train_cnn<M: TrainMonitor<CnnModel>>(
    samples: &[(Tensor, f64)],
    spec: CnnSpec,
    cfg: &SgdConfig,
    flags: CnnFlags,
    augment_cfg: &AugmentConfig,
    monitor: &mut M,
) -> Result<(CnnModel, TrainHistory)> {
    if samples.is_empty() {
        return Err(Error::Empty("training set has no labeled frames"));
    }
    cfg.validate()?;
    let spec = CnnSpec {
        dropout_p: if flags.dropout { DROPOUT_P } else { 0.0 },
        ..spec
    };
    let mut model = CnnModel::init(spec, &mut stream_rng(cfg.seed, Stream::Init))?;
    let mut state = OptState::new(model.params());
    let mut shuffle_rng = stream_rng(cfg.seed, Stream::Shuffle);
    let mut dropout_rng = stream_rng(cfg.seed, Stream::Dropout);
    let mut augment_rng = stream_rng(cfg.seed, Stream::Augment);
    let mut history = TrainHistory::default();

    for epoch in 1..=cfg.epochs {
        let start = monitor.now();
        let order = shuffled_indices(samples.len(), &mut shuffle_rng);
        let mut loss_sum = 0.0;
        for (b, chunk) in order.chunks(cfg.batch_size).enumerate() {
            let augmented: Vec<Tensor>;
            let batch: Vec<(&Tensor, f64)> = if flags.augment {
                augmented = chunk
                    .iter()
                    .map(|&i| AugmentDraw::sample(&mut augment_rng, augment_cfg).apply(&samples[i].0))
                    .collect();
                augmented.iter().zip(chunk).map(|(t, &i)| (t, samples[i].1)).collect()
            } else {
                chunk.iter().map(|&i| (&samples[i].0, samples[i].1)).collect()
            };
            let (loss, grads) = batch_gradient_cnn(&model, &batch, Mode::Train, &mut dropout_rng)?;
            if !loss.is_finite() || !grads.is_finite() {
                return Err(Error::NonFiniteLoss { epoch, batch: b, loss });
            }
            loss_sum += loss * chunk.len() as f64;
            sgd_step(model.params_mut(), &grads, &mut state, cfg)?;
        }
        let dev = monitor.evaluate(&model);
        history.epochs.push(EpochRecord {
            epoch,
            loss: loss_sum / samples.len() as f64,
            dev,
            seconds: monitor.now() - start,
        });
    }
    Ok((model, history))
}
