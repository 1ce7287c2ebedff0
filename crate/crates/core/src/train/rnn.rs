use alloc::vec::Vec;

use super::{shuffled_indices, stream_rng, EpochRecord, Stream, TrainHistory, TrainMonitor};
use crate::error::{Error, Result};
use crate::models::{FeatureTimeline, RnnModel, RnnSpec};
use crate::optim::{sgd_step, OptState, SgdConfig};
use crate::params::ParamSet;
use crate::prep::window_count;

/// A complete window, identified by timeline index and end frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WindowSample {
    pub timeline: usize,
    pub end: usize,
}

/// Every complete window `[t-W+1, t]` of every timeline, in timeline order.
/// Fails if any timeline is shorter than `W` (naming the shortest one) or
/// lacks labels.
pub fn rnn_samples(timelines: &[FeatureTimeline], spec: &RnnSpec) -> Result<Vec<WindowSample>> {
    spec.validate()?;
    if timelines.is_empty() {
        return Err(Error::Empty("no feature timelines"));
    }
    let w = spec.window;
    let shortest = timelines.iter().min_by_key(|tl| tl.len()).expect("non-empty");
    if shortest.len() < w {
        return Err(Error::SequenceTooShort {
            sequence: shortest.sequence_id.clone(),
            len: shortest.len(),
            window: w,
        });
    }
    let mut out = Vec::new();
    for (i, tl) in timelines.iter().enumerate() {
        if tl.labels().is_none() {
            return Err(Error::invalid(alloc::format!("timeline {} has no labels", tl.sequence_id)));
        }
        if tl.dim() != spec.input_dim {
            return Err(Error::Shape {
                op: "train_rnn",
                detail: alloc::format!(
                    "timeline {} has feature dim {}, spec expects {}",
                    tl.sequence_id,
                    tl.dim(),
                    spec.input_dim
                ),
            });
        }
        debug_assert_eq!(window_count(tl.len(), w), tl.len() - w + 1);
        out.extend((w - 1..tl.len()).map(|end| WindowSample { timeline: i, end }));
    }
    Ok(out)
}

/// Loss (mean over the batch of the per-window mean-over-steps MSE) and its
/// gradient, accumulated in sample order.
pub fn batch_gradient_rnn(
    model: &RnnModel,
    timelines: &[FeatureTimeline],
    batch: &[WindowSample],
) -> Result<(f64, ParamSet)> {
    if batch.is_empty() {
        return Err(Error::Empty("minibatch"));
    }
    let w = model.spec().window;
    let n = batch.len() as f64;
    let mut grads = model.params().zeros_like();
    let mut loss = 0.0;
    let mut d_out = alloc::vec![0.0; w];
    for s in batch {
        let tl = &timelines[s.timeline];
        let start = s.end + 1 - w;
        let (ys, trace) = model.forward_rows(tl.rows(start, s.end + 1), tl.dim())?;
        let labels = &tl.labels().expect("checked by rnn_samples")[start..=s.end];
        let mut sample_loss = 0.0;
        for t in 0..w {
            let diff = ys[t] - labels[t];
            sample_loss += diff * diff;
            d_out[t] = 2.0 / (w as f64) * diff / n;
        }
        loss += sample_loss / w as f64;
        let g = model.backward(&trace, &d_out)?;
        grads.add_scaled(&g, 1.0)?;
    }
    Ok((loss / n, grads))
}

/// Trains the windowed RNN on frozen-CNN feature timelines. Every complete
/// window is one sample; all `W` step outputs are regressed against their
/// frame labels.
pub fn train_rnn<M: TrainMonitor<RnnModel>>(
    timelines: &[FeatureTimeline],
    spec: RnnSpec,
    cfg: &SgdConfig,
    monitor: &mut M,
) -> Result<(RnnModel, TrainHistory)> {
    cfg.validate()?;
    let samples = rnn_samples(timelines, &spec)?;
    let mut model = RnnModel::init(spec, &mut stream_rng(cfg.seed, Stream::Init))?;
    let mut state = OptState::new(model.params());
    let mut shuffle_rng = stream_rng(cfg.seed, Stream::Shuffle);
    let mut history = TrainHistory::default();

    for epoch in 1..=cfg.epochs {
        let start = monitor.now();
        let order = shuffled_indices(samples.len(), &mut shuffle_rng);
        let mut loss_sum = 0.0;
        for (b, chunk) in order.chunks(cfg.batch_size).enumerate() {
            let batch: Vec<WindowSample> = chunk.iter().map(|&i| samples[i]).collect();
            let (loss, grads) = batch_gradient_rnn(&model, timelines, &batch)?;
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
