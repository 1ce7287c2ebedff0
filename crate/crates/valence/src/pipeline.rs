//! File-to-file steps behind the CLI subcommands.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use valence_core::metrics::{evaluate_sequences, EvalReport, Scores, TimelineRef};
use valence_core::models::FeatureTimeline;
use valence_core::prep::{fill_gaps, run_frames, FramePass};
use valence_core::train::{train_cnn, train_rnn, TrainHistory, TrainMonitor};
use valence_core::{CnnModel, RnnModel, RnnSpec};

use crate::config::{load_template, RunConfig};
use crate::dataset::{labeled_frames, prepare, PreparedSequence};
use crate::error::{Error, Result};
use crate::features_io::{read_timeline_dir, write_timeline};
use crate::manifest::load_manifest;
use crate::model_io::{load_cnn, load_rnn, save_model, SavedModel};
use crate::report::{write_history, write_report, write_timeline_csv, TimelineRow};

pub const CNN_MODEL: &str = "cnn.afen";
pub const CNN_HISTORY: &str = "cnn_history.csv";
pub const RNN_MODEL: &str = "rnn.afen";
pub const RNN_HISTORY: &str = "rnn_history.csv";
pub const EVAL_CNN: &str = "eval_cnn.csv";
pub const EVAL_CNN_RNN: &str = "eval_cnn_rnn.csv";
pub const EVAL_JSON: &str = "eval.json";
pub const TIMELINE: &str = "timeline.csv";

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(Error::write(dir))
}

pub fn load_prepared(manifest: &Path, template: &Path) -> Result<Vec<PreparedSequence>> {
    let manifest = load_manifest(manifest)?;
    let template = load_template(template)?;
    prepare(&manifest, &template)
}

/// Gap-fills model outputs at frames without a face, the same rule used for
/// gold labels.
pub fn fill_predictions(pred: &[f64], missing: &[bool]) -> Result<Vec<f64>> {
    let masked: Vec<Option<f64>> = pred.iter().zip(missing).map(|(&p, &m)| (!m).then_some(p)).collect();
    Ok(fill_gaps(&masked)?.0)
}

/// Single-frame CNN predictions for every sequence.
pub fn cnn_passes(cnn: &CnnModel, sequences: &[PreparedSequence]) -> Result<Vec<FramePass>> {
    sequences.iter().map(|s| Ok(run_frames(cnn, &s.frames)?)).collect()
}

/// Windowed RNN predictions over a feature timeline, gap-filled where the
/// frame had no face.
pub fn rnn_predictions(rnn: &RnnModel, timeline: &FeatureTimeline) -> Result<Vec<f64>> {
    let raw = rnn.predict_timeline(timeline.features())?;
    fill_predictions(&raw, timeline.interpolated())
}

fn report_for(ids: &[&str], preds: &[Vec<f64>], gold: &[&[f64]], masks: &[&[bool]]) -> Result<EvalReport> {
    let refs: Vec<TimelineRef<'_>> = (0..ids.len())
        .map(|i| TimelineRef { sequence_id: ids[i], pred: &preds[i], gold: gold[i], mask: masks[i] })
        .collect();
    Ok(evaluate_sequences(&refs)?)
}

pub fn cnn_report(cnn: &CnnModel, sequences: &[PreparedSequence]) -> Result<EvalReport> {
    let passes = cnn_passes(cnn, sequences)?;
    let preds: Vec<Vec<f64>> = passes.into_iter().map(|p| p.valence).collect();
    let ids: Vec<&str> = sequences.iter().map(|s| s.id.as_str()).collect();
    let gold: Vec<&[f64]> = sequences.iter().map(|s| s.gold.as_slice()).collect();
    let masks: Vec<&[bool]> = sequences.iter().map(|s| s.interpolated.as_slice()).collect();
    report_for(&ids, &preds, &gold, &masks)
}

pub fn rnn_report(rnn: &RnnModel, timelines: &[FeatureTimeline]) -> Result<EvalReport> {
    let preds = timelines.iter().map(|t| rnn_predictions(rnn, t)).collect::<Result<Vec<_>>>()?;
    let ids: Vec<&str> = timelines.iter().map(|t| t.sequence_id.as_str()).collect();
    let gold = timelines
        .iter()
        .map(|t| t.labels().ok_or_else(|| Error::Config(format!("timeline {} has no labels", t.sequence_id))))
        .collect::<Result<Vec<_>>>()?;
    let masks: Vec<&[bool]> = timelines.iter().map(|t| t.interpolated()).collect();
    report_for(&ids, &preds, &gold, &masks)
}

/// Per-epoch wall clock plus optional dev scoring, with progress on stderr.
struct Monitor<'a, M> {
    clock: Instant,
    label: &'static str,
    verbose: bool,
    dev: Option<Box<dyn Fn(&M) -> Result<Scores> + 'a>>,
    epoch: usize,
}

impl<'a, M> Monitor<'a, M> {
    fn new(label: &'static str, verbose: bool, dev: Option<Box<dyn Fn(&M) -> Result<Scores> + 'a>>) -> Self {
        Monitor { clock: Instant::now(), label, verbose, dev, epoch: 0 }
    }
}

impl<M> TrainMonitor<M> for Monitor<'_, M> {
    fn now(&mut self) -> f64 {
        self.clock.elapsed().as_secs_f64()
    }

    fn evaluate(&mut self, model: &M) -> Option<Scores> {
        self.epoch += 1;
        let scores = self.dev.as_ref().map(|f| f(model));
        let scores = match scores {
            Some(Ok(s)) => Some(s),
            Some(Err(e)) => {
                eprintln!("{}: dev evaluation failed: {e}", self.label);
                None
            }
            None => None,
        };
        if self.verbose {
            match scores {
                Some(s) => eprintln!(
                    "{} epoch {}: dev rmse {:.4} cc {:.4} ccc {:.4}",
                    self.label, self.epoch, s.rmse, s.cc, s.ccc
                ),
                None => eprintln!("{} epoch {} done", self.label, self.epoch),
            }
        }
        scores
    }
}

/// Trains the CNN on a manifest; optionally scores a dev manifest each epoch.
pub fn train_cnn_sequences(
    train: &[PreparedSequence],
    dev: Option<&[PreparedSequence]>,
    cfg: &RunConfig,
    verbose: bool,
) -> Result<(CnnModel, TrainHistory)> {
    let samples = labeled_frames(train);
    let dev_fn = dev.map(|d| {
        Box::new(move |m: &CnnModel| Ok(cnn_report(m, d)?.pooled.scores)) as Box<dyn Fn(&CnnModel) -> Result<Scores>>
    });
    let mut monitor = Monitor::new("cnn", verbose, dev_fn);
    Ok(train_cnn(&samples, cfg.cnn.clone(), &cfg.cnn_sgd, cfg.cnn_flags, &cfg.augment, &mut monitor)?)
}

pub fn cmd_train_cnn(
    train: &Path,
    dev: Option<&Path>,
    template: &Path,
    cfg: &RunConfig,
    out: &Path,
    verbose: bool,
) -> Result<PathBuf> {
    cfg.validate()?;
    let train = load_prepared(train, template)?;
    let dev = dev.map(|d| load_prepared(d, template)).transpose()?;
    let (model, history) = train_cnn_sequences(&train, dev.as_deref(), cfg, verbose)?;
    ensure_dir(out)?;
    let path = out.join(CNN_MODEL);
    save_model(&path, &SavedModel::Cnn(model))?;
    write_history(&out.join(CNN_HISTORY), &history)?;
    Ok(path)
}

/// Feature timelines (with gold labels) for every sequence.
pub fn extract_timelines(cnn: &CnnModel, sequences: &[PreparedSequence]) -> Result<Vec<FeatureTimeline>> {
    sequences
        .iter()
        .map(|s| {
            let pass = run_frames(cnn, &s.frames)?;
            Ok(FeatureTimeline::new(s.id.clone(), pass.features, Some(s.gold.clone()), pass.interpolated)?)
        })
        .collect()
}

pub fn cmd_extract(model: &Path, manifest: &Path, template: &Path, out: &Path) -> Result<Vec<PathBuf>> {
    let cnn = load_cnn(model)?;
    let sequences = load_prepared(manifest, template)?;
    let timelines = extract_timelines(&cnn, &sequences)?;
    ensure_dir(out)?;
    timelines.iter().map(|t| write_timeline(out, t)).collect()
}

/// The RNN spec actually trained: the configured one with `input_dim` taken
/// from the features.
pub fn rnn_spec_for(cfg: &RunConfig, timelines: &[FeatureTimeline]) -> Result<RnnSpec> {
    let dim = timelines.first().map(FeatureTimeline::dim).ok_or(valence_core::Error::Empty("feature timelines"))?;
    if let Some(t) = timelines.iter().find(|t| t.dim() != dim) {
        return Err(Error::Config(format!("timeline {} has feature dim {}, expected {dim}", t.sequence_id, t.dim())));
    }
    Ok(RnnSpec { input_dim: dim, ..cfg.rnn.clone() })
}

pub fn train_rnn_timelines(
    train: &[FeatureTimeline],
    dev: Option<&[FeatureTimeline]>,
    cfg: &RunConfig,
    verbose: bool,
) -> Result<(RnnModel, TrainHistory)> {
    let spec = rnn_spec_for(cfg, train)?;
    let dev_fn = dev.map(|d| {
        Box::new(move |m: &RnnModel| Ok(rnn_report(m, d)?.pooled.scores)) as Box<dyn Fn(&RnnModel) -> Result<Scores>>
    });
    let mut monitor = Monitor::new("rnn", verbose, dev_fn);
    Ok(train_rnn(train, spec, &cfg.rnn_sgd, &mut monitor)?)
}

pub fn cmd_train_rnn(
    features: &Path,
    dev_features: Option<&Path>,
    cfg: &RunConfig,
    out: &Path,
    verbose: bool,
) -> Result<PathBuf> {
    cfg.validate()?;
    let train = read_timeline_dir(features)?;
    let dev = dev_features.map(read_timeline_dir).transpose()?;
    let (model, history) = train_rnn_timelines(&train, dev.as_deref(), cfg, verbose)?;
    ensure_dir(out)?;
    let path = out.join(RNN_MODEL);
    save_model(&path, &SavedModel::Rnn(model))?;
    write_history(&out.join(RNN_HISTORY), &history)?;
    Ok(path)
}

/// Reports for the CNN alone and, if given, the CNN+RNN pipeline.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct Evaluation {
    pub cnn: EvalReport,
    pub cnn_rnn: Option<EvalReport>,
}

pub fn cmd_eval(cnn: &Path, rnn: Option<&Path>, manifest: &Path, template: &Path, out: &Path) -> Result<Evaluation> {
    let cnn = load_cnn(cnn)?;
    let rnn = rnn.map(load_rnn).transpose()?;
    if let Some(r) = &rnn {
        if r.spec().input_dim != cnn.spec().fc_units {
            return Err(Error::Config(format!(
                "RNN expects {}-d features but the CNN produces {}",
                r.spec().input_dim,
                cnn.spec().fc_units
            )));
        }
    }
    let sequences = load_prepared(manifest, template)?;
    let passes = cnn_passes(&cnn, &sequences)?;

    let mut cnn_preds = Vec::new();
    let mut rnn_preds = Vec::new();
    for (seq, pass) in sequences.iter().zip(passes) {
        if let Some(r) = &rnn {
            let tl = FeatureTimeline::new(seq.id.clone(), pass.features, None, pass.interpolated)?;
            rnn_preds.push(rnn_predictions(r, &tl)?);
        }
        cnn_preds.push(pass.valence);
    }

    let ids: Vec<&str> = sequences.iter().map(|s| s.id.as_str()).collect();
    let gold: Vec<&[f64]> = sequences.iter().map(|s| s.gold.as_slice()).collect();
    let masks: Vec<&[bool]> = sequences.iter().map(|s| s.interpolated.as_slice()).collect();
    let evaluation = Evaluation {
        cnn: report_for(&ids, &cnn_preds, &gold, &masks)?,
        cnn_rnn: rnn.is_some().then(|| report_for(&ids, &rnn_preds, &gold, &masks)).transpose()?,
    };

    let mut rows = Vec::new();
    for (i, seq) in sequences.iter().enumerate() {
        for t in 0..seq.len() {
            rows.push(TimelineRow {
                sequence_id: &seq.id,
                frame_index: seq.first_frame + t,
                gold: seq.gold[t],
                pred_cnn: cnn_preds[i][t],
                pred_cnn_rnn: rnn_preds.get(i).map(|p| p[t]),
                interpolated: seq.interpolated[t],
            });
        }
    }
    ensure_dir(out)?;
    write_timeline_csv(&out.join(TIMELINE), &rows)?;
    write_report(&out.join(EVAL_CNN), &evaluation.cnn)?;
    if let Some(r) = &evaluation.cnn_rnn {
        write_report(&out.join(EVAL_CNN_RNN), r)?;
    }
    crate::config::write_json(&out.join(EVAL_JSON), &evaluation)?;
    Ok(evaluation)
}
