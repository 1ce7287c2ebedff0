//! Hyperparameter sweeps over one axis at a time, with an append-only,
//! resumable results table.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs::{self, OpenOptions};
use std::path::Path;
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use valence_core::metrics::Scores;
use valence_core::models::FeatureTimeline;
use valence_core::train::{train_cnn, train_rnn, AugmentConfig, CnnFlags, Silent};
use valence_core::{Activation, CnnSpec, RnnSpec, SgdConfig};

use crate::config::RunConfig;
use crate::dataset::{labeled_frames, PreparedSequence};
use crate::error::{Error, Result};
use crate::pipeline::{cnn_report, rnn_report};

pub const STATUS_OK: &str = "ok";
pub const STATUS_FAILED: &str = "FAILED";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Hidden,
    Window,
    Layers,
    Nonlinearity,
    CnnFlags,
}

impl Axis {
    pub const ALL: [Axis; 5] = [Axis::Hidden, Axis::Window, Axis::Layers, Axis::Nonlinearity, Axis::CnnFlags];

    pub fn name(self) -> &'static str {
        match self {
            Axis::Hidden => "hidden",
            Axis::Window => "window",
            Axis::Layers => "layers",
            Axis::Nonlinearity => "nonlinearity",
            Axis::CnnFlags => "cnn-flags",
        }
    }

    pub fn default_values(self) -> Vec<String> {
        let v: &[&str] = match self {
            Axis::Hidden => &["50", "100", "150", "200"],
            Axis::Window => &["25", "50", "75", "100", "150"],
            Axis::Layers => &["100", "100-100", "100-100-50"],
            Axis::Nonlinearity => &["tanh", "relu"],
            Axis::CnnFlags => &["none", "D", "A", "AD"],
        };
        v.iter().map(|s| s.to_string()).collect()
    }

    /// Whether runs on this axis train the RNN (on fixed features) rather
    /// than the CNN.
    pub fn trains_rnn(self) -> bool {
        self != Axis::CnnFlags
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Axis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Axis::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| format!("unknown axis {s:?}; expected one of hidden, window, layers, nonlinearity, cnn-flags"))
    }
}

pub fn parse_flags(s: &str) -> Result<CnnFlags, String> {
    match s {
        "none" | "" => Ok(CnnFlags::default()),
        "D" => Ok(CnnFlags { dropout: true, augment: false }),
        "A" => Ok(CnnFlags { dropout: false, augment: true }),
        "AD" | "DA" => Ok(CnnFlags { dropout: true, augment: true }),
        other => Err(format!("unknown CNN flags {other:?}; expected none, D, A or AD")),
    }
}

fn flags_name(flags: CnnFlags) -> &'static str {
    match flags.label() {
        "" => "none",
        l => l,
    }
}

/// Everything that determines one training run.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum RunSpec {
    Rnn { spec: RnnSpec, sgd: SgdConfig },
    Cnn { spec: CnnSpec, flags: CnnFlags, sgd: SgdConfig, augment: AugmentConfig },
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridPoint {
    pub axis: Axis,
    pub value: String,
    pub run: RunSpec,
}

impl GridPoint {
    pub fn config_json(&self) -> String {
        serde_json::to_string(&self.run).expect("run specs serialize")
    }

    /// First 16 hex digits of the SHA-256 of the canonical config JSON.
    pub fn config_hash(&self) -> String {
        let digest = Sha256::digest(self.config_json().as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// The runs of a one-axis sweep around `base`. `input_dim` is the feature
/// dimension for RNN axes.
pub fn build_grid(axis: Axis, values: &[String], base: &RunConfig, input_dim: usize) -> Result<Vec<GridPoint>> {
    if values.is_empty() {
        return Err(Error::Config(format!("sweep over {axis} has no values")));
    }
    let bad = |v: &str| Error::Config(format!("bad {axis} value {v:?}"));
    values
        .iter()
        .map(|value| {
            let mut rnn = RnnSpec { input_dim, ..base.rnn.clone() };
            let mut flags = base.cnn_flags;
            match axis {
                Axis::Hidden => rnn.hidden_sizes = vec![value.parse().map_err(|_| bad(value))?],
                Axis::Window => rnn.window = value.parse().map_err(|_| bad(value))?,
                Axis::Layers => {
                    rnn.hidden_sizes = value
                        .split('-')
                        .map(|h| h.parse().map_err(|_| bad(value)))
                        .collect::<Result<_>>()?
                }
                Axis::Nonlinearity => {
                    rnn.activation = match value.as_str() {
                        "tanh" => Activation::Tanh,
                        "relu" => Activation::Relu,
                        _ => return Err(bad(value)),
                    }
                }
                Axis::CnnFlags => flags = parse_flags(value).map_err(Error::Config)?,
            }
            let run = if axis.trains_rnn() {
                rnn.validate()?;
                RunSpec::Rnn { spec: rnn, sgd: base.rnn_sgd.clone() }
            } else {
                RunSpec::Cnn { spec: base.cnn.clone(), flags, sgd: base.cnn_sgd.clone(), augment: base.augment }
            };
            Ok(GridPoint { axis, value: value.clone(), run })
        })
        .collect()
}

/// Training and dev data for a sweep.
#[derive(Clone, Copy)]
pub enum SweepData<'a> {
    Rnn { train: &'a [FeatureTimeline], dev: &'a [FeatureTimeline] },
    Cnn { train: &'a [PreparedSequence], dev: &'a [PreparedSequence] },
}

/// One line of the results table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub config_hash: String,
    pub axis: String,
    pub value: String,
    pub kind: String,
    pub cnn_flags: String,
    pub hidden_sizes: String,
    pub window: Option<usize>,
    pub activation: String,
    pub epochs: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub weight_decay: f64,
    pub batch_size: usize,
    pub seed: u64,
    pub status: String,
    pub rmse: Option<f64>,
    pub cc: Option<f64>,
    pub ccc: Option<f64>,
    pub seconds: f64,
    pub error: String,
    pub config_json: String,
}

fn make_row(point: &GridPoint, outcome: &Result<Scores>, seconds: f64) -> SweepRow {
    let (kind, flags, hidden, window, activation, sgd) = match &point.run {
        RunSpec::Rnn { spec, sgd } => (
            "rnn",
            String::new(),
            spec.hidden_sizes.iter().map(|h| h.to_string()).collect::<Vec<_>>().join("-"),
            Some(spec.window),
            spec.activation.name(),
            sgd,
        ),
        RunSpec::Cnn { spec, flags, sgd, .. } => {
            ("cnn", flags_name(*flags).to_string(), String::new(), None, spec.activation.name(), sgd)
        }
    };
    let scores = outcome.as_ref().ok();
    SweepRow {
        config_hash: point.config_hash(),
        axis: point.axis.name().into(),
        value: point.value.clone(),
        kind: kind.into(),
        cnn_flags: flags,
        hidden_sizes: hidden,
        window,
        activation: activation.into(),
        epochs: sgd.epochs,
        learning_rate: sgd.learning_rate,
        momentum: sgd.momentum,
        weight_decay: sgd.weight_decay,
        batch_size: sgd.batch_size,
        seed: sgd.seed,
        status: if scores.is_some() { STATUS_OK } else { STATUS_FAILED }.into(),
        rmse: scores.map(|s| s.rmse),
        cc: scores.map(|s| s.cc),
        ccc: scores.map(|s| s.ccc),
        seconds,
        error: outcome.as_ref().err().map(|e| e.to_string()).unwrap_or_default(),
        config_json: point.config_json(),
    }
}

/// Trains one configuration and returns its pooled dev scores.
pub fn run_point(point: &GridPoint, data: SweepData<'_>) -> Result<Scores> {
    match (&point.run, data) {
        (RunSpec::Rnn { spec, sgd }, SweepData::Rnn { train, dev }) => {
            let (model, _) = train_rnn(train, spec.clone(), sgd, &mut Silent)?;
            Ok(rnn_report(&model, dev)?.pooled.scores)
        }
        (RunSpec::Cnn { spec, flags, sgd, augment }, SweepData::Cnn { train, dev }) => {
            let samples = labeled_frames(train);
            let (model, _) = train_cnn(&samples, spec.clone(), sgd, *flags, augment, &mut Silent)?;
            Ok(cnn_report(&model, dev)?.pooled.scores)
        }
        _ => Err(Error::Config(format!("axis {} needs different sweep inputs", point.axis))),
    }
}

pub fn read_results(path: &Path) -> Result<Vec<SweepRow>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| Error::parse(path, e.to_string()))?;
    reader
        .deserialize()
        .map(|r| r.map_err(|e| Error::parse(path, e.to_string())))
        .collect()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SweepSummary {
    pub ran: usize,
    pub skipped: usize,
    pub failed: usize,
}

/// Runs every grid point whose hash has no successful row in `results`,
/// appending one row per run in grid order. Failed runs are recorded as
/// `FAILED` and retried on the next invocation. With `jobs > 1` runs
/// execute concurrently; rows are still written in grid order by a single
/// writer.
pub fn run_sweep(points: &[GridPoint], data: SweepData<'_>, results: &Path, jobs: usize, verbose: bool) -> Result<SweepSummary> {
    let existing = if results.exists() { read_results(results)? } else { Vec::new() };
    let done: HashSet<&str> =
        existing.iter().filter(|r| r.status == STATUS_OK).map(|r| r.config_hash.as_str()).collect();
    let pending: Vec<&GridPoint> = points.iter().filter(|p| !done.contains(p.config_hash().as_str())).collect();
    let mut summary = SweepSummary { skipped: points.len() - pending.len(), ..SweepSummary::default() };
    if pending.is_empty() {
        return Ok(summary);
    }

    let needs_header = fs::metadata(results).map(|m| m.len() == 0).unwrap_or(true);
    let file = OpenOptions::new().create(true).append(true).open(results).map_err(Error::write(results))?;
    let mut writer = csv::WriterBuilder::new().has_headers(needs_header).from_writer(file);

    let next = AtomicUsize::new(0);
    let (tx, rx) = mpsc::channel::<(usize, SweepRow)>();
    std::thread::scope(|scope| -> Result<()> {
        for _ in 0..jobs.clamp(1, pending.len()) {
            let tx = tx.clone();
            let (next, pending) = (&next, &pending);
            scope.spawn(move || loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(point) = pending.get(i) else { break };
                let start = Instant::now();
                let outcome = run_point(point, data);
                if tx.send((i, make_row(point, &outcome, start.elapsed().as_secs_f64()))).is_err() {
                    break;
                }
            });
        }
        drop(tx);
        let mut buffered = BTreeMap::new();
        let mut write_next = 0;
        for (i, row) in rx {
            buffered.insert(i, row);
            while let Some(row) = buffered.remove(&write_next) {
                if verbose {
                    eprintln!(
                        "sweep {}={}: {} ccc {}",
                        row.axis,
                        row.value,
                        row.status,
                        row.ccc.map_or("-".into(), |c| format!("{c:.4}"))
                    );
                }
                summary.ran += 1;
                summary.failed += usize::from(row.status != STATUS_OK);
                writer.serialize(&row).map_err(|e| Error::parse(results, e.to_string()))?;
                writer.flush().map_err(Error::write(results))?;
                write_next += 1;
            }
        }
        Ok(())
    })?;
    Ok(summary)
}
