//! Command-line interface.

use std::path::PathBuf;

use clap::{Parser, Subcommand};
use valence_core::train::CnnFlags;

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::features_io::read_timeline_dir;
use crate::pipeline::{self, ensure_dir, load_prepared};
use crate::sweep::{build_grid, parse_flags, run_sweep, Axis, SweepData};
use crate::synth;

#[derive(Debug, Parser)]
#[command(name = "valence", version, about = "Frame CNN and windowed RNN for continuous valence prediction")]
pub struct Cli {
    /// Seed for every stochastic step (overrides the config file).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Run configuration JSON; omitted fields take their defaults.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Suppress per-epoch progress on stderr.
    #[arg(long, short, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate the synthetic corpus: train/dev manifests, template, frames.
    Synth,
    /// Train the single-frame CNN.
    TrainCnn {
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        template: PathBuf,
        /// Dev manifest scored after every epoch.
        #[arg(long)]
        dev: Option<PathBuf>,
        /// Regularization variant: none, D, A or AD.
        #[arg(long, value_parser = parse_flags)]
        flags: Option<CnnFlags>,
    },
    /// Write per-sequence feature timelines from a trained CNN.
    Extract {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        template: PathBuf,
    },
    /// Train the windowed RNN on extracted features.
    TrainRnn {
        #[arg(long)]
        features: PathBuf,
        /// Dev features scored after every epoch.
        #[arg(long)]
        dev_features: Option<PathBuf>,
    },
    /// Score the CNN (and optionally CNN+RNN) on a manifest.
    Eval {
        #[arg(long)]
        cnn: PathBuf,
        #[arg(long)]
        rnn: Option<PathBuf>,
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        template: PathBuf,
    },
    /// Train one model per value of a hyperparameter axis and tabulate dev scores.
    Sweep {
        /// hidden, window, layers, nonlinearity or cnn-flags.
        #[arg(long)]
        axis: Axis,
        /// Comma-separated values; defaults to the axis' standard grid.
        #[arg(long, value_delimiter = ',')]
        values: Vec<String>,
        /// Train features (RNN axes).
        #[arg(long)]
        train_features: Option<PathBuf>,
        /// Dev features (RNN axes).
        #[arg(long)]
        dev_features: Option<PathBuf>,
        /// Train manifest (cnn-flags axis).
        #[arg(long)]
        train: Option<PathBuf>,
        /// Dev manifest (cnn-flags axis).
        #[arg(long)]
        dev: Option<PathBuf>,
        #[arg(long)]
        template: Option<PathBuf>,
        /// Results table; defaults to `<out>/sweep.csv`.
        #[arg(long)]
        results: Option<PathBuf>,
        /// Concurrent runs.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
}

fn required(arg: Option<PathBuf>, name: &str, axis: Axis) -> Result<PathBuf> {
    arg.ok_or_else(|| Error::Config(format!("--{name} is required for the {axis} axis")))
}

pub fn run(cli: Cli) -> Result<()> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let seed = cli.seed.unwrap_or(cfg.seed);
    cfg = cfg.with_seed(seed);
    let verbose = !cli.quiet;
    let out = cli.out.as_path();

    match cli.command {
        Command::Synth => {
            ensure_dir(out)?;
            let o = synth::generate(&cfg.synth, out)?;
            println!("{}\n{}\n{}", o.train_manifest.display(), o.dev_manifest.display(), o.template.display());
        }
        Command::TrainCnn { train, template, dev, flags } => {
            if let Some(f) = flags {
                cfg.cnn_flags = f;
            }
            let path = pipeline::cmd_train_cnn(&train, dev.as_deref(), &template, &cfg, out, verbose)?;
            println!("{}", path.display());
        }
        Command::Extract { model, manifest, template } => {
            let paths = pipeline::cmd_extract(&model, &manifest, &template, out)?;
            println!("{} feature files in {}", paths.len(), out.display());
        }
        Command::TrainRnn { features, dev_features } => {
            let path = pipeline::cmd_train_rnn(&features, dev_features.as_deref(), &cfg, out, verbose)?;
            println!("{}", path.display());
        }
        Command::Eval { cnn, rnn, manifest, template } => {
            let e = pipeline::cmd_eval(&cnn, rnn.as_deref(), &manifest, &template, out)?;
            let show = |name: &str, s: valence_core::metrics::Scores| {
                println!("{name}: rmse {:.4} cc {:.4} ccc {:.4}", s.rmse, s.cc, s.ccc)
            };
            show("cnn", e.cnn.pooled.scores);
            if let Some(r) = e.cnn_rnn {
                show("cnn+rnn", r.pooled.scores);
            }
        }
        Command::Sweep { axis, values, train_features, dev_features, train, dev, template, results, jobs } => {
            cfg.validate()?;
            let values = if values.is_empty() { axis.default_values() } else { values };
            ensure_dir(out)?;
            let results = results.unwrap_or_else(|| out.join("sweep.csv"));
            let summary = if axis.trains_rnn() {
                let train = read_timeline_dir(&required(train_features, "train-features", axis)?)?;
                let dev = read_timeline_dir(&required(dev_features, "dev-features", axis)?)?;
                let dim = pipeline::rnn_spec_for(&cfg, &train)?.input_dim;
                let grid = build_grid(axis, &values, &cfg, dim)?;
                run_sweep(&grid, SweepData::Rnn { train: &train, dev: &dev }, &results, jobs, verbose)?
            } else {
                let template = required(template, "template", axis)?;
                let train = load_prepared(&required(train, "train", axis)?, &template)?;
                let dev = load_prepared(&required(dev, "dev", axis)?, &template)?;
                let grid = build_grid(axis, &values, &cfg, cfg.rnn.input_dim)?;
                run_sweep(&grid, SweepData::Cnn { train: &train, dev: &dev }, &results, jobs, verbose)?
            };
            println!(
                "{}: {} run, {} cached, {} failed",
                results.display(),
                summary.ran,
                summary.skipped,
                summary.failed
            );
        }
    }
    Ok(())
}
