//! Synthetic stand-in corpus with a known latent valence signal.
//!
//! Each sequence follows a clipped random walk, smoothed exponentially with
//! time constant `tau_s`. Every frame shows a Gaussian blob whose brightness
//! and horizontal position are functions of the current valence, plus
//! independent pixel noise. A single frame therefore determines valence up to
//! noise, and averaging neighbouring frames removes part of that noise.

use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use valence_core::prep::{Point, Template};
use valence_core::train::shuffled_indices;
use valence_core::{Tensor, FRAME_RATE};

use crate::config::write_json;
use crate::error::{Error, Result};
use crate::image::write_pnm;
use crate::manifest::{write_manifest, FrameRecord, SequenceRecords};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub train_sequences: usize,
    pub dev_sequences: usize,
    /// Frames per sequence.
    pub length: usize,
    /// Side of the square frames, in pixels.
    pub image_size: usize,
    /// Standard deviation of the additive pixel noise (intensities in [0, 1]).
    pub noise_sigma: f64,
    /// Smoothing time constant of the latent signal, in seconds.
    pub tau_s: f64,
    /// Per-frame standard deviation of the underlying random walk.
    pub walk_sigma: f64,
    /// Fraction of frames per sequence marked as having no detected face.
    pub gap_fraction: f64,
    /// Side of the aligned crop the template maps faces onto.
    pub crop_size: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            train_sequences: 20,
            dev_sequences: 4,
            length: 300,
            image_size: 32,
            noise_sigma: 0.35,
            tau_s: 0.4,
            walk_sigma: 0.12,
            gap_fraction: 0.05,
            crop_size: 36,
            seed: 42,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::Config(format!("synth: {m}")));
        if self.length == 0 || self.train_sequences + self.dev_sequences == 0 {
            return fail("need at least one sequence of at least one frame");
        }
        if self.image_size < 8 || self.crop_size < 8 {
            return fail("image_size and crop_size must be at least 8");
        }
        if !(self.noise_sigma >= 0.0 && self.walk_sigma >= 0.0 && self.tau_s > 0.0) {
            return fail("noise_sigma and walk_sigma must be >= 0 and tau_s > 0");
        }
        if !(0.0..1.0).contains(&self.gap_fraction) {
            return fail("gap_fraction must be in [0, 1)");
        }
        Ok(())
    }

    /// Fixed landmark positions in the rendered frames: left eye, right eye, nose.
    pub fn landmarks(&self) -> [Point; 3] {
        let s = self.image_size as f64;
        [(0.3 * s, 0.35 * s), (0.7 * s, 0.35 * s), (0.5 * s, 0.6 * s)]
    }

    /// Template that maps the fixed landmarks onto a `crop_size` crop,
    /// i.e. a pure rescale of the frame.
    pub fn template(&self) -> Template {
        let k = self.crop_size as f64 / self.image_size as f64;
        let [l, r, n] = self.landmarks().map(|(x, y)| (x * k, y * k));
        Template { eye_l: l, eye_r: r, nose: n, out_size: self.crop_size }
    }

    fn gap_count(&self) -> usize {
        (self.gap_fraction * self.length as f64).round() as usize
    }
}

/// Latent valence path: a random walk clipped to [-1, 1], then exponentially
/// smoothed. The smoothed path stays in [-1, 1] because every value is a
/// convex combination of clipped ones.
pub fn latent_valence<R: Rng + ?Sized>(cfg: &SynthConfig, rng: &mut R) -> Vec<f64> {
    let alpha = 1.0 - (-1.0 / (FRAME_RATE * cfg.tau_s)).exp();
    let step = Normal::new(0.0, cfg.walk_sigma).expect("validated sigma");
    let mut walk: f64 = rng.random_range(-0.5..0.5);
    let mut v = walk;
    (0..cfg.length)
        .map(|_| {
            walk = (walk + step.sample(rng)).clamp(-1.0, 1.0);
            v += alpha * (walk - v);
            v
        })
        .collect()
}

/// One grayscale frame for valence `v`: blob brightness rises from 0.4 to 0.6
/// and its centre moves from 46% to 54% of the width as `v` goes from -1 to 1.
pub fn render_frame<R: Rng + ?Sized>(cfg: &SynthConfig, v: f64, rng: &mut R) -> Tensor {
    let s = cfg.image_size as f64;
    let (cx, cy) = (s * (0.5 + 0.04 * v), s * 0.5);
    let amplitude = 0.5 + 0.1 * v;
    let radius = s / 8.0;
    let noise = Normal::new(0.0, cfg.noise_sigma).expect("validated sigma");
    Tensor::from_fn(&[1, cfg.image_size, cfg.image_size], |i| {
        let (y, x) = ((i / cfg.image_size) as f64 + 0.5, (i % cfg.image_size) as f64 + 0.5);
        let d2 = (x - cx).powi(2) + (y - cy).powi(2);
        let clean = 0.1 + amplitude * (-d2 / (2.0 * radius * radius)).exp();
        let n = if cfg.noise_sigma > 0.0 { noise.sample(rng) } else { 0.0 };
        (clean + n).clamp(0.0, 1.0)
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthOutput {
    pub train_manifest: PathBuf,
    pub dev_manifest: PathBuf,
    pub template: PathBuf,
}

/// Writes `train.csv`, `dev.csv`, `template.json` and `frames/<seq>/*.pgm`
/// under `out`.
pub fn generate(cfg: &SynthConfig, out: &Path) -> Result<SynthOutput> {
    cfg.validate()?;
    let landmarks = cfg.landmarks();
    let mut splits = [Vec::new(), Vec::new()];
    for index in 0..cfg.train_sequences + cfg.dev_sequences {
        let (split, id) = if index < cfg.train_sequences {
            (0, format!("train_{index:02}"))
        } else {
            (1, format!("dev_{:02}", index - cfg.train_sequences))
        };
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(index as u64 + 1);
        let valence = latent_valence(cfg, &mut rng);
        let mut missing = vec![false; cfg.length];
        for &i in shuffled_indices(cfg.length, &mut rng).iter().take(cfg.gap_count()) {
            missing[i] = true;
        }

        let frame_dir = out.join("frames").join(&id);
        fs::create_dir_all(&frame_dir).map_err(Error::write(&frame_dir))?;
        let mut frames = Vec::with_capacity(cfg.length);
        for (t, &v) in valence.iter().enumerate() {
            let rel = format!("frames/{id}/{t:04}.pgm");
            write_pnm(&out.join(&rel), &render_frame(cfg, v, &mut rng))?;
            frames.push(FrameRecord {
                frame_index: t,
                timestamp_s: t as f64 / FRAME_RATE,
                image_path: rel,
                landmarks: (!missing[t]).then_some(landmarks),
                valence: Some(v),
            });
        }
        splits[split].push(SequenceRecords { id, frames });
    }

    let output = SynthOutput {
        train_manifest: out.join("train.csv"),
        dev_manifest: out.join("dev.csv"),
        template: out.join("template.json"),
    };
    write_manifest(&output.train_manifest, &splits[0])?;
    write_manifest(&output.dev_manifest, &splits[1])?;
    write_json(&output.template, &cfg.template())?;
    Ok(output)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mean(t: &Tensor) -> f64 {
        t.data().iter().sum::<f64>() / t.len() as f64
    }

    #[test]
    fn brighter_for_higher_valence() {
        let cfg = SynthConfig { noise_sigma: 0.0, ..SynthConfig::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let lo = render_frame(&cfg, -1.0, &mut rng);
        let mid = render_frame(&cfg, 0.0, &mut rng);
        let hi = render_frame(&cfg, 1.0, &mut rng);
        assert!(mean(&hi) > mean(&mid) && mean(&mid) > mean(&lo));
    }

    #[test]
    fn latent_stays_in_range() {
        let cfg = SynthConfig { walk_sigma: 0.5, length: 5000, ..SynthConfig::default() };
        let v = latent_valence(&cfg, &mut ChaCha8Rng::seed_from_u64(1));
        assert!(v.iter().all(|x| (-1.0..=1.0).contains(x)));
        assert!(v.iter().any(|&x| x > 0.5) && v.iter().any(|&x| x < -0.5));
    }

    #[test]
    fn template_rescales_landmarks() {
        let cfg = SynthConfig::default();
        let t = cfg.template();
        assert_eq!(t.out_size, 36);
        assert!((t.eye_l.0 - 0.3 * 36.0).abs() < 1e-12);
    }

    #[test]
    fn exact_gap_count_and_determinism() {
        let cfg = SynthConfig {
            train_sequences: 1,
            dev_sequences: 1,
            length: 200,
            noise_sigma: 0.0,
            gap_fraction: 0.1,
            ..SynthConfig::default()
        };
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let out = generate(&cfg, a.path()).unwrap();
        generate(&cfg, b.path()).unwrap();
        let m = crate::manifest::load_manifest(&out.train_manifest).unwrap();
        let missing = m.sequences[0].frames.iter().filter(|f| !f.face_found()).count();
        assert_eq!(missing, 20);
        for rel in ["train.csv", "dev.csv", "template.json", "frames/dev_00/0123.pgm"] {
            assert_eq!(fs::read(a.path().join(rel)).unwrap(), fs::read(b.path().join(rel)).unwrap(), "{rel}");
        }
    }
}
