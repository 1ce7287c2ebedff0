//! Minibatch training loops for the single-frame CNN and the windowed RNN.

mod augment;
mod cnn;
mod rnn;

pub use augment::{augment, flip_horizontal, AugmentConfig, AugmentDraw};
pub use cnn::{batch_gradient_cnn, train_cnn, CnnFlags, DROPOUT_P};
pub use rnn::{batch_gradient_rnn, rnn_samples, train_rnn, WindowSample};

use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::metrics::Scores;

/// Independent random streams derived from one seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Stream {
    Init = 0,
    Shuffle = 1,
    Dropout = 2,
    Augment = 3,
}

pub(crate) fn stream_rng(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}

/// Uniformly random permutation of `0..n`.
pub fn shuffled_indices<R: RngCore + ?Sized>(n: usize, rng: &mut R) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(rng);
    idx
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    /// Mean per-sample training loss over the epoch.
    pub loss: f64,
    pub dev: Option<Scores>,
    pub seconds: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrainHistory {
    pub epochs: Vec<EpochRecord>,
}

/// Hooks the training loops call once per epoch. The core has no clock and
/// no dev data of its own; callers supply both.
pub trait TrainMonitor<M> {
    /// Monotonic seconds since an arbitrary origin.
    fn now(&mut self) -> f64 {
        0.0
    }

    /// Dev-set scores for the model at the end of an epoch.
    fn evaluate(&mut self, _model: &M) -> Option<Scores> {
        None
    }
}

/// Monitor that records nothing.
#[derive(Debug, Default, Clone, Copy)]
pub struct Silent;

impl<M> TrainMonitor<M> for Silent {}
