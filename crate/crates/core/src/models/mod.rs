//! The two regression architectures: a single-frame CNN and a windowed Elman
//! RNN fed with the frozen CNN's penultimate features.

mod cnn;
mod rnn;

pub use cnn::{CnnModel, CnnOutput, CnnShapes, CnnSpec, CnnTrace};
pub use rnn::{RnnModel, RnnSpec, RnnTrace};
pub use crate::prep::FeatureTimeline;

use rand::RngCore;

/// Stand-in generator for eval-mode passes, where no randomness is drawn.
pub(crate) struct NoDraws;

impl RngCore for NoDraws {
    fn next_u32(&mut self) -> u32 {
        0
    }
    fn next_u64(&mut self) -> u64 {
        0
    }
    fn fill_bytes(&mut self, dst: &mut [u8]) {
        dst.fill(0);
    }
}
