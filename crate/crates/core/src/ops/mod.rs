//! Differentiable primitives.
//!
//! Each forward returns its output together with a context holding what the
//! matching backward needs. Backward passes are derived by hand; there is no
//! autodiff graph.

mod activation;
mod conv;
mod dropout;
mod linear;
mod loss;
mod pool;

pub use activation::{activate, Activation, ActivationCtx};
pub use conv::{conv2d, Conv2dCtx, Conv2dGrads};
pub use dropout::{dropout, DropoutCtx};
pub use linear::{linear, LinearCtx, LinearGrads};
pub use loss::{mse_loss, MseCtx};
pub use pool::{maxpool2, quadrant_pool, PoolCtx};

/// Whether stochastic layers (dropout) are active.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}
