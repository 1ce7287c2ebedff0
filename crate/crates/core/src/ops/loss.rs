use alloc::format;

use crate::error::{Error, Result};
use crate::tensor::Tensor;

#[derive(Debug, Clone)]
pub struct MseCtx {
    diff: Tensor,
}

/// Mean squared error `(1/n) * sum (pred - target)^2`.
pub fn mse_loss(pred: &Tensor, target: &Tensor) -> Result<(f64, MseCtx)> {
    if pred.is_empty() {
        return Err(Error::Empty("mse_loss prediction"));
    }
    if pred.len() != target.len() {
        return Err(Error::shape(
            "mse_loss",
            format!("prediction length {} vs target length {}", pred.len(), target.len()),
        ));
    }
    let mut diff = pred.clone();
    for (d, t) in diff.data_mut().iter_mut().zip(target.data()) {
        *d -= t;
    }
    let n = pred.len() as f64;
    let loss = diff.data().iter().map(|d| d * d).sum::<f64>() / n;
    Ok((loss, MseCtx { diff }))
}

impl MseCtx {
    /// Gradient with respect to the prediction, scaled by `upstream`
    /// (`dL_total / d loss`, usually 1).
    pub fn backward(&self, upstream: f64) -> Tensor {
        let scale = upstream * 2.0 / self.diff.len() as f64;
        let mut g = self.diff.clone();
        g.scale(scale);
        g
    }
}
