use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Argmax routing saved by the pooling forwards.
#[derive(Debug, Clone)]
pub struct PoolCtx {
    input_shape: [usize; 3],
    output_shape: [usize; 3],
    /// Flat input index of the winner for each output element.
    argmax: Vec<usize>,
}

/// Max over the rectangle `[y0, y1) x [x0, x1)` of one channel plane.
/// Ties resolve to the first position in row-major order.
fn region_argmax(plane: &[f64], w: usize, y0: usize, y1: usize, x0: usize, x1: usize) -> (usize, f64) {
    let mut best = y0 * w + x0;
    let mut best_v = plane[best];
    for y in y0..y1 {
        for x in x0..x1 {
            let v = plane[y * w + x];
            if v > best_v {
                best_v = v;
                best = y * w + x;
            }
        }
    }
    (best, best_v)
}

fn pool_regions(
    input: &Tensor,
    out_h: usize,
    out_w: usize,
    bounds: impl Fn(usize, usize) -> (usize, usize, usize, usize),
) -> (Tensor, PoolCtx) {
    let (c, h, w) = (input.shape()[0], input.shape()[1], input.shape()[2]);
    let mut out = Tensor::zeros(&[c, out_h, out_w]);
    let mut argmax = Vec::with_capacity(c * out_h * out_w);
    for ch in 0..c {
        let plane = &input.data()[ch * h * w..(ch + 1) * h * w];
        for qy in 0..out_h {
            for qx in 0..out_w {
                let (y0, y1, x0, x1) = bounds(qy, qx);
                let (idx, v) = region_argmax(plane, w, y0, y1, x0, x1);
                out.data_mut()[(ch * out_h + qy) * out_w + qx] = v;
                argmax.push(ch * h * w + idx);
            }
        }
    }
    let ctx = PoolCtx {
        input_shape: [c, h, w],
        output_shape: [c, out_h, out_w],
        argmax,
    };
    (out, ctx)
}

/// 2x2 max pooling with stride 2 over a `[C, H, W]` tensor with even extents.
pub fn maxpool2(input: &Tensor) -> Result<(Tensor, PoolCtx)> {
    input.expect_ndim("maxpool2", "input", 3)?;
    let (h, w) = (input.shape()[1], input.shape()[2]);
    if h % 2 != 0 || w % 2 != 0 {
        return Err(Error::shape(
            "maxpool2",
            format!("extents must be even, got height {h} width {w}"),
        ));
    }
    Ok(pool_regions(input, h / 2, w / 2, |qy, qx| {
        (2 * qy, 2 * qy + 2, 2 * qx, 2 * qx + 2)
    }))
}

/// Max over the four quadrants of each channel, split at `floor(H/2)` and
/// `floor(W/2)`. Output is `[C, 2, 2]`.
pub fn quadrant_pool(input: &Tensor) -> Result<(Tensor, PoolCtx)> {
    input.expect_ndim("quadrant_pool", "input", 3)?;
    let (h, w) = (input.shape()[1], input.shape()[2]);
    if h < 2 || w < 2 {
        return Err(Error::shape(
            "quadrant_pool",
            format!("extents must be at least 2, got height {h} width {w}"),
        ));
    }
    let (my, mx) = (h / 2, w / 2);
    Ok(pool_regions(input, 2, 2, |qy, qx| {
        let (y0, y1) = if qy == 0 { (0, my) } else { (my, h) };
        let (x0, x1) = if qx == 0 { (0, mx) } else { (mx, w) };
        (y0, y1, x0, x1)
    }))
}

impl PoolCtx {
    /// Routes each upstream value to the position that won the forward max.
    pub fn backward(&self, upstream: &Tensor) -> Result<Tensor> {
        upstream.expect_shape("pool backward", "upstream gradient", &self.output_shape)?;
        let mut grad = Tensor::zeros(&self.input_shape);
        for (&idx, &g) in self.argmax.iter().zip(upstream.data()) {
            grad.data_mut()[idx] += g;
        }
        Ok(grad)
    }
}
