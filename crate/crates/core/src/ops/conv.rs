use alloc::format;

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Saved state of a [`conv2d`] call.
#[derive(Debug, Clone)]
pub struct Conv2dCtx {
    input: Tensor,
    kernel_shape: [usize; 4],
}

#[derive(Debug, Clone)]
pub struct Conv2dGrads {
    /// `None` when the caller did not ask for the input gradient.
    pub input: Option<Tensor>,
    pub kernels: Tensor,
    pub bias: Tensor,
}

/// Valid (unpadded, stride 1) 2-d convolution, cross-correlation form:
/// `out[o,y,x] = bias[o] + sum_{c,i,j} input[c,y+i,x+j] * kernels[o,c,i,j]`.
pub fn conv2d(input: &Tensor, kernels: &Tensor, bias: &Tensor) -> Result<(Tensor, Conv2dCtx)> {
    input.expect_ndim("conv2d", "input", 3)?;
    kernels.expect_ndim("conv2d", "kernels", 4)?;
    let (c_in, h, w) = (input.shape()[0], input.shape()[1], input.shape()[2]);
    let ks = kernels.shape();
    let (c_out, kc, kh, kw) = (ks[0], ks[1], ks[2], ks[3]);
    if kc != c_in {
        return Err(Error::shape(
            "conv2d",
            format!("input channels {c_in} but kernels expect {kc}"),
        ));
    }
    if kh != kw {
        return Err(Error::shape("conv2d", format!("kernel must be square, got {kh}x{kw}")));
    }
    if h < kh {
        return Err(Error::shape("conv2d", format!("input height {h} < kernel size {kh}")));
    }
    if w < kw {
        return Err(Error::shape("conv2d", format!("input width {w} < kernel size {kw}")));
    }
    bias.expect_shape("conv2d", "bias", &[c_out])?;

    let (oh, ow) = (h - kh + 1, w - kw + 1);
    let mut out = Tensor::zeros(&[c_out, oh, ow]);
    let x = input.data();
    let k = kernels.data();
    let o_data = out.data_mut();
    for o in 0..c_out {
        let plane = &mut o_data[o * oh * ow..(o + 1) * oh * ow];
        plane.fill(bias.data()[o]);
        for c in 0..c_in {
            let src = &x[c * h * w..(c + 1) * h * w];
            for i in 0..kh {
                for j in 0..kw {
                    let wv = k[((o * c_in + c) * kh + i) * kw + j];
                    for y in 0..oh {
                        let row = &src[(y + i) * w + j..(y + i) * w + j + ow];
                        let dst = &mut plane[y * ow..(y + 1) * ow];
                        for (d, s) in dst.iter_mut().zip(row) {
                            *d += wv * s;
                        }
                    }
                }
            }
        }
    }
    Ok((
        out,
        Conv2dCtx {
            input: input.clone(),
            kernel_shape: [c_out, c_in, kh, kw],
        },
    ))
}

impl Conv2dCtx {
    /// Gradients for kernels, bias and (optionally) the input, given the
    /// upstream gradient with respect to the convolution output.
    pub fn backward(&self, kernels: &Tensor, upstream: &Tensor, need_input: bool) -> Result<Conv2dGrads> {
        let [c_out, c_in, kh, kw] = self.kernel_shape;
        kernels.expect_shape("conv2d backward", "kernels", &self.kernel_shape)?;
        let (h, w) = (self.input.shape()[1], self.input.shape()[2]);
        let (oh, ow) = (h - kh + 1, w - kw + 1);
        upstream.expect_shape("conv2d backward", "upstream gradient", &[c_out, oh, ow])?;

        let x = self.input.data();
        let g = upstream.data();
        let k = kernels.data();
        let mut dk = Tensor::zeros(&self.kernel_shape);
        let mut db = Tensor::zeros(&[c_out]);
        let mut dx = if need_input {
            Some(Tensor::zeros(self.input.shape()))
        } else {
            None
        };

        for o in 0..c_out {
            let g_plane = &g[o * oh * ow..(o + 1) * oh * ow];
            db.data_mut()[o] = g_plane.iter().sum();
            for c in 0..c_in {
                let src = &x[c * h * w..(c + 1) * h * w];
                for i in 0..kh {
                    for j in 0..kw {
                        let idx = ((o * c_in + c) * kh + i) * kw + j;
                        let mut acc = 0.0;
                        for y in 0..oh {
                            let row = &src[(y + i) * w + j..(y + i) * w + j + ow];
                            let gr = &g_plane[y * ow..(y + 1) * ow];
                            for (a, b) in gr.iter().zip(row) {
                                acc += a * b;
                            }
                        }
                        dk.data_mut()[idx] = acc;

                        if let Some(dx) = dx.as_mut() {
                            let wv = k[idx];
                            let dst_plane = &mut dx.data_mut()[c * h * w..(c + 1) * h * w];
                            for y in 0..oh {
                                let dst = &mut dst_plane[(y + i) * w + j..(y + i) * w + j + ow];
                                let gr = &g_plane[y * ow..(y + 1) * ow];
                                for (d, a) in dst.iter_mut().zip(gr) {
                                    *d += wv * a;
                                }
                            }
                        }
                    }
                }
            }
        }
        Ok(Conv2dGrads {
            input: dx,
            kernels: dk,
            bias: db,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn hand_computed_identity_diagonal() {
        let input = Tensor::new(vec![1, 2, 2], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let k = Tensor::new(vec![1, 1, 2, 2], vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let (out, _) = conv2d(&input, &k, &Tensor::vector(vec![0.0])).unwrap();
        assert_eq!(out.shape(), &[1, 1, 1]);
        assert_eq!(out.data(), &[5.0]);
    }

    #[test]
    fn zero_kernel_yields_bias() {
        let input = Tensor::from_fn(&[2, 6, 5], |i| (i as f64).sin());
        let k = Tensor::zeros(&[3, 2, 3, 3]);
        let (out, _) = conv2d(&input, &k, &Tensor::vector(vec![0.5, -1.0, 2.0])).unwrap();
        assert_eq!(out.shape(), &[3, 4, 3]);
        for o in 0..3 {
            for v in &out.data()[o * 12..(o + 1) * 12] {
                assert_eq!(*v, [0.5, -1.0, 2.0][o]);
            }
        }
    }

    #[test]
    fn shape_errors_name_dimension() {
        let input = Tensor::zeros(&[2, 4, 4]);
        let k = Tensor::zeros(&[1, 3, 3, 3]);
        let err = conv2d(&input, &k, &Tensor::zeros(&[1])).unwrap_err();
        assert!(alloc::format!("{err}").contains("channels"));

        let k = Tensor::zeros(&[1, 2, 5, 5]);
        let err = conv2d(&input, &k, &Tensor::zeros(&[1])).unwrap_err();
        assert!(alloc::format!("{err}").contains("height"));

        let k = Tensor::zeros(&[1, 2, 3, 3]);
        assert!(conv2d(&input, &k, &Tensor::zeros(&[2])).is_err());
    }
}
