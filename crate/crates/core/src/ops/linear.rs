use alloc::format;

use crate::error::{Error, Result};
use crate::tensor::Tensor;

#[derive(Debug, Clone)]
pub struct LinearCtx {
    input: Tensor,
    weight_shape: [usize; 2],
}

#[derive(Debug, Clone)]
pub struct LinearGrads {
    pub input: Tensor,
    pub weight: Tensor,
    pub bias: Tensor,
}

/// Affine map `weight * input + bias` for a single vector.
pub fn linear(input: &Tensor, weight: &Tensor, bias: &Tensor) -> Result<(Tensor, LinearCtx)> {
    input.expect_ndim("linear", "input", 1)?;
    weight.expect_ndim("linear", "weight", 2)?;
    let (m, n) = (weight.shape()[0], weight.shape()[1]);
    if input.len() != n {
        return Err(Error::shape(
            "linear",
            format!("input length {} but weight expects {n}", input.len()),
        ));
    }
    bias.expect_shape("linear", "bias", &[m])?;
    let x = input.data();
    let w = weight.data();
    let mut out = bias.clone();
    for (r, o) in out.data_mut().iter_mut().enumerate() {
        let row = &w[r * n..(r + 1) * n];
        *o += row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
    }
    Ok((
        out,
        LinearCtx {
            input: input.clone(),
            weight_shape: [m, n],
        },
    ))
}

impl LinearCtx {
    pub fn backward(&self, weight: &Tensor, upstream: &Tensor) -> Result<LinearGrads> {
        let [m, n] = self.weight_shape;
        weight.expect_shape("linear backward", "weight", &self.weight_shape)?;
        upstream.expect_shape("linear backward", "upstream gradient", &[m])?;
        let x = self.input.data();
        let g = upstream.data();
        let w = weight.data();
        let mut dw = Tensor::zeros(&[m, n]);
        let mut dx = Tensor::zeros(&[n]);
        for r in 0..m {
            let gr = g[r];
            let dst = &mut dw.data_mut()[r * n..(r + 1) * n];
            for (d, xv) in dst.iter_mut().zip(x) {
                *d = gr * xv;
            }
            let row = &w[r * n..(r + 1) * n];
            for (d, wv) in dx.data_mut().iter_mut().zip(row) {
                *d += gr * wv;
            }
        }
        Ok(LinearGrads {
            input: dx,
            weight: dw,
            bias: upstream.clone(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn identity_and_hand_value() {
        let eye = Tensor::new(vec![2, 2], vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let (y, _) = linear(&Tensor::vector(vec![3.0, 7.0]), &eye, &Tensor::zeros(&[2])).unwrap();
        assert_eq!(y.data(), &[3.0, 7.0]);

        let w = Tensor::new(vec![1, 2], vec![1.0, 2.0]).unwrap();
        let (y, _) = linear(&Tensor::vector(vec![3.0, 4.0]), &w, &Tensor::vector(vec![1.0])).unwrap();
        assert_eq!(y.data(), &[12.0]);
    }

    #[test]
    fn mismatch_is_error() {
        let w = Tensor::zeros(&[2, 3]);
        assert!(linear(&Tensor::zeros(&[2]), &w, &Tensor::zeros(&[2])).is_err());
        assert!(linear(&Tensor::zeros(&[3]), &w, &Tensor::zeros(&[3])).is_err());
    }
}
