use crate::error::Result;
use crate::tensor::Tensor;

/// Pointwise nonlinearity shared by the conv, FC and recurrent layers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Activation {
    #[default]
    Relu,
    Tanh,
}

impl Activation {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => {
                if x > 0.0 {
                    x
                } else {
                    0.0
                }
            }
            Activation::Tanh => libm::tanh(x),
        }
    }

    /// Derivative expressed through the activation's output `y`.
    /// ReLU: `1[y > 0]` (0 at the kink); tanh: `1 - y^2`.
    #[inline]
    pub fn derivative_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Relu => {
                if y > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - y * y,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Tanh => "tanh",
        }
    }
}

#[derive(Debug, Clone)]
pub struct ActivationCtx {
    kind: Activation,
    output: Tensor,
}

pub fn activate(input: &Tensor, kind: Activation) -> (Tensor, ActivationCtx) {
    let mut out = input.clone();
    for v in out.data_mut() {
        *v = kind.apply(*v);
    }
    let ctx = ActivationCtx {
        kind,
        output: out.clone(),
    };
    (out, ctx)
}

impl ActivationCtx {
    pub fn backward(&self, upstream: &Tensor) -> Result<Tensor> {
        upstream.expect_shape("activation backward", "upstream gradient", self.output.shape())?;
        let mut g = upstream.clone();
        for (gv, &y) in g.data_mut().iter_mut().zip(self.output.data()) {
            *gv *= self.kind.derivative_from_output(y);
        }
        Ok(g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn relu_values_and_kink() {
        let x = Tensor::vector(vec![-1.0, 0.0, 2.0]);
        let (y, ctx) = activate(&x, Activation::Relu);
        assert_eq!(y.data(), &[0.0, 0.0, 2.0]);
        let g = ctx.backward(&Tensor::vector(vec![1.0, 1.0, 1.0])).unwrap();
        assert_eq!(g.data(), &[0.0, 0.0, 1.0]);
    }

    #[test]
    fn tanh_at_zero() {
        let (y, ctx) = activate(&Tensor::vector(vec![0.0]), Activation::Tanh);
        assert_eq!(y.data(), &[0.0]);
        let g = ctx.backward(&Tensor::vector(vec![1.0])).unwrap();
        assert_eq!(g.data(), &[1.0]);
    }
}
