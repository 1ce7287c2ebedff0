use alloc::format;
use alloc::vec::Vec;

use rand::{Rng, RngCore};

use super::Mode;
use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Per-element multipliers applied in train mode (`0` or `1/(1-p)`);
/// `None` when the layer acted as the identity.
#[derive(Debug, Clone)]
pub struct DropoutCtx {
    shape: Vec<usize>,
    mask: Option<Vec<f64>>,
}

/// Inverted dropout: in train mode each element is zeroed with probability
/// `p` and survivors are scaled by `1/(1-p)`. Eval mode is the identity.
pub fn dropout<R: RngCore + ?Sized>(
    input: &Tensor,
    p: f64,
    mode: Mode,
    rng: &mut R,
) -> Result<(Tensor, DropoutCtx)> {
    if !(0.0..1.0).contains(&p) {
        return Err(Error::invalid(format!("dropout probability {p} outside [0, 1)")));
    }
    if mode == Mode::Eval || p == 0.0 {
        return Ok((
            input.clone(),
            DropoutCtx {
                shape: input.shape().to_vec(),
                mask: None,
            },
        ));
    }
    let keep_scale = 1.0 / (1.0 - p);
    let mask: Vec<f64> = (0..input.len())
        .map(|_| if rng.random::<f64>() < p { 0.0 } else { keep_scale })
        .collect();
    let mut out = input.clone();
    for (v, m) in out.data_mut().iter_mut().zip(&mask) {
        *v *= m;
    }
    Ok((
        out,
        DropoutCtx {
            shape: input.shape().to_vec(),
            mask: Some(mask),
        },
    ))
}

impl DropoutCtx {
    pub fn backward(&self, upstream: &Tensor) -> Result<Tensor> {
        upstream.expect_shape("dropout backward", "upstream gradient", &self.shape)?;
        let mut g = upstream.clone();
        if let Some(mask) = &self.mask {
            for (v, m) in g.data_mut().iter_mut().zip(mask) {
                *v *= m;
            }
        }
        Ok(g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn eval_and_zero_p_are_identity() {
        let x = Tensor::from_fn(&[7], |i| i as f64 * 0.3 - 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (y, _) = dropout(&x, 0.5, Mode::Eval, &mut rng).unwrap();
        assert_eq!(y, x);
        let (y, _) = dropout(&x, 0.0, Mode::Train, &mut rng).unwrap();
        assert_eq!(y, x);
    }

    #[test]
    fn law_of_large_numbers() {
        let x = Tensor::filled(&[10_000], 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let (y, _) = dropout(&x, 0.5, Mode::Train, &mut rng).unwrap();
        let mean = y.data().iter().sum::<f64>() / 10_000.0;
        assert!((0.97..=1.03).contains(&mean), "mean {mean}");
        assert!(y.data().iter().all(|&v| v == 0.0 || v == 2.0));
    }

    #[test]
    fn probability_range() {
        let x = Tensor::zeros(&[3]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(dropout(&x, 1.0, Mode::Train, &mut rng).is_err());
        assert!(dropout(&x, -0.1, Mode::Eval, &mut rng).is_err());
    }
}
