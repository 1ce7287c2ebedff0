use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::RngCore;

use crate::error::{Error, Result};
use crate::ops::Activation;
use crate::params::{init_uniform, ParamSet};
use crate::tensor::Tensor;

/// Stacked Elman RNN over a temporal window of frame features.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct RnnSpec {
    pub input_dim: usize,
    pub hidden_sizes: Vec<usize>,
    /// Window length W in frames.
    pub window: usize,
    pub activation: Activation,
}

impl Default for RnnSpec {
    fn default() -> Self {
        RnnSpec {
            input_dim: 300,
            hidden_sizes: vec![100],
            window: 100,
            activation: Activation::Relu,
        }
    }
}

impl RnnSpec {
    pub fn validate(&self) -> Result<()> {
        if self.hidden_sizes.is_empty() {
            return Err(Error::invalid("rnn needs at least one hidden layer"));
        }
        if self.hidden_sizes.contains(&0) || self.input_dim == 0 {
            return Err(Error::invalid("rnn layer widths must be positive"));
        }
        if self.window == 0 {
            return Err(Error::invalid("rnn window must be at least 1"));
        }
        Ok(())
    }

    fn layer_input(&self, layer: usize) -> usize {
        if layer == 0 {
            self.input_dim
        } else {
            self.hidden_sizes[layer - 1]
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RnnModel {
    spec: RnnSpec,
    params: ParamSet,
    version: u64,
}

/// Saved state of one unrolled pass: the input rows and every layer's hidden
/// states (post-activation), `steps x width` row-major.
#[derive(Debug, Clone)]
pub struct RnnTrace {
    version: u64,
    steps: usize,
    input: Vec<f64>,
    hidden: Vec<Vec<f64>>,
}

impl RnnModel {
    fn layout(spec: &RnnSpec) -> Result<Vec<(alloc::string::String, Vec<usize>, usize)>> {
        spec.validate()?;
        let mut out = Vec::new();
        for (l, &h) in spec.hidden_sizes.iter().enumerate() {
            let inp = spec.layer_input(l);
            out.push((format!("rnn{l}.w_x"), vec![h, inp], inp));
            out.push((format!("rnn{l}.w_h"), vec![h, h], h));
            out.push((format!("rnn{l}.bias"), vec![h], 0));
        }
        let last = *spec.hidden_sizes.last().unwrap();
        out.push(("out.weight".into(), vec![1, last], last));
        out.push(("out.bias".into(), vec![1], 0));
        Ok(out)
    }

    /// Weights uniform in `[-sqrt(1/fan_in), sqrt(1/fan_in)]`, biases zero.
    pub fn init<R: RngCore + ?Sized>(spec: RnnSpec, rng: &mut R) -> Result<Self> {
        let mut params = ParamSet::new();
        for (name, shape, fan_in) in Self::layout(&spec)? {
            let t = if fan_in == 0 {
                Tensor::zeros(&shape)
            } else {
                init_uniform(&shape, fan_in, rng)
            };
            params.push(name, t);
        }
        Ok(RnnModel {
            spec,
            params,
            version: 0,
        })
    }

    pub fn zeros(spec: RnnSpec) -> Result<Self> {
        let mut params = ParamSet::new();
        for (name, shape, _) in Self::layout(&spec)? {
            params.push(name, Tensor::zeros(&shape));
        }
        Ok(RnnModel {
            spec,
            params,
            version: 0,
        })
    }

    pub fn from_params(spec: RnnSpec, params: ParamSet) -> Result<Self> {
        let expected = Self::zeros(spec)?;
        expected.params.check_congruent(&params, "rnn parameters")?;
        Ok(RnnModel {
            spec: expected.spec,
            params,
            version: 0,
        })
    }

    pub fn spec(&self) -> &RnnSpec {
        &self.spec
    }

    pub fn params(&self) -> &ParamSet {
        &self.params
    }

    /// Mutable access invalidates every trace recorded so far.
    pub fn params_mut(&mut self) -> &mut ParamSet {
        self.version += 1;
        &mut self.params
    }

    /// Runs a full window `[W, input_dim]` and returns one prediction per step.
    pub fn forward(&self, window: &Tensor) -> Result<(Vec<f64>, RnnTrace)> {
        window.expect_ndim("rnn forward", "window", 2)?;
        if window.shape()[0] != self.spec.window {
            return Err(Error::shape(
                "rnn forward",
                format!("window has {} rows, expected W = {}", window.shape()[0], self.spec.window),
            ));
        }
        self.forward_rows(window.data(), window.shape()[1])
    }

    /// Unrolls over any number of rows (`rows.len() / dim` steps), starting
    /// from a zero hidden state.
    pub fn forward_rows(&self, rows: &[f64], dim: usize) -> Result<(Vec<f64>, RnnTrace)> {
        if dim != self.spec.input_dim {
            return Err(Error::shape(
                "rnn forward",
                format!("feature dim {dim}, expected {}", self.spec.input_dim),
            ));
        }
        if rows.is_empty() || rows.len() % dim != 0 {
            return Err(Error::shape(
                "rnn forward",
                format!("{} values do not form whole rows of {dim}", rows.len()),
            ));
        }
        let steps = rows.len() / dim;
        let act = self.spec.activation;
        let mut hidden: Vec<Vec<f64>> = Vec::with_capacity(self.spec.hidden_sizes.len());
        for (l, &h) in self.spec.hidden_sizes.iter().enumerate() {
            let inp = self.spec.layer_input(l);
            let x_all: &[f64] = if l == 0 { rows } else { &hidden[l - 1] };
            let w_x = self.params.at(3 * l).data();
            let w_h = self.params.at(3 * l + 1).data();
            let b = self.params.at(3 * l + 2).data();
            let mut hs = vec![0.0; steps * h];
            for t in 0..steps {
                let x = &x_all[t * inp..(t + 1) * inp];
                let (done, rest) = hs.split_at_mut(t * h);
                let cur = &mut rest[..h];
                let prev = if t > 0 { Some(&done[(t - 1) * h..]) } else { None };
                for (r, out) in cur.iter_mut().enumerate() {
                    let mut a = b[r];
                    a += dot(&w_x[r * inp..(r + 1) * inp], x);
                    if let Some(prev) = prev {
                        a += dot(&w_h[r * h..(r + 1) * h], prev);
                    }
                    *out = act.apply(a);
                }
            }
            hidden.push(hs);
        }
        let n_layers = self.spec.hidden_sizes.len();
        let last = self.spec.hidden_sizes[n_layers - 1];
        let w_o = self.params.at(3 * n_layers).data();
        let b_o = self.params.at(3 * n_layers + 1).data()[0];
        let top = &hidden[n_layers - 1];
        let outputs = (0..steps)
            .map(|t| b_o + dot(w_o, &top[t * last..(t + 1) * last]))
            .collect();
        Ok((
            outputs,
            RnnTrace {
                version: self.version,
                steps,
                input: rows.to_vec(),
                hidden,
            },
        ))
    }

    /// Backpropagation through time. `d_outputs[t]` is `d loss / d y_t`;
    /// gradients are summed over all steps.
    pub fn backward(&self, trace: &RnnTrace, d_outputs: &[f64]) -> Result<ParamSet> {
        if trace.version != self.version {
            return Err(Error::StaleContext("rnn parameters changed since the forward pass"));
        }
        if trace.hidden.len() != self.spec.hidden_sizes.len() {
            return Err(Error::StaleContext("trace has a different layer count"));
        }
        let steps = trace.steps;
        if d_outputs.len() != steps {
            return Err(Error::shape(
                "rnn backward",
                format!("{} output gradients for {steps} steps", d_outputs.len()),
            ));
        }
        let act = self.spec.activation;
        let n_layers = self.spec.hidden_sizes.len();
        let last = self.spec.hidden_sizes[n_layers - 1];
        let mut grads = self.params.zeros_like();

        // Readout.
        let w_o = self.params.at(3 * n_layers).data();
        let mut d_h_in = vec![0.0; steps * last];
        {
            let top = &trace.hidden[n_layers - 1];
            let mut d_wo = vec![0.0; last];
            let mut d_bo = 0.0;
            for t in 0..steps {
                let g = d_outputs[t];
                d_bo += g;
                for r in 0..last {
                    d_wo[r] += g * top[t * last + r];
                    d_h_in[t * last + r] = g * w_o[r];
                }
            }
            grads.at_mut(3 * n_layers).data_mut().copy_from_slice(&d_wo);
            grads.at_mut(3 * n_layers + 1).data_mut()[0] = d_bo;
        }

        for l in (0..n_layers).rev() {
            let h = self.spec.hidden_sizes[l];
            let inp = self.spec.layer_input(l);
            let x_all: &[f64] = if l == 0 { &trace.input } else { &trace.hidden[l - 1] };
            let hs = &trace.hidden[l];
            let w_x = self.params.at(3 * l).data();
            let w_h = self.params.at(3 * l + 1).data();
            let mut d_wx = vec![0.0; h * inp];
            let mut d_wh = vec![0.0; h * h];
            let mut d_b = vec![0.0; h];
            let mut d_x = vec![0.0; steps * inp];
            let mut d_next = vec![0.0; h];
            let mut da = vec![0.0; h];
            for t in (0..steps).rev() {
                for r in 0..h {
                    let dh = d_h_in[t * h + r] + d_next[r];
                    da[r] = dh * act.derivative_from_output(hs[t * h + r]);
                }
                let x = &x_all[t * inp..(t + 1) * inp];
                for r in 0..h {
                    let a = da[r];
                    d_b[r] += a;
                    axpy(&mut d_wx[r * inp..(r + 1) * inp], a, x);
                    axpy(&mut d_x[t * inp..(t + 1) * inp], a, &w_x[r * inp..(r + 1) * inp]);
                }
                d_next.fill(0.0);
                if t > 0 {
                    let prev = &hs[(t - 1) * h..t * h];
                    for r in 0..h {
                        let a = da[r];
                        axpy(&mut d_wh[r * h..(r + 1) * h], a, prev);
                        axpy(&mut d_next, a, &w_h[r * h..(r + 1) * h]);
                    }
                }
            }
            grads.at_mut(3 * l).data_mut().copy_from_slice(&d_wx);
            grads.at_mut(3 * l + 1).data_mut().copy_from_slice(&d_wh);
            grads.at_mut(3 * l + 2).data_mut().copy_from_slice(&d_b);
            d_h_in = d_x;
        }
        Ok(grads)
    }

    /// Valence per frame of a `[T, input_dim]` feature timeline. Frame `t`
    /// is scored by the last output of the window `[t-W+1, t]`; the first
    /// `W-1` frames use the shorter prefix `[0, t]`.
    pub fn predict_timeline(&self, features: &Tensor) -> Result<Vec<f64>> {
        features.expect_ndim("predict_timeline", "features", 2)?;
        let (t_len, dim) = (features.shape()[0], features.shape()[1]);
        if t_len == 0 {
            return Err(Error::Empty("feature timeline"));
        }
        let w = self.spec.window;
        let data = features.data();
        (0..t_len)
            .map(|t| {
                let start = (t + 1).saturating_sub(w);
                let (ys, _) = self.forward_rows(&data[start * dim..(t + 1) * dim], dim)?;
                Ok(ys[ys.len() - 1])
            })
            .collect()
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
fn axpy(dst: &mut [f64], a: f64, x: &[f64]) {
    for (d, v) in dst.iter_mut().zip(x) {
        *d += a * v;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn spec(hidden: Vec<usize>, window: usize, act: Activation) -> RnnSpec {
        RnnSpec {
            input_dim: 3,
            hidden_sizes: hidden,
            window,
            activation: act,
        }
    }

    #[test]
    fn zero_params_zero_outputs() {
        for act in [Activation::Relu, Activation::Tanh] {
            let m = RnnModel::zeros(spec(vec![4, 2], 5, act)).unwrap();
            let x = Tensor::from_fn(&[5, 3], |i| i as f64 - 7.0);
            let (y, _) = m.forward(&x).unwrap();
            assert_eq!(y, vec![0.0; 5]);
        }
    }

    #[test]
    fn single_step_is_feed_forward() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let m = RnnModel::init(spec(vec![4], 1, Activation::Tanh), &mut rng).unwrap();
        let x = [0.3, -1.2, 0.8];
        let (y, _) = m.forward(&Tensor::new(vec![1, 3], x.to_vec()).unwrap()).unwrap();
        let p = m.params();
        let mut expect = p.at(4).data()[0];
        for r in 0..4 {
            let a = p.at(2).data()[r] + dot(&p.at(0).data()[r * 3..r * 3 + 3], &x);
            expect += p.at(3).data()[r] * libm::tanh(a);
        }
        assert_eq!(y[0], expect);
    }

    #[test]
    fn window_and_dim_checked() {
        let m = RnnModel::zeros(spec(vec![2], 4, Activation::Relu)).unwrap();
        assert!(m.forward(&Tensor::zeros(&[3, 3])).is_err());
        assert!(m.forward(&Tensor::zeros(&[4, 2])).is_err());
        assert!(RnnModel::zeros(spec(vec![], 4, Activation::Relu)).is_err());
        assert!(RnnModel::zeros(spec(vec![2], 0, Activation::Relu)).is_err());
    }

    #[test]
    fn last_step_gradient_reaches_all_steps() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m = RnnModel::init(spec(vec![4], 5, Activation::Tanh), &mut rng).unwrap();
        let x = Tensor::from_fn(&[5, 3], |i| ((i * 37) % 11) as f64 / 5.0 - 1.0);
        let (_, trace) = m.forward(&x).unwrap();
        let g = m.backward(&trace, &[0.0, 0.0, 0.0, 0.0, 1.0]).unwrap();
        assert!(g.at(0).data().iter().any(|&v| v != 0.0));
        assert!(g.at(1).data().iter().any(|&v| v != 0.0));

        // Only the first input row touched: the W_x gradient must still
        // pick it up through the recurrent chain.
        let mut sparse = vec![0.0; 15];
        sparse[..3].copy_from_slice(&[1.0, -1.0, 0.5]);
        let (_, trace) = m.forward(&Tensor::new(vec![5, 3], sparse).unwrap()).unwrap();
        let g = m.backward(&trace, &[0.0, 0.0, 0.0, 0.0, 1.0]).unwrap();
        assert!(g.at(0).data().iter().any(|&v| v != 0.0));

        let g0 = m.backward(&trace, &[0.0; 5]).unwrap();
        assert!(g0.iter().all(|(_, t)| t.data().iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn timeline_length_and_constant() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let m = RnnModel::init(spec(vec![3], 1, Activation::Relu), &mut rng).unwrap();
        let feats = Tensor::from_fn(&[7, 3], |i| [0.2, -0.4, 0.9][i % 3]);
        let y = m.predict_timeline(&feats).unwrap();
        assert_eq!(y.len(), 7);
        assert!(y.iter().all(|&v| v == y[0]));

        let m = RnnModel::init(spec(vec![3], 4, Activation::Relu), &mut rng).unwrap();
        let y = m.predict_timeline(&Tensor::from_fn(&[4, 3], |i| i as f64 * 0.1)).unwrap();
        assert_eq!(y.len(), 4);
    }
}
