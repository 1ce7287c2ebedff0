use alloc::format;
use alloc::vec::Vec;

use rand::RngCore;

use super::NoDraws;
use crate::error::{Error, Result};
use crate::ops::{
    activate, conv2d, dropout, linear, maxpool2, quadrant_pool, Activation, ActivationCtx, Conv2dCtx,
    DropoutCtx, LinearCtx, Mode, PoolCtx,
};
use crate::params::{init_uniform, ParamSet};
use crate::tensor::Tensor;

/// Architecture of the single-frame regression CNN:
/// `[conv -> act -> maxpool2] x 2 -> conv -> act -> quadrant pool -> FC -> act
/// -> dropout -> linear(1)`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct CnnSpec {
    pub input_channels: usize,
    pub input_height: usize,
    pub input_width: usize,
    pub conv_filters: [usize; 3],
    pub kernel_size: usize,
    pub fc_units: usize,
    /// 0 disables dropout.
    pub dropout_p: f64,
    pub activation: Activation,
}

impl Default for CnnSpec {
    fn default() -> Self {
        CnnSpec {
            input_channels: 1,
            input_height: 96,
            input_width: 96,
            conv_filters: [64, 128, 256],
            kernel_size: 5,
            fc_units: 300,
            dropout_p: 0.0,
            activation: Activation::Relu,
        }
    }
}

/// Intermediate `[C, H, W]` shapes implied by a [`CnnSpec`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CnnShapes {
    pub conv: [[usize; 3]; 3],
    pub pooled: [[usize; 3]; 2],
    pub quadrant: [usize; 3],
    pub flatten_len: usize,
}

impl CnnSpec {
    /// Walks the conv/pool chain and reports every intermediate shape, or the
    /// first stage at which the spec breaks.
    pub fn shapes(&self) -> Result<CnnShapes> {
        if self.input_channels == 0 || self.kernel_size == 0 || self.fc_units == 0 {
            return Err(Error::invalid("channels, kernel size and FC width must be positive"));
        }
        if self.conv_filters.contains(&0) {
            return Err(Error::invalid("filter counts must be positive"));
        }
        if !(0.0..1.0).contains(&self.dropout_p) {
            return Err(Error::invalid(format!("dropout_p {} outside [0, 1)", self.dropout_p)));
        }
        let k = self.kernel_size;
        let (mut h, mut w) = (self.input_height, self.input_width);
        let mut conv = [[0; 3]; 3];
        let mut pooled = [[0; 3]; 2];
        for stage in 0..3 {
            if h < k || w < k {
                return Err(Error::shape(
                    "cnn spec",
                    format!("conv{} input {h}x{w} smaller than kernel {k}", stage + 1),
                ));
            }
            h = h - k + 1;
            w = w - k + 1;
            conv[stage] = [self.conv_filters[stage], h, w];
            if stage < 2 {
                if h % 2 != 0 || w % 2 != 0 {
                    return Err(Error::shape(
                        "cnn spec",
                        format!("conv{} output {h}x{w} is not even before max pooling", stage + 1),
                    ));
                }
                h /= 2;
                w /= 2;
                pooled[stage] = [self.conv_filters[stage], h, w];
            }
        }
        if h < 2 || w < 2 {
            return Err(Error::shape(
                "cnn spec",
                format!("conv3 output {h}x{w} too small for quadrant pooling"),
            ));
        }
        let quadrant = [self.conv_filters[2], 2, 2];
        Ok(CnnShapes {
            conv,
            pooled,
            quadrant,
            flatten_len: self.conv_filters[2] * 4,
        })
    }

    /// Parameter shapes in storage order.
    fn param_layout(&self) -> Result<Vec<(&'static str, Vec<usize>)>> {
        let shapes = self.shapes()?;
        let k = self.kernel_size;
        let f = self.conv_filters;
        Ok(alloc::vec![
            ("conv1.weight", alloc::vec![f[0], self.input_channels, k, k]),
            ("conv1.bias", alloc::vec![f[0]]),
            ("conv2.weight", alloc::vec![f[1], f[0], k, k]),
            ("conv2.bias", alloc::vec![f[1]]),
            ("conv3.weight", alloc::vec![f[2], f[1], k, k]),
            ("conv3.bias", alloc::vec![f[2]]),
            ("fc.weight", alloc::vec![self.fc_units, shapes.flatten_len]),
            ("fc.bias", alloc::vec![self.fc_units]),
            ("regress.weight", alloc::vec![1, self.fc_units]),
            ("regress.bias", alloc::vec![1]),
        ])
    }
}

const FC_W: usize = 6;
const FC_B: usize = 7;
const OUT_W: usize = 8;
const OUT_B: usize = 9;

#[derive(Debug, Clone, PartialEq)]
pub struct CnnModel {
    spec: CnnSpec,
    params: ParamSet,
    version: u64,
}

/// Saved contexts of one [`CnnModel::forward`] call.
#[derive(Debug, Clone)]
pub struct CnnTrace {
    version: u64,
    conv: [Conv2dCtx; 3],
    act: [ActivationCtx; 3],
    pool: [PoolCtx; 2],
    quadrant: PoolCtx,
    quadrant_shape: [usize; 3],
    fc: LinearCtx,
    fc_act: ActivationCtx,
    drop: DropoutCtx,
    regress: LinearCtx,
}

#[derive(Debug, Clone)]
pub struct CnnOutput {
    pub valence: f64,
    /// Post-activation FC vector (before dropout): the frame feature.
    pub features: Tensor,
    pub trace: CnnTrace,
}

fn at_stage(stage: &'static str, e: Error) -> Error {
    match e {
        Error::Shape { detail, .. } => Error::Shape { op: stage, detail },
        other => other,
    }
}

impl CnnModel {
    /// Weights uniform in `[-sqrt(1/fan_in), sqrt(1/fan_in)]`, biases zero.
    pub fn init<R: RngCore + ?Sized>(spec: CnnSpec, rng: &mut R) -> Result<Self> {
        let mut params = ParamSet::new();
        for (name, shape) in spec.param_layout()? {
            let t = if name.ends_with(".bias") {
                Tensor::zeros(&shape)
            } else {
                let fan_in = shape[1..].iter().product();
                init_uniform(&shape, fan_in, rng)
            };
            params.push(name, t);
        }
        Ok(CnnModel {
            spec,
            params,
            version: 0,
        })
    }

    pub fn zeros(spec: CnnSpec) -> Result<Self> {
        let mut params = ParamSet::new();
        for (name, shape) in spec.param_layout()? {
            params.push(name, Tensor::zeros(&shape));
        }
        Ok(CnnModel {
            spec,
            params,
            version: 0,
        })
    }

    /// Rebuilds a model from stored tensors, which must match the layout
    /// implied by `spec` exactly.
    pub fn from_params(spec: CnnSpec, params: ParamSet) -> Result<Self> {
        let expected = Self::zeros(spec)?;
        expected.params.check_congruent(&params, "cnn parameters")?;
        Ok(CnnModel {
            spec: expected.spec,
            params,
            version: 0,
        })
    }

    pub fn spec(&self) -> &CnnSpec {
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

    pub fn forward<R: RngCore + ?Sized>(&self, image: &Tensor, mode: Mode, rng: &mut R) -> Result<CnnOutput> {
        let s = &self.spec;
        image.expect_shape(
            "cnn input",
            "image",
            &[s.input_channels, s.input_height, s.input_width],
        )?;
        let p = &self.params;
        let (c1, conv1) = conv2d(image, p.at(0), p.at(1)).map_err(|e| at_stage("cnn conv1", e))?;
        let (a1, act1) = activate(&c1, s.activation);
        let (p1, pool1) = maxpool2(&a1).map_err(|e| at_stage("cnn pool1", e))?;
        let (c2, conv2) = conv2d(&p1, p.at(2), p.at(3)).map_err(|e| at_stage("cnn conv2", e))?;
        let (a2, act2) = activate(&c2, s.activation);
        let (p2, pool2) = maxpool2(&a2).map_err(|e| at_stage("cnn pool2", e))?;
        let (c3, conv3) = conv2d(&p2, p.at(4), p.at(5)).map_err(|e| at_stage("cnn conv3", e))?;
        let (a3, act3) = activate(&c3, s.activation);
        let (q, quad) = quadrant_pool(&a3).map_err(|e| at_stage("cnn quadrant pool", e))?;
        let quadrant_shape = [q.shape()[0], q.shape()[1], q.shape()[2]];
        let flat = q.reshape(&[quadrant_shape.iter().product()])?;
        let (h, fc) = linear(&flat, p.at(FC_W), p.at(FC_B)).map_err(|e| at_stage("cnn fc", e))?;
        let (features, fc_act) = activate(&h, s.activation);
        let (dropped, drop) = dropout(&features, s.dropout_p, mode, rng)?;
        let (y, regress) =
            linear(&dropped, p.at(OUT_W), p.at(OUT_B)).map_err(|e| at_stage("cnn regression", e))?;
        Ok(CnnOutput {
            valence: y.data()[0],
            features,
            trace: CnnTrace {
                version: self.version,
                conv: [conv1, conv2, conv3],
                act: [act1, act2, act3],
                pool: [pool1, pool2],
                quadrant: quad,
                quadrant_shape,
                fc,
                fc_act,
                drop,
                regress,
            },
        })
    }

    /// Eval-mode valence and feature vector for one frame.
    pub fn predict(&self, image: &Tensor) -> Result<(f64, Tensor)> {
        let out = self.forward(image, Mode::Eval, &mut NoDraws)?;
        Ok((out.valence, out.features))
    }

    /// Gradients of all parameters given `d loss / d valence`.
    pub fn backward(&self, trace: &CnnTrace, d_valence: f64) -> Result<ParamSet> {
        if trace.version != self.version {
            return Err(Error::StaleContext("cnn parameters changed since the forward pass"));
        }
        let p = &self.params;
        let mut grads = self.params.zeros_like();

        let g_out = trace.regress.backward(p.at(OUT_W), &Tensor::vector(alloc::vec![d_valence]))?;
        *grads.at_mut(OUT_W) = g_out.weight;
        *grads.at_mut(OUT_B) = g_out.bias;
        let g = trace.drop.backward(&g_out.input)?;
        let g = trace.fc_act.backward(&g)?;
        let g_fc = trace.fc.backward(p.at(FC_W), &g)?;
        *grads.at_mut(FC_W) = g_fc.weight;
        *grads.at_mut(FC_B) = g_fc.bias;
        let g = g_fc.input.reshape(&trace.quadrant_shape)?;
        let mut g = trace.quadrant.backward(&g)?;
        for stage in (0..3).rev() {
            if stage < 2 {
                g = trace.pool[stage].backward(&g)?;
            }
            let ga = trace.act[stage].backward(&g)?;
            let gc = trace.conv[stage].backward(p.at(2 * stage), &ga, stage > 0)?;
            *grads.at_mut(2 * stage) = gc.kernels;
            *grads.at_mut(2 * stage + 1) = gc.bias;
            if let Some(gi) = gc.input {
                g = gi;
            }
        }
        Ok(grads)
    }

    /// Penultimate features for a run of frames, one row per frame. The model
    /// is only read; dropout is off.
    pub fn extract_features(&self, frames: &[Tensor]) -> Result<Tensor> {
        if frames.is_empty() {
            return Err(Error::Empty("frame sequence"));
        }
        let mut data = Vec::with_capacity(frames.len() * self.spec.fc_units);
        for (i, frame) in frames.iter().enumerate() {
            let (_, f) = self.predict(frame).map_err(|e| match e {
                Error::Shape { op, detail } => Error::Shape {
                    op,
                    detail: format!("frame {i}: {detail}"),
                },
                other => other,
            })?;
            data.extend_from_slice(f.data());
        }
        Tensor::new(alloc::vec![frames.len(), self.spec.fc_units], data)
    }
}
