//! Central finite differences for checking hand-written backward passes.
//! Test support only; enabled by the `gradcheck` feature.

use alloc::vec::Vec;

use crate::params::ParamSet;

/// Default step for central differences.
pub const EPS: f64 = 1e-5;

/// Denominator floor of [`relative_error`], so that gradients near zero are
/// compared on an absolute scale of `1e-3` instead of amplifying roundoff.
pub const REL_FLOOR: f64 = 1e-3;

/// `|a - n| / max(|a|, |n|, REL_FLOOR)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(REL_FLOOR)
}

pub fn max_relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    assert_eq!(analytic.len(), numeric.len());
    analytic
        .iter()
        .zip(numeric)
        .map(|(&a, &n)| relative_error(a, n))
        .fold(0.0, f64::max)
}

/// `(f(x + eps e_i) - f(x - eps e_i)) / (2 eps)` for every coordinate.
pub fn central_difference(mut f: impl FnMut(&[f64]) -> f64, x: &[f64], eps: f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            let orig = probe[i];
            probe[i] = orig + eps;
            let up = f(&probe);
            probe[i] = orig - eps;
            let down = f(&probe);
            probe[i] = orig;
            (up - down) / (2.0 * eps)
        })
        .collect()
}

/// Numeric gradient of `loss` with respect to every scalar of `params`,
/// laid out like `params`.
pub fn numeric_param_grads(params: &ParamSet, mut loss: impl FnMut(&ParamSet) -> f64, eps: f64) -> ParamSet {
    let mut probe = params.clone();
    let mut out = params.zeros_like();
    for i in 0..params.len() {
        for j in 0..params.at(i).len() {
            let orig = probe.at(i).data()[j];
            probe.at_mut(i).data_mut()[j] = orig + eps;
            let up = loss(&probe);
            probe.at_mut(i).data_mut()[j] = orig - eps;
            let down = loss(&probe);
            probe.at_mut(i).data_mut()[j] = orig;
            out.at_mut(i).data_mut()[j] = (up - down) / (2.0 * eps);
        }
    }
    out
}

/// Largest relative error between two congruent parameter sets.
pub fn max_param_error(analytic: &ParamSet, numeric: &ParamSet) -> f64 {
    analytic
        .iter()
        .zip(numeric.iter())
        .map(|((_, a), (_, n))| max_relative_error(a.data(), n.data()))
        .fold(0.0, f64::max)
}

/// Relative disagreement between central differences at `eps` and `eps / 2`
/// above which a coordinate is treated as straddling a non-differentiable
/// point. On smooth stretches the two agree to about `eps^2` times the third
/// derivative, orders of magnitude below this.
pub const KINK_TOL: f64 = 1e-6;

/// Numeric parameter gradient plus, per tensor, the coordinates whose
/// `±eps` probe window contains a kink (ReLU switching sign, a max-pool
/// argmax changing). Detection uses function values only.
#[derive(Debug, Clone)]
pub struct NumericGrads {
    pub grads: ParamSet,
    pub kinks: Vec<Vec<bool>>,
}

impl NumericGrads {
    pub fn kink_count(&self) -> usize {
        self.kinks.iter().flatten().filter(|&&k| k).count()
    }
}

pub fn numeric_param_grads_smooth(params: &ParamSet, mut loss: impl FnMut(&ParamSet) -> f64, eps: f64) -> NumericGrads {
    let mut probe = params.clone();
    let mut grads = params.zeros_like();
    let mut kinks = Vec::with_capacity(params.len());
    for i in 0..params.len() {
        let mut mask = Vec::with_capacity(params.at(i).len());
        for j in 0..params.at(i).len() {
            let orig = probe.at(i).data()[j];
            let mut diff = |h: f64| {
                probe.at_mut(i).data_mut()[j] = orig + h;
                let up = loss(&probe);
                probe.at_mut(i).data_mut()[j] = orig - h;
                let down = loss(&probe);
                probe.at_mut(i).data_mut()[j] = orig;
                (up - down) / (2.0 * h)
            };
            let full = diff(eps);
            let half = diff(eps / 2.0);
            grads.at_mut(i).data_mut()[j] = full;
            mask.push(relative_error(full, half) > KINK_TOL);
        }
        kinks.push(mask);
    }
    NumericGrads { grads, kinks }
}

/// Largest relative error over the coordinates not flagged as kinks.
pub fn max_smooth_error(analytic: &ParamSet, numeric: &NumericGrads) -> f64 {
    let mut worst: f64 = 0.0;
    for (i, (_, a)) in analytic.iter().enumerate() {
        let n = numeric.grads.at(i).data();
        for (j, &av) in a.data().iter().enumerate() {
            if !numeric.kinks[i][j] {
                worst = worst.max(relative_error(av, n[j]));
            }
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::Tensor;

    fn point(values: &[f64]) -> ParamSet {
        let mut p = ParamSet::new();
        p.push("x", Tensor::vector(values.to_vec()));
        p
    }

    #[test]
    fn kink_inside_probe_window_is_flagged() {
        let p = point(&[3e-6, 0.5, -0.7]);
        let numeric = numeric_param_grads_smooth(&p, |q| q.at(0).data().iter().map(|v| v.max(0.0)).sum(), EPS);
        assert_eq!(numeric.kinks[0], [true, false, false]);
        assert_eq!(numeric.kink_count(), 1);
    }

    #[test]
    fn smooth_function_has_no_kinks() {
        let p = point(&[0.3, -1.2, 2.0]);
        let numeric = numeric_param_grads_smooth(&p, |q| q.at(0).data().iter().map(|v| libm::tanh(*v) * v * v).sum(), EPS);
        assert_eq!(numeric.kink_count(), 0);
    }

    #[test]
    fn flagged_coordinates_are_skipped() {
        let p = point(&[3e-6, 0.5]);
        let numeric = numeric_param_grads_smooth(&p, |q| q.at(0).data().iter().map(|v| v.max(0.0)).sum(), EPS);
        let analytic = point(&[1.0, 1.0]);
        assert!(max_smooth_error(&analytic, &numeric) < 1e-9);
        assert!(max_param_error(&analytic, &numeric.grads) > 0.1);
    }
}
