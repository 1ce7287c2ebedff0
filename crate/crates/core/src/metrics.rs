//! RMSE, Pearson CC and Lin's concordance correlation coefficient, all with
//! population (divide-by-n) moments.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::{Error, Result};

fn check_pair(op: &'static str, pred: &[f64], gold: &[f64], min_len: usize) -> Result<()> {
    if pred.len() != gold.len() {
        return Err(Error::shape(
            op,
            format!("prediction length {} vs gold length {}", pred.len(), gold.len()),
        ));
    }
    if pred.len() < min_len {
        return Err(Error::invalid(format!(
            "{op} needs at least {min_len} samples, got {}",
            pred.len()
        )));
    }
    Ok(())
}

fn is_constant(x: &[f64]) -> bool {
    x.iter().all(|&v| v == x[0])
}

struct Moments {
    mean_p: f64,
    mean_g: f64,
    var_p: f64,
    var_g: f64,
    cov: f64,
}

fn moments(pred: &[f64], gold: &[f64]) -> Moments {
    let n = pred.len() as f64;
    let mean_p = pred.iter().sum::<f64>() / n;
    let mean_g = gold.iter().sum::<f64>() / n;
    let (mut var_p, mut var_g, mut cov) = (0.0, 0.0, 0.0);
    for (&p, &g) in pred.iter().zip(gold) {
        let (dp, dg) = (p - mean_p, g - mean_g);
        var_p += dp * dp;
        var_g += dg * dg;
        cov += dp * dg;
    }
    let (const_p, const_g) = (is_constant(pred), is_constant(gold));
    if const_p {
        var_p = 0.0;
    }
    if const_g {
        var_g = 0.0;
    }
    if const_p || const_g {
        cov = 0.0;
    }
    Moments {
        mean_p,
        mean_g,
        var_p: var_p / n,
        var_g: var_g / n,
        cov: cov / n,
    }
}

/// `sqrt(mean((pred - gold)^2))`.
pub fn rmse(pred: &[f64], gold: &[f64]) -> Result<f64> {
    check_pair("rmse", pred, gold, 1)?;
    let sse: f64 = pred.iter().zip(gold).map(|(p, g)| (p - g) * (p - g)).sum();
    Ok(libm::sqrt(sse / pred.len() as f64))
}

/// Pearson correlation. Errors when either input is constant.
pub fn pearson_cc(pred: &[f64], gold: &[f64]) -> Result<f64> {
    check_pair("pearson_cc", pred, gold, 2)?;
    if is_constant(pred) || is_constant(gold) {
        return Err(Error::Undefined("correlation"));
    }
    let m = moments(pred, gold);
    Ok((m.cov / libm::sqrt(m.var_p * m.var_g)).clamp(-1.0, 1.0))
}

/// Lin's concordance `2 cov / (var_p + var_g + (mean_p - mean_g)^2)`.
/// Errors only when both inputs are constant at the same value.
pub fn ccc(pred: &[f64], gold: &[f64]) -> Result<f64> {
    check_pair("ccc", pred, gold, 2)?;
    let m = moments(pred, gold);
    let dm = m.mean_p - m.mean_g;
    let denom = m.var_p + m.var_g + dm * dm;
    if denom == 0.0 {
        return Err(Error::Undefined("CCC"));
    }
    Ok((2.0 * m.cov / denom).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Scores {
    pub rmse: f64,
    pub cc: f64,
    pub ccc: f64,
}

impl Scores {
    pub fn compute(pred: &[f64], gold: &[f64]) -> Result<Self> {
        Ok(Scores {
            rmse: rmse(pred, gold)?,
            cc: pearson_cc(pred, gold)?,
            ccc: ccc(pred, gold)?,
        })
    }
}

/// Reference dev-set scores of the deepest recurrent configuration
/// (3 layers, W = 100) on the original corpus. Display only.
pub const REFERENCE_BEST_DEV: Scores = Scores {
    rmse: 0.107,
    cc: 0.554,
    ccc: 0.507,
};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SequenceScores {
    pub sequence_id: String,
    pub n: usize,
    /// Frames whose gold value was gap-filled (still scored).
    pub interpolated: usize,
    #[cfg_attr(feature = "serde", serde(flatten))]
    pub scores: Scores,
}

/// Per-sequence scores plus a pooled row computed over the concatenation of
/// all sequences.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EvalReport {
    pub sequences: Vec<SequenceScores>,
    pub pooled: SequenceScores,
}

pub const POOLED_ID: &str = "__pooled__";

/// One sequence's predictions, gold labels and gap-fill mask.
#[derive(Debug, Clone, Copy)]
pub struct TimelineRef<'a> {
    pub sequence_id: &'a str,
    pub pred: &'a [f64],
    pub gold: &'a [f64],
    pub mask: &'a [bool],
}

/// Scores one timeline over all frames, gap-filled ones included.
pub fn evaluate_timeline(pred: &[f64], gold: &[f64], mask: &[bool]) -> Result<Scores> {
    if mask.len() != gold.len() {
        return Err(Error::shape(
            "evaluate_timeline",
            format!("mask length {} vs gold length {}", mask.len(), gold.len()),
        ));
    }
    Scores::compute(pred, gold)
}

pub fn evaluate_sequences(items: &[TimelineRef<'_>]) -> Result<EvalReport> {
    if items.is_empty() {
        return Err(Error::Empty("no sequences to evaluate"));
    }
    let mut sequences = Vec::with_capacity(items.len());
    let (mut all_p, mut all_g) = (Vec::new(), Vec::new());
    let mut interpolated_total = 0;
    for it in items {
        let scores = evaluate_timeline(it.pred, it.gold, it.mask)?;
        let interpolated = it.mask.iter().filter(|&&m| m).count();
        interpolated_total += interpolated;
        sequences.push(SequenceScores {
            sequence_id: it.sequence_id.to_string(),
            n: it.pred.len(),
            interpolated,
            scores,
        });
        all_p.extend_from_slice(it.pred);
        all_g.extend_from_slice(it.gold);
    }
    let pooled = SequenceScores {
        sequence_id: POOLED_ID.to_string(),
        n: all_p.len(),
        interpolated: interpolated_total,
        scores: Scores::compute(&all_p, &all_g)?,
    };
    Ok(EvalReport { sequences, pooled })
}
