use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::gaps::{fill_gaps, fill_gaps_rows};
use crate::error::{Error, Result};
use crate::models::CnnModel;
use crate::tensor::Tensor;

/// Per-frame CNN features of one sequence, with the gold labels they are
/// trained against and a mask of frames whose values were gap-filled.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTimeline {
    pub sequence_id: String,
    features: Tensor,
    labels: Option<Vec<f64>>,
    interpolated: Vec<bool>,
}

impl FeatureTimeline {
    pub fn new(
        sequence_id: impl Into<String>,
        features: Tensor,
        labels: Option<Vec<f64>>,
        interpolated: Vec<bool>,
    ) -> Result<Self> {
        features.expect_ndim("feature timeline", "features", 2)?;
        let t = features.shape()[0];
        if interpolated.len() != t || labels.as_ref().is_some_and(|l| l.len() != t) {
            return Err(Error::shape(
                "feature timeline",
                format!(
                    "{t} feature rows, {} labels, {} mask entries",
                    labels.as_ref().map_or(0, Vec::len),
                    interpolated.len()
                ),
            ));
        }
        Ok(FeatureTimeline {
            sequence_id: sequence_id.into(),
            features,
            labels,
            interpolated,
        })
    }

    pub fn len(&self) -> usize {
        self.features.shape()[0]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        self.features.shape()[1]
    }

    pub fn features(&self) -> &Tensor {
        &self.features
    }

    pub fn labels(&self) -> Option<&[f64]> {
        self.labels.as_deref()
    }

    pub fn interpolated(&self) -> &[bool] {
        &self.interpolated
    }

    /// Rows `[start, end)` as a flat slice.
    pub fn rows(&self, start: usize, end: usize) -> &[f64] {
        let d = self.dim();
        &self.features.data()[start * d..end * d]
    }
}

/// A training window: `W` consecutive feature rows ending at frame `end`.
#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    pub features: Tensor,
    pub labels: Tensor,
    pub end: usize,
}

/// Number of complete windows of length `w` in a timeline of `t` frames.
pub fn window_count(t: usize, w: usize) -> usize {
    if w == 0 || t < w {
        0
    } else {
        t - w + 1
    }
}

/// One window per end index `t` in `[W-1, T-1]`, covering frames
/// `[t-W+1, t]`. Labels are sliced from the timeline, never re-derived.
pub fn make_windows(timeline: &FeatureTimeline, w: usize) -> Result<Vec<Window>> {
    if w == 0 {
        return Err(Error::invalid("window length must be at least 1"));
    }
    let t_len = timeline.len();
    if t_len < w {
        return Err(Error::SequenceTooShort {
            sequence: timeline.sequence_id.clone(),
            len: t_len,
            window: w,
        });
    }
    let labels = timeline
        .labels()
        .ok_or_else(|| Error::invalid(format!("timeline {} carries no labels", timeline.sequence_id)))?;
    let d = timeline.dim();
    (w - 1..t_len)
        .map(|end| {
            let start = end + 1 - w;
            Ok(Window {
                features: Tensor::new(vec![w, d], timeline.rows(start, end + 1).to_vec())?,
                labels: Tensor::vector(labels[start..=end].to_vec()),
                end,
            })
        })
        .collect()
}

/// Eval-mode CNN outputs over a sequence in which some frames have no face.
#[derive(Debug, Clone, PartialEq)]
pub struct FramePass {
    /// Regression output per frame; missing frames gap-filled.
    pub valence: Vec<f64>,
    /// `[T, fc_units]` features; missing frames gap-filled per dimension.
    pub features: Tensor,
    pub interpolated: Vec<bool>,
}

/// Runs the frozen CNN on every present frame and fills the absent ones with
/// [`fill_gaps`], the same rule applied to gold labels.
pub fn run_frames(cnn: &CnnModel, frames: &[Option<Tensor>]) -> Result<FramePass> {
    if frames.is_empty() {
        return Err(Error::Empty("frame sequence"));
    }
    let dim = cnn.spec().fc_units;
    let mut valence = Vec::with_capacity(frames.len());
    let mut features = vec![0.0; frames.len() * dim];
    for (i, frame) in frames.iter().enumerate() {
        match frame {
            Some(img) => {
                let (v, f) = cnn.predict(img).map_err(|e| match e {
                    Error::Shape { op, detail } => Error::Shape {
                        op,
                        detail: format!("frame {i}: {detail}"),
                    },
                    other => other,
                })?;
                valence.push(Some(v));
                features[i * dim..(i + 1) * dim].copy_from_slice(f.data());
            }
            None => valence.push(None),
        }
    }
    let present: Vec<bool> = frames.iter().map(Option::is_some).collect();
    let (valence, interpolated) = fill_gaps(&valence)?;
    fill_gaps_rows(&mut features, dim, &present)?;
    Ok(FramePass {
        valence,
        features: Tensor::new(vec![frames.len(), dim], features)?,
        interpolated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn timeline(t: usize, d: usize) -> FeatureTimeline {
        FeatureTimeline::new(
            "s",
            Tensor::from_fn(&[t, d], |i| i as f64),
            Some((0..t).map(|i| i as f64 / 10.0).collect()),
            vec![false; t],
        )
        .unwrap()
    }

    #[test]
    fn window_counts() {
        let w = make_windows(&timeline(3, 2), 3).unwrap();
        assert_eq!(w.len(), 1);
        assert_eq!(w[0].end, 2);
        let w = make_windows(&timeline(5, 2), 2).unwrap();
        assert_eq!(w.iter().map(|w| w.end).collect::<Vec<_>>(), vec![1, 2, 3, 4]);
        assert_eq!(window_count(105, 100), 6);
        assert!(matches!(
            make_windows(&timeline(2, 2), 3),
            Err(Error::SequenceTooShort { len: 2, window: 3, .. })
        ));
    }

    #[test]
    fn windows_slice_labels_exactly() {
        let tl = timeline(6, 3);
        for w in make_windows(&tl, 4).unwrap() {
            let start = w.end + 1 - 4;
            assert_eq!(w.labels.data(), &tl.labels().unwrap()[start..=w.end]);
            assert_eq!(w.features.data(), tl.rows(start, w.end + 1));
        }
    }

    #[test]
    fn mismatched_lengths_rejected() {
        assert!(FeatureTimeline::new("x", Tensor::zeros(&[3, 2]), Some(vec![0.0; 2]), vec![false; 3]).is_err());
        assert!(FeatureTimeline::new("x", Tensor::zeros(&[3, 2]), None, vec![false; 4]).is_err());
    }
}
