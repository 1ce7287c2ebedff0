//! Turns a manifest into aligned, normalized frames and gap-filled gold.

use valence_core::prep::{align_face, fill_gaps, normalize, Template};
use valence_core::Tensor;

use crate::error::Result;
use crate::image::read_pnm;
use crate::manifest::Manifest;

/// One sequence ready for the models. `frames[i]` is `None` where no face
/// was found; `gold` is complete, with those frames interpolated.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedSequence {
    pub id: String,
    /// Manifest frame index of the first frame.
    pub first_frame: usize,
    pub frames: Vec<Option<Tensor>>,
    pub gold: Vec<f64>,
    pub interpolated: Vec<bool>,
}

impl PreparedSequence {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }
}

/// Loads every image with a detected face, aligns it onto the template,
/// and normalizes it. Gold valence of dropped frames is replaced by linear
/// interpolation from the neighbouring frames.
pub fn prepare(manifest: &Manifest, template: &Template) -> Result<Vec<PreparedSequence>> {
    let template_points = template.points();
    manifest
        .sequences
        .iter()
        .map(|seq| {
            let mut frames = Vec::with_capacity(seq.frames.len());
            let mut gold = Vec::with_capacity(seq.frames.len());
            for record in &seq.frames {
                match &record.landmarks {
                    Some(landmarks) => {
                        let path = manifest.resolve(record);
                        let image = read_pnm(&path)?;
                        let aligned = align_face(&image, landmarks, &template_points, template.out_size)
                            .map_err(|e| crate::error::Error::parse(&path, e.to_string()))?;
                        frames.push(Some(normalize(&aligned)));
                        gold.push(record.valence);
                    }
                    None => {
                        frames.push(None);
                        gold.push(None);
                    }
                }
            }
            let (gold, interpolated) = fill_gaps(&gold).map_err(|e| match e {
                valence_core::Error::Empty(_) => crate::error::Error::parse(
                    &manifest.base_dir,
                    format!("sequence {:?} has no frame with a detected face", seq.id),
                ),
                other => other.into(),
            })?;
            Ok(PreparedSequence {
                id: seq.id.clone(),
                first_frame: seq.frames[0].frame_index,
                frames,
                gold,
                interpolated,
            })
        })
        .collect()
}

/// `(image, gold)` pairs of every frame with a face, in manifest order.
pub fn labeled_frames(sequences: &[PreparedSequence]) -> Vec<(Tensor, f64)> {
    sequences
        .iter()
        .flat_map(|s| s.frames.iter().zip(&s.gold).filter_map(|(f, &g)| f.clone().map(|f| (f, g))))
        .collect()
}
