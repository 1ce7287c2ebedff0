//! The frame manifest: one CSV row per video frame.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use valence_core::prep::Point;
use valence_core::FRAME_RATE;

use crate::error::{Error, Result};

pub const COLUMNS: [&str; 12] = [
    "sequence_id",
    "frame_index",
    "timestamp_s",
    "image_path",
    "face_found",
    "eye_l_x",
    "eye_l_y",
    "eye_r_x",
    "eye_r_y",
    "nose_x",
    "nose_y",
    "valence",
];

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Row {
    sequence_id: String,
    frame_index: usize,
    timestamp_s: f64,
    image_path: String,
    face_found: u8,
    eye_l_x: Option<f64>,
    eye_l_y: Option<f64>,
    eye_r_x: Option<f64>,
    eye_r_y: Option<f64>,
    nose_x: Option<f64>,
    nose_y: Option<f64>,
    valence: Option<f64>,
}

/// One frame. `landmarks` is present exactly when a face was found; the gold
/// `valence` is required for those frames and optional otherwise, since the
/// label of a dropped frame is re-derived by interpolation.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameRecord {
    pub frame_index: usize,
    pub timestamp_s: f64,
    pub image_path: String,
    /// Left eye, right eye, nose.
    pub landmarks: Option<[Point; 3]>,
    pub valence: Option<f64>,
}

impl FrameRecord {
    pub fn face_found(&self) -> bool {
        self.landmarks.is_some()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SequenceRecords {
    pub id: String,
    pub frames: Vec<FrameRecord>,
}

/// A validated manifest. Image paths stay as written and resolve against the
/// manifest's directory; no pixels are loaded here.
#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub base_dir: PathBuf,
    pub sequences: Vec<SequenceRecords>,
}

impl Manifest {
    pub fn frame_count(&self) -> usize {
        self.sequences.iter().map(|s| s.frames.len()).sum()
    }

    pub fn resolve(&self, frame: &FrameRecord) -> PathBuf {
        self.base_dir.join(&frame.image_path)
    }
}

/// Checks that a sequence id is usable as a file stem.
pub fn valid_sequence_id(id: &str) -> bool {
    !id.is_empty()
        && !id.starts_with('.')
        && id.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'))
}

pub fn load_manifest(path: &Path) -> Result<Manifest> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let headers = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    for column in COLUMNS {
        if !headers.iter().any(|h| h == column) {
            return Err(Error::parse(path, format!("missing column {column:?}")));
        }
    }

    let mut sequences: Vec<SequenceRecords> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map_or(0, |p| p.line());
        let bad = |msg: String| Error::parse(path, format!("line {line}: {msg}"));
        let row: Row = record.deserialize(Some(&headers)).map_err(|e| bad(e.to_string()))?;
        let frame = validate_row(&row).map_err(&bad)?;

        match sequences.last_mut() {
            Some(seq) if seq.id == row.sequence_id => {
                let prev = seq.frames.last().expect("sequences are created with one frame").frame_index;
                if frame.frame_index != prev + 1 {
                    return Err(bad(format!(
                        "frame_index {} does not follow {prev} in sequence {:?}; frames must be contiguous \
                         (mark frames without a face with face_found=0)",
                        frame.frame_index, seq.id
                    )));
                }
                seq.frames.push(frame);
            }
            _ => {
                if sequences.iter().any(|s| s.id == row.sequence_id) {
                    return Err(bad(format!("rows of sequence {:?} are not contiguous", row.sequence_id)));
                }
                if !valid_sequence_id(&row.sequence_id) {
                    return Err(bad(format!(
                        "sequence_id {:?} must be non-empty ASCII letters, digits, '_', '-' or '.', not starting with '.'",
                        row.sequence_id
                    )));
                }
                sequences.push(SequenceRecords { id: row.sequence_id.clone(), frames: vec![frame] });
            }
        }
    }
    if sequences.is_empty() {
        return Err(Error::parse(path, "no frames"));
    }
    let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok(Manifest { base_dir, sequences })
}

fn validate_row(row: &Row) -> std::result::Result<FrameRecord, String> {
    if row.image_path.is_empty() {
        return Err("image_path is empty".into());
    }
    if !row.timestamp_s.is_finite() || (row.timestamp_s * FRAME_RATE - row.frame_index as f64).abs() > 1e-6 {
        return Err(format!(
            "timestamp_s {} is not frame {} on the 40 ms grid",
            row.timestamp_s, row.frame_index
        ));
    }
    if let Some(v) = row.valence {
        if !(-1.0..=1.0).contains(&v) {
            return Err(format!("valence {v} outside [-1, 1]"));
        }
    }
    let coords = [row.eye_l_x, row.eye_l_y, row.eye_r_x, row.eye_r_y, row.nose_x, row.nose_y];
    let landmarks = match row.face_found {
        1 => {
            let c: Vec<f64> = coords.iter().flatten().copied().collect();
            if c.len() != 6 {
                return Err("face_found=1 requires all six landmark coordinates".into());
            }
            if c.iter().any(|v| !v.is_finite()) {
                return Err("landmark coordinates must be finite".into());
            }
            if row.valence.is_none() {
                return Err("face_found=1 requires a valence label".into());
            }
            Some([(c[0], c[1]), (c[2], c[3]), (c[4], c[5])])
        }
        0 => {
            if coords.iter().any(Option::is_some) {
                return Err("face_found=0 but landmark coordinates are present".into());
            }
            None
        }
        other => return Err(format!("face_found must be 0 or 1, got {other}")),
    };
    Ok(FrameRecord {
        frame_index: row.frame_index,
        timestamp_s: row.timestamp_s,
        image_path: row.image_path.clone(),
        landmarks,
        valence: row.valence,
    })
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::Read { path: path.to_path_buf(), source },
        kind => Error::parse(path, format!("{kind:?}")),
    }
}

pub fn write_manifest(path: &Path, sequences: &[SequenceRecords]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    for seq in sequences {
        for f in &seq.frames {
            let lm = f.landmarks;
            let pick = |i: usize, x: bool| lm.map(|l| if x { l[i].0 } else { l[i].1 });
            writer
                .serialize(Row {
                    sequence_id: seq.id.clone(),
                    frame_index: f.frame_index,
                    timestamp_s: f.timestamp_s,
                    image_path: f.image_path.clone(),
                    face_found: u8::from(f.face_found()),
                    eye_l_x: pick(0, true),
                    eye_l_y: pick(0, false),
                    eye_r_x: pick(1, true),
                    eye_r_y: pick(1, false),
                    nose_x: pick(2, true),
                    nose_y: pick(2, false),
                    valence: f.valence,
                })
                .map_err(|e| csv_error(path, e))?;
        }
    }
    writer.flush().map_err(Error::write(path))
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str =
        "sequence_id,frame_index,timestamp_s,image_path,face_found,eye_l_x,eye_l_y,eye_r_x,eye_r_y,nose_x,nose_y,valence\n";

    fn load(body: &str) -> Result<Manifest> {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        std::fs::write(&path, format!("{HEADER}{body}")).unwrap();
        load_manifest(&path)
    }

    fn message(body: &str) -> String {
        load(body).unwrap_err().to_string()
    }

    #[test]
    fn three_valid_rows() {
        let m = load(
            "s1,0,0.0,a.pgm,1,10,10,20,10,15,20,0.5\n\
             s1,1,0.04,b.pgm,0,,,,,,,\n\
             s1,2,0.08,c.pgm,1,10,10,20,10,15,20,-0.25\n",
        )
        .unwrap();
        assert_eq!(m.frame_count(), 3);
        assert_eq!(m.sequences[0].frames[1].landmarks, None);
        assert_eq!(m.sequences[0].frames[2].valence, Some(-0.25));
    }

    #[test]
    fn header_only_has_no_frames() {
        assert!(message("").contains("no frames"));
    }

    #[test]
    fn invariant_breaches_name_the_line() {
        let msg = message("s1,0,0.0,a.pgm,0,10,10,20,10,15,20,0.5\n");
        assert!(msg.contains("line 2") && msg.contains("landmark"), "{msg}");
        assert!(message("s1,0,0.0,a.pgm,1,10,10,20,10,15,20,1.5\n").contains("outside"));
        assert!(message("s1,0,0.0,a.pgm,1,10,10,20,10,15,,0.5\n").contains("six landmark"));
        assert!(message("s1,0,0.0,a.pgm,1,10,10,20,10,15,20,\n").contains("valence label"));
        assert!(message("s1,0,0.0,a.pgm,2,,,,,,,\n").contains("0 or 1"));
        assert!(message("s1,0,0.01,a.pgm,0,,,,,,,\n").contains("40 ms"));
    }

    #[test]
    fn ordering_rules() {
        let msg = message("s1,0,0.0,a.pgm,0,,,,,,,\ns1,0,0.0,a.pgm,0,,,,,,,\n");
        assert!(msg.contains("line 3") && msg.contains("does not follow"), "{msg}");
        assert!(message("s1,0,0.0,a.pgm,0,,,,,,,\ns1,2,0.08,a.pgm,0,,,,,,,\n").contains("contiguous"));
        let msg = message("a,0,0.0,x.pgm,0,,,,,,,\nb,0,0.0,x.pgm,0,,,,,,,\na,1,0.04,x.pgm,0,,,,,,,\n");
        assert!(msg.contains("not contiguous"), "{msg}");
        assert!(message("../x,0,0.0,x.pgm,0,,,,,,,\n").contains("sequence_id"));
    }

    #[test]
    fn missing_column_and_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        std::fs::write(&path, "sequence_id,frame_index\n").unwrap();
        assert!(load_manifest(&path).unwrap_err().to_string().contains("timestamp_s"));
        let err = load_manifest(&dir.path().join("absent.csv")).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn write_then_load_round_trips() {
        let seqs = vec![SequenceRecords {
            id: "seq_1".into(),
            frames: vec![
                FrameRecord {
                    frame_index: 0,
                    timestamp_s: 0.0,
                    image_path: "f/0.pgm".into(),
                    landmarks: Some([(1.5, 2.0), (3.0, 2.0), (2.25, 4.0)]),
                    valence: Some(0.123456789),
                },
                FrameRecord {
                    frame_index: 1,
                    timestamp_s: 0.04,
                    image_path: "f/1.pgm".into(),
                    landmarks: None,
                    valence: None,
                },
            ],
        }];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        write_manifest(&path, &seqs).unwrap();
        let m = load_manifest(&path).unwrap();
        assert_eq!(m.sequences, seqs);
        assert_eq!(m.resolve(&seqs[0].frames[0]), dir.path().join("f/0.pgm"));
    }
}
