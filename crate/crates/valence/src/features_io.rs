//! Feature timeline files: `AFFT1`, a length-prefixed JSON header, then
//! row-major little-endian `f64` features, the labels if present, and one
//! byte per frame for the interpolation mask.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use valence_core::models::FeatureTimeline;
use valence_core::Tensor;

use crate::error::{Error, Result};
use crate::model_io::{split_header, take_f64};

pub const MAGIC: &[u8; 5] = b"AFFT1";
pub const EXTENSION: &str = "afft";

#[derive(Serialize, Deserialize)]
struct Header {
    sequence_id: String,
    #[serde(rename = "T")]
    len: usize,
    dim: usize,
    has_labels: bool,
}

pub fn encode_timeline(tl: &FeatureTimeline) -> Vec<u8> {
    let header = Header {
        sequence_id: tl.sequence_id.clone(),
        len: tl.len(),
        dim: tl.dim(),
        has_labels: tl.labels().is_some(),
    };
    let json = serde_json::to_vec(&header).expect("header serializes");
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(json.len() as u64).to_le_bytes());
    out.extend_from_slice(&json);
    let labels = tl.labels().unwrap_or(&[]);
    for v in tl.features().data().iter().chain(labels) {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out.extend(tl.interpolated().iter().map(|&m| u8::from(m)));
    out
}

pub fn decode_timeline(bytes: &[u8]) -> std::result::Result<FeatureTimeline, String> {
    let rest = bytes.strip_prefix(MAGIC.as_slice()).ok_or("not a feature file (bad magic)")?;
    let (json, mut data) = split_header(rest)?;
    let h: Header = serde_json::from_slice(json).map_err(|e| format!("bad header: {e}"))?;
    let n = h.len.checked_mul(h.dim).ok_or("feature size overflow")?;
    let features = take_f64(&mut data, n).ok_or("feature data truncated")?;
    let labels = if h.has_labels {
        Some(take_f64(&mut data, h.len).ok_or("label data truncated")?)
    } else {
        None
    };
    if data.len() != h.len {
        return Err(format!("mask has {} bytes, expected {}", data.len(), h.len));
    }
    let mask = data
        .iter()
        .map(|&b| match b {
            0 => Ok(false),
            1 => Ok(true),
            other => Err(format!("mask byte {other} is not 0 or 1")),
        })
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let features = Tensor::new(vec![h.len, h.dim], features).map_err(|e| e.to_string())?;
    FeatureTimeline::new(h.sequence_id, features, labels, mask).map_err(|e| e.to_string())
}

pub fn timeline_path(dir: &Path, sequence_id: &str) -> PathBuf {
    dir.join(format!("{sequence_id}.{EXTENSION}"))
}

pub fn write_timeline(dir: &Path, tl: &FeatureTimeline) -> Result<PathBuf> {
    let path = timeline_path(dir, &tl.sequence_id);
    fs::write(&path, encode_timeline(tl)).map_err(Error::write(&path))?;
    Ok(path)
}

pub fn read_timeline(path: &Path) -> Result<FeatureTimeline> {
    let bytes = fs::read(path).map_err(Error::read(path))?;
    decode_timeline(&bytes).map_err(|m| Error::parse(path, m))
}

/// Every `.afft` file in `dir`, ordered by file name.
pub fn read_timeline_dir(dir: &Path) -> Result<Vec<FeatureTimeline>> {
    let mut paths = Vec::new();
    for entry in fs::read_dir(dir).map_err(Error::read(dir))? {
        let path = entry.map_err(Error::read(dir))?.path();
        if path.extension().is_some_and(|e| e == EXTENSION) {
            paths.push(path);
        }
    }
    if paths.is_empty() {
        return Err(Error::parse(dir, "no feature files"));
    }
    paths.sort();
    paths.iter().map(|p| read_timeline(p)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(labels: bool) -> FeatureTimeline {
        let f = Tensor::from_fn(&[4, 3], |i| i as f64 * 0.1 - 0.35);
        let l = labels.then(|| vec![0.1, -0.2, 0.3, f64::MIN_POSITIVE]);
        FeatureTimeline::new("s01", f, l, vec![false, true, true, false]).unwrap()
    }

    #[test]
    fn round_trips_bit_exact() {
        for labels in [true, false] {
            let tl = sample(labels);
            let bytes = encode_timeline(&tl);
            assert_eq!(&bytes[..5], b"AFFT1");
            assert_eq!(decode_timeline(&bytes).unwrap(), tl);
        }
    }

    #[test]
    fn header_fields() {
        let bytes = encode_timeline(&sample(true));
        let (json, _) = split_header(&bytes[5..]).unwrap();
        let v: serde_json::Value = serde_json::from_slice(json).unwrap();
        assert_eq!(v["T"], 4);
        assert_eq!(v["dim"], 3);
        assert_eq!(v["has_labels"], true);
        assert_eq!(v["sequence_id"], "s01");
    }

    #[test]
    fn corrupt_files_are_rejected() {
        let bytes = encode_timeline(&sample(true));
        assert!(decode_timeline(&bytes[..bytes.len() - 1]).unwrap_err().contains("mask"));
        let mut bad = bytes.clone();
        *bad.last_mut().unwrap() = 7;
        assert!(decode_timeline(&bad).unwrap_err().contains("mask byte"));
        assert!(decode_timeline(b"AFEN1").is_err());
    }

    #[test]
    fn directory_listing_is_sorted() {
        let dir = tempfile::tempdir().unwrap();
        for id in ["b", "a", "c"] {
            let tl = FeatureTimeline::new(id, Tensor::zeros(&[2, 1]), None, vec![false; 2]).unwrap();
            write_timeline(dir.path(), &tl).unwrap();
        }
        std::fs::write(dir.path().join("notes.txt"), "x").unwrap();
        let ids: Vec<String> = read_timeline_dir(dir.path()).unwrap().into_iter().map(|t| t.sequence_id).collect();
        assert_eq!(ids, ["a", "b", "c"]);
    }
}
