//! Model files: `AFEN1`, a length-prefixed JSON manifest of named tensors,
//! then the raw little-endian `f64` data in manifest order.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use valence_core::{CnnModel, CnnSpec, ParamSet, RnnModel, RnnSpec, Tensor};

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 5] = b"AFEN1";

#[derive(Debug, Clone, PartialEq)]
pub enum SavedModel {
    Cnn(CnnModel),
    Rnn(RnnModel),
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum Architecture {
    Cnn { spec: CnnSpec },
    Rnn { spec: RnnSpec },
}

#[derive(Serialize, Deserialize)]
struct TensorEntry {
    name: String,
    shape: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct Header {
    #[serde(flatten)]
    architecture: Architecture,
    tensors: Vec<TensorEntry>,
}

pub fn encode_model(model: &SavedModel) -> Vec<u8> {
    let (architecture, params) = match model {
        SavedModel::Cnn(m) => (Architecture::Cnn { spec: m.spec().clone() }, m.params()),
        SavedModel::Rnn(m) => (Architecture::Rnn { spec: m.spec().clone() }, m.params()),
    };
    let header = Header {
        architecture,
        tensors: params
            .iter()
            .map(|(name, t)| TensorEntry { name: name.to_string(), shape: t.shape().to_vec() })
            .collect(),
    };
    let json = serde_json::to_vec(&header).expect("header serializes");
    let mut out = Vec::with_capacity(MAGIC.len() + 8 + json.len() + 8 * params.scalar_count());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(json.len() as u64).to_le_bytes());
    out.extend_from_slice(&json);
    for (_, t) in params.iter() {
        for v in t.data() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub fn decode_model(bytes: &[u8]) -> std::result::Result<SavedModel, String> {
    let rest = bytes.strip_prefix(MAGIC.as_slice()).ok_or("not a model file (bad magic)")?;
    let (json, mut data) = split_header(rest)?;
    let header: Header = serde_json::from_slice(json).map_err(|e| format!("bad header: {e}"))?;
    let mut params = ParamSet::new();
    for entry in header.tensors {
        let n: usize = entry.shape.iter().product();
        let values = take_f64(&mut data, n).ok_or_else(|| format!("data truncated in tensor {}", entry.name))?;
        params.push(entry.name, Tensor::new(entry.shape, values).map_err(|e| e.to_string())?);
    }
    if !data.is_empty() {
        return Err(format!("{} trailing bytes after tensor data", data.len()));
    }
    let model = match header.architecture {
        Architecture::Cnn { spec } => SavedModel::Cnn(CnnModel::from_params(spec, params).map_err(|e| e.to_string())?),
        Architecture::Rnn { spec } => SavedModel::Rnn(RnnModel::from_params(spec, params).map_err(|e| e.to_string())?),
    };
    Ok(model)
}

pub(crate) fn split_header(rest: &[u8]) -> std::result::Result<(&[u8], &[u8]), String> {
    let len_bytes: [u8; 8] = rest.get(..8).ok_or("truncated header length")?.try_into().expect("8 bytes");
    let len = usize::try_from(u64::from_le_bytes(len_bytes)).map_err(|_| "header length overflow")?;
    let json = rest.get(8..8 + len).ok_or("truncated header")?;
    Ok((json, &rest[8 + len..]))
}

pub(crate) fn take_f64(data: &mut &[u8], n: usize) -> Option<Vec<f64>> {
    let bytes = data.get(..n.checked_mul(8)?)?;
    let values = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    *data = &data[n * 8..];
    Some(values)
}

pub fn save_model(path: &Path, model: &SavedModel) -> Result<()> {
    fs::write(path, encode_model(model)).map_err(Error::write(path))
}

pub fn load_model(path: &Path) -> Result<SavedModel> {
    let bytes = fs::read(path).map_err(Error::read(path))?;
    decode_model(&bytes).map_err(|m| Error::parse(path, m))
}

pub fn load_cnn(path: &Path) -> Result<CnnModel> {
    match load_model(path)? {
        SavedModel::Cnn(m) => Ok(m),
        SavedModel::Rnn(_) => Err(Error::parse(path, "expected a CNN model, found an RNN")),
    }
}

pub fn load_rnn(path: &Path) -> Result<RnnModel> {
    match load_model(path)? {
        SavedModel::Rnn(m) => Ok(m),
        SavedModel::Cnn(_) => Err(Error::parse(path, "expected an RNN model, found a CNN")),
    }
}
