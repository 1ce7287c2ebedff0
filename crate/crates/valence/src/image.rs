//! Binary netpbm images: 8-bit grayscale `P5` and RGB `P6`.

use std::fs;
use std::path::Path;

use valence_core::Tensor;

use crate::error::{Error, Result};

/// Decodes a `P5`/`P6` file into a `[C, H, W]` tensor with samples scaled to
/// `[0, 1]` by the header's maxval.
pub fn read_pnm(path: &Path) -> Result<Tensor> {
    let bytes = fs::read(path).map_err(Error::read(path))?;
    decode_pnm(&bytes).map_err(|m| Error::parse(path, m))
}

pub fn decode_pnm(bytes: &[u8]) -> std::result::Result<Tensor, String> {
    let mut pos = 0;
    let magic = header_token(bytes, &mut pos)?;
    let channels = match magic.as_str() {
        "P5" => 1,
        "P6" => 3,
        other => return Err(format!("unsupported netpbm magic {other:?}, expected P5 or P6")),
    };
    let width = header_number(bytes, &mut pos, "width")?;
    let height = header_number(bytes, &mut pos, "height")?;
    let maxval = header_number(bytes, &mut pos, "maxval")?;
    if width == 0 || height == 0 {
        return Err(format!("empty image {width}x{height}"));
    }
    if !(1..=255).contains(&maxval) {
        return Err(format!("maxval {maxval} is not an 8-bit depth"));
    }
    // Exactly one whitespace byte separates the header from the raster.
    if !bytes.get(pos).is_some_and(u8::is_ascii_whitespace) {
        return Err("missing whitespace after maxval".into());
    }
    pos += 1;
    let n = channels * width * height;
    let raster = bytes
        .get(pos..pos + n)
        .ok_or_else(|| format!("raster truncated: need {n} bytes, have {}", bytes.len() - pos))?;
    let maxval = maxval as f64;
    // netpbm stores interleaved pixels; the tensor is channel-major.
    let data = (0..n)
        .map(|i| {
            let (c, rest) = (i / (width * height), i % (width * height));
            raster[rest * channels + c] as f64 / maxval
        })
        .collect();
    Tensor::new(vec![channels, height, width], data).map_err(|e| e.to_string())
}

fn header_token(bytes: &[u8], pos: &mut usize) -> std::result::Result<String, String> {
    loop {
        match bytes.get(*pos) {
            Some(b) if b.is_ascii_whitespace() => *pos += 1,
            Some(b'#') => {
                while bytes.get(*pos).is_some_and(|&b| b != b'\n') {
                    *pos += 1;
                }
            }
            Some(_) => break,
            None => return Err("truncated header".into()),
        }
    }
    let start = *pos;
    while bytes.get(*pos).is_some_and(|b| !b.is_ascii_whitespace()) {
        *pos += 1;
    }
    Ok(String::from_utf8_lossy(&bytes[start..*pos]).into_owned())
}

fn header_number(bytes: &[u8], pos: &mut usize, what: &str) -> std::result::Result<usize, String> {
    let tok = header_token(bytes, pos)?;
    tok.parse().map_err(|_| format!("bad {what} {tok:?}"))
}

/// Encodes a `[1, H, W]` or `[3, H, W]` tensor with samples in `[0, 1]` as
/// `P5`/`P6` with maxval 255. Values are clamped and rounded.
pub fn encode_pnm(image: &Tensor) -> Result<Vec<u8>> {
    let shape = image.shape();
    let (channels, height, width) = match *shape {
        [c @ (1 | 3), h, w] => (c, h, w),
        _ => return Err(Error::Config(format!("cannot encode tensor of shape {shape:?} as netpbm"))),
    };
    let magic = if channels == 1 { "P5" } else { "P6" };
    let mut out = format!("{magic}\n{width} {height}\n255\n").into_bytes();
    let plane = width * height;
    for p in 0..plane {
        for c in 0..channels {
            let v = image.data()[c * plane + p].clamp(0.0, 1.0);
            out.push((v * 255.0).round() as u8);
        }
    }
    Ok(out)
}

pub fn write_pnm(path: &Path, image: &Tensor) -> Result<()> {
    fs::write(path, encode_pnm(image)?).map_err(Error::write(path))
}
