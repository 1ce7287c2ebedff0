use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Pixel coordinates `(x, y)`; integer values sit on pixel centres.
pub type Point = (f64, f64);

/// 4-DOF similarity `q = [[a, -b], [b, a]] p + t`, i.e. scale
/// `sqrt(a^2 + b^2)`, rotation `atan2(b, a)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Similarity {
    pub a: f64,
    pub b: f64,
    pub tx: f64,
    pub ty: f64,
}

impl Similarity {
    pub const IDENTITY: Similarity = Similarity {
        a: 1.0,
        b: 0.0,
        tx: 0.0,
        ty: 0.0,
    };

    pub fn scale(&self) -> f64 {
        libm::hypot(self.a, self.b)
    }

    /// Rotation angle in radians.
    pub fn rotation(&self) -> f64 {
        libm::atan2(self.b, self.a)
    }

    pub fn apply(&self, p: Point) -> Point {
        (
            self.a * p.0 - self.b * p.1 + self.tx,
            self.b * p.0 + self.a * p.1 + self.ty,
        )
    }

    pub fn apply_inverse(&self, q: Point) -> Point {
        let det = self.a * self.a + self.b * self.b;
        let (dx, dy) = (q.0 - self.tx, q.1 - self.ty);
        ((self.a * dx + self.b * dy) / det, (-self.b * dx + self.a * dy) / det)
    }

    /// Largest Euclidean distance between `apply(src[i])` and `dst[i]`.
    pub fn max_residual(&self, src: &[Point], dst: &[Point]) -> f64 {
        src.iter()
            .zip(dst)
            .map(|(&s, &d)| {
                let q = self.apply(s);
                libm::hypot(q.0 - d.0, q.1 - d.1)
            })
            .fold(0.0, f64::max)
    }
}

/// Canonical landmark positions in the aligned crop, plus its side length.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Template {
    pub eye_l: Point,
    pub eye_r: Point,
    pub nose: Point,
    pub out_size: usize,
}

impl Template {
    pub fn points(&self) -> [Point; 3] {
        [self.eye_l, self.eye_r, self.nose]
    }
}

fn centroid(pts: &[Point]) -> Point {
    let n = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |(x, y), p| (x + p.0, y + p.1));
    (sx / n, sy / n)
}

/// Least-squares similarity mapping `src` onto `dst`.
///
/// Closed form after centring both sets:
/// `a = sum(s . d) / sum|s|^2`, `b = sum(s x d) / sum|s|^2`,
/// `t = mean(dst) - R mean(src)`.
pub fn fit_similarity(src: &[Point], dst: &[Point]) -> Result<Similarity> {
    if src.len() != dst.len() {
        return Err(Error::invalid(format!(
            "{} landmarks vs {} template points",
            src.len(),
            dst.len()
        )));
    }
    if src.len() < 3 {
        return Err(Error::DegenerateLandmarks("need at least 3 correspondences"));
    }
    let cs = centroid(src);
    let cd = centroid(dst);
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    let (mut num_a, mut num_b) = (0.0, 0.0);
    for (&s, &d) in src.iter().zip(dst) {
        let (px, py) = (s.0 - cs.0, s.1 - cs.1);
        let (qx, qy) = (d.0 - cd.0, d.1 - cd.1);
        sxx += px * px;
        syy += py * py;
        sxy += px * py;
        num_a += px * qx + py * qy;
        num_b += px * qy - py * qx;
    }
    let spread = sxx + syy;
    if !(spread > 0.0) || sxx * syy - sxy * sxy <= 1e-12 * spread * spread {
        return Err(Error::DegenerateLandmarks("landmarks are collinear or coincident"));
    }
    let a = num_a / spread;
    let b = num_b / spread;
    if a * a + b * b <= 1e-24 {
        return Err(Error::DegenerateLandmarks("template points collapse to a single point"));
    }
    let tx = cd.0 - (a * cs.0 - b * cs.1);
    let ty = cd.1 - (b * cs.0 + a * cs.1);
    Ok(Similarity { a, b, tx, ty })
}

/// `[C, H, W]` with C = 1 (kept) or C = 3 (luma `0.299 R + 0.587 G + 0.114 B`)
/// to a single `[H, W]` plane.
pub fn to_grayscale(image: &Tensor) -> Result<Vec<f64>> {
    image.expect_ndim("to_grayscale", "image", 3)?;
    let (c, h, w) = (image.shape()[0], image.shape()[1], image.shape()[2]);
    let d = image.data();
    match c {
        1 => Ok(d.to_vec()),
        3 => {
            let n = h * w;
            Ok((0..n)
                .map(|i| 0.299 * d[i] + 0.587 * d[n + i] + 0.114 * d[2 * n + i])
                .collect())
        }
        _ => Err(Error::shape("to_grayscale", format!("expected 1 or 3 channels, got {c}"))),
    }
}

fn bilinear(plane: &[f64], w: usize, h: usize, x: f64, y: f64) -> f64 {
    if !(x >= 0.0 && y >= 0.0 && x <= (w - 1) as f64 && y <= (h - 1) as f64) {
        return 0.0;
    }
    let x0 = libm::floor(x) as usize;
    let y0 = libm::floor(y) as usize;
    let x1 = (x0 + 1).min(w - 1);
    let y1 = (y0 + 1).min(h - 1);
    let fx = x - x0 as f64;
    let fy = y - y0 as f64;
    let top = plane[y0 * w + x0] * (1.0 - fx) + plane[y0 * w + x1] * fx;
    let bottom = plane[y1 * w + x0] * (1.0 - fx) + plane[y1 * w + x1] * fx;
    top * (1.0 - fy) + bottom * fy
}

/// Inverse-maps every output pixel through `transform` (source -> output)
/// and samples the grayscale plane bilinearly. Samples outside the source
/// are 0.
pub fn warp_similarity(plane: &[f64], width: usize, height: usize, transform: &Similarity, out_size: usize) -> Tensor {
    let mut out = Tensor::zeros(&[1, out_size, out_size]);
    let dst = out.data_mut();
    for v in 0..out_size {
        for u in 0..out_size {
            let (x, y) = transform.apply_inverse((u as f64, v as f64));
            dst[v * out_size + u] = bilinear(plane, width, height, x, y);
        }
    }
    out
}

/// Aligns a face so that `landmarks` land on `template_points`, producing an
/// `[1, out_size, out_size]` grayscale crop.
pub fn align_face(
    image: &Tensor,
    landmarks: &[Point],
    template_points: &[Point],
    out_size: usize,
) -> Result<Tensor> {
    if out_size == 0 {
        return Err(Error::invalid("out_size must be positive"));
    }
    let gray = to_grayscale(image)?;
    let transform = fit_similarity(landmarks, template_points)?;
    Ok(warp_similarity(&gray, image.shape()[2], image.shape()[1], &transform, out_size))
}
