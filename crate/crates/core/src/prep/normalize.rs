use crate::tensor::Tensor;

const STD_FLOOR: f64 = 1e-6;

/// Per-image mean subtraction and contrast normalization: `(x - mean) /
/// max(std, 1e-6)` with the population (divide-by-n) standard deviation.
/// A constant image maps to all zeros.
pub fn normalize(image: &Tensor) -> Tensor {
    let n = image.len() as f64;
    let mean = image.data().iter().sum::<f64>() / n;
    let var = image.data().iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let denom = libm::sqrt(var).max(STD_FLOOR);
    let mut out = image.clone();
    for v in out.data_mut() {
        *v = (*v - mean) / denom;
    }
    out
}
