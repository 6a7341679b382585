use crate::{Error, Result};

/// `exp(-gamma * |x - y|^2)`.
pub fn rbf_kernel(x: &[f64], y: &[f64], gamma: f64) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch { expected: x.len(), found: y.len() });
    }
    Ok(rbf_unchecked(x, y, gamma))
}

pub(crate) fn rbf_unchecked(x: &[f64], y: &[f64], gamma: f64) -> f64 {
    let d2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
    (-gamma * d2).exp()
}

/// Row-major `n × n` kernel matrix.
pub fn gram_matrix(points: &[Vec<f64>], gamma: f64) -> Vec<f64> {
    let n = points.len();
    let mut k = vec![0.0; n * n];
    for i in 0..n {
        k[i * n + i] = 1.0;
        for j in 0..i {
            let v = rbf_unchecked(&points[i], &points[j], gamma);
            k[i * n + j] = v;
            k[j * n + i] = v;
        }
    }
    k
}
