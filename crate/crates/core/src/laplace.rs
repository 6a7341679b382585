//! Maximum-likelihood fit of a Laplacian `f(x) = exp(-|x - mu| / beta) / (2 beta)`.

use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LaplaceFit {
    /// Location (median of the sample).
    pub mu: f64,
    /// Scale (mean absolute deviation from `mu`). Zero for constant samples.
    pub beta: f64,
    pub sample_count: usize,
}

/// Fits location and scale by maximum likelihood.
///
/// The location estimate is the sample median (the mean of the two central
/// order statistics for even counts); the scale is the mean absolute
/// deviation from it. Both are computed on the sorted sample, so the result
/// does not depend on input order.
pub fn fit_laplace(samples: &[f64]) -> Result<LaplaceFit> {
    let mut sorted = samples.to_vec();
    fit_laplace_in_place(&mut sorted)
}

/// [`fit_laplace`] that sorts `samples` in place instead of copying.
pub fn fit_laplace_in_place(samples: &mut [f64]) -> Result<LaplaceFit> {
    if samples.is_empty() {
        return Err(Error::Empty("Laplace sample"));
    }
    if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(i));
    }
    samples.sort_unstable_by(f64::total_cmp);
    let n = samples.len();
    let mu = if n % 2 == 1 {
        samples[n / 2]
    } else {
        (samples[n / 2 - 1] + samples[n / 2]) / 2.0
    };
    let beta = samples.iter().map(|x| (x - mu).abs()).sum::<f64>() / n as f64;
    Ok(LaplaceFit { mu, beta, sample_count: n })
}

/// `sum(-ln(2 beta) - |x - mu| / beta)`.
pub fn laplace_log_likelihood(fit: &LaplaceFit, samples: &[f64]) -> Result<f64> {
    if !(fit.beta > 0.0) || !fit.beta.is_finite() {
        return Err(Error::DegenerateScale(fit.beta));
    }
    if samples.is_empty() {
        return Err(Error::Empty("Laplace sample"));
    }
    let norm = (2.0 * fit.beta).ln();
    Ok(samples.iter().map(|x| -norm - (x - fit.mu).abs() / fit.beta).sum())
}
