//! Soft-margin dual solved by sequential minimal optimization.
//!
//! The solver minimizes `0.5 a'Qa - e'a` subject to `y'a = 0` and
//! `0 <= a_i <= C`, where `Q_ij = y_i y_j K(x_i, x_j)`. With `F_t = -y_t G_t`
//! (`G` the gradient), the iterate is optimal when
//! `max_{I_up} F <= min_{I_low} F`; training stops once that gap is at most
//! the tolerance, which bounds every KKT residual `y_i f(x_i) - 1` by the
//! tolerance as well.
//!
//! Working pairs are chosen canonically: `i` is the lowest-index member of
//! `I_up` that violates the optimality condition, and `j` is the member of
//! `I_low` forming a violating pair with `i` that gives the largest
//! second-order objective decrease (lowest index on ties).

use serde::Serialize;

use super::kernel::{gram_matrix, rbf_unchecked};
use crate::{Error, Result};

const TAU: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SvmHyperParams {
    pub c: f64,
    pub gamma: f64,
    pub tolerance: f64,
    /// Iteration budget in units of the training-set size.
    pub max_passes: u32,
}

impl Default for SvmHyperParams {
    fn default() -> Self {
        Self { c: 100.0, gamma: 0.1, tolerance: 1e-3, max_passes: 10_000 }
    }
}

impl SvmHyperParams {
    pub fn with(c: f64, gamma: f64) -> Self {
        Self { c, gamma, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::HyperParams(format!("C must be positive, got {}", self.c)));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::HyperParams(format!("gamma must be positive, got {}", self.gamma)));
        }
        if !(self.tolerance > 0.0 && self.tolerance <= 0.1) {
            return Err(Error::HyperParams(format!("tolerance must lie in (0, 0.1], got {}", self.tolerance)));
        }
        if self.max_passes == 0 {
            return Err(Error::HyperParams("max_passes must be positive".into()));
        }
        Ok(())
    }
}

/// Two-class RBF decision function `f(x) = sum_i coef_i K(sv_i, x) + bias`.
/// Positive values vote for the positive class.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BinarySvm {
    pub support_vectors: Vec<Vec<f64>>,
    /// `alpha_i * y_i` for each support vector.
    pub dual_coefs: Vec<f64>,
    pub bias: f64,
    pub hyperparams: SvmHyperParams,
}

impl BinarySvm {
    pub fn new(support_vectors: Vec<Vec<f64>>, dual_coefs: Vec<f64>, bias: f64, hyperparams: SvmHyperParams) -> Result<Self> {
        hyperparams.validate()?;
        if support_vectors.is_empty() || support_vectors.len() != dual_coefs.len() {
            return Err(Error::ModelFormat(format!(
                "{} support vectors with {} coefficients",
                support_vectors.len(),
                dual_coefs.len()
            )));
        }
        let dim = support_vectors[0].len();
        if support_vectors.iter().any(|v| v.len() != dim) {
            return Err(Error::ModelFormat("support vectors of unequal length".into()));
        }
        if dual_coefs.iter().any(|a| !a.is_finite() || a.abs() > hyperparams.c) || !bias.is_finite() {
            return Err(Error::ModelFormat("dual coefficient outside [-C, C]".into()));
        }
        Ok(Self { support_vectors, dual_coefs, bias, hyperparams })
    }

    pub fn dim(&self) -> usize {
        self.support_vectors[0].len()
    }

    pub fn decision(&self, x: &[f64]) -> f64 {
        let gamma = self.hyperparams.gamma;
        self.support_vectors
            .iter()
            .zip(&self.dual_coefs)
            .map(|(sv, a)| a * rbf_unchecked(sv, x, gamma))
            .sum::<f64>()
            + self.bias
    }
}

/// Full solver state at convergence, for inspection and testing.
#[derive(Clone, Debug)]
pub struct BinaryTraining {
    pub model: BinarySvm,
    /// Training points, positives first.
    pub points: Vec<Vec<f64>>,
    /// `+1` / `-1` per training point.
    pub labels: Vec<f64>,
    pub alphas: Vec<f64>,
    pub iterations: usize,
    /// Final `max_{I_up} F - min_{I_low} F`.
    pub gap: f64,
}

impl BinaryTraining {
    /// `sum(a) - 0.5 a'Qa`, the maximized dual objective.
    pub fn objective(&self) -> f64 {
        let k = gram_matrix(&self.points, self.model.hyperparams.gamma);
        dual_objective(&self.alphas, &self.labels, &k)
    }
}

/// `sum(a) - 0.5 sum_ij a_i a_j y_i y_j K_ij` for a row-major kernel matrix.
pub fn dual_objective(alphas: &[f64], labels: &[f64], kernel: &[f64]) -> f64 {
    let n = alphas.len();
    let mut quad = 0.0;
    for i in 0..n {
        for j in 0..n {
            quad += alphas[i] * alphas[j] * labels[i] * labels[j] * kernel[i * n + j];
        }
    }
    alphas.iter().sum::<f64>() - 0.5 * quad
}

pub fn train_binary(pos: &[Vec<f64>], neg: &[Vec<f64>], params: &SvmHyperParams) -> Result<BinarySvm> {
    train_binary_detailed(pos, neg, params).map(|t| t.model)
}

pub fn train_binary_detailed(pos: &[Vec<f64>], neg: &[Vec<f64>], params: &SvmHyperParams) -> Result<BinaryTraining> {
    params.validate()?;
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::Empty("binary SVM class"));
    }
    let dim = pos[0].len();
    if let Some(bad) = pos.iter().chain(neg).find(|p| p.len() != dim) {
        return Err(Error::DimensionMismatch { expected: dim, found: bad.len() });
    }

    let points: Vec<Vec<f64>> = pos.iter().chain(neg).cloned().collect();
    let labels: Vec<f64> = std::iter::repeat_n(1.0, pos.len()).chain(std::iter::repeat_n(-1.0, neg.len())).collect();
    let n = points.len();
    let k = gram_matrix(&points, params.gamma);
    let c = params.c;
    let tol = params.tolerance;

    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let in_up = |a: f64, y: f64| (y > 0.0 && a < c) || (y < 0.0 && a > 0.0);
    let in_low = |a: f64, y: f64| (y > 0.0 && a > 0.0) || (y < 0.0 && a < c);
    let budget = (params.max_passes as usize).saturating_mul(n);

    let mut iterations = 0;
    let gap = loop {
        let f: Vec<f64> = (0..n).map(|t| -labels[t] * grad[t]).collect();
        let mut up_max = f64::NEG_INFINITY;
        let mut low_min = f64::INFINITY;
        for t in 0..n {
            if in_up(alpha[t], labels[t]) {
                up_max = up_max.max(f[t]);
            }
            if in_low(alpha[t], labels[t]) {
                low_min = low_min.min(f[t]);
            }
        }
        let gap = up_max - low_min;
        if gap <= tol {
            break gap;
        }
        if iterations >= budget {
            return Err(Error::NotConverged { iterations, violation: gap });
        }

        let i = (0..n)
            .find(|&t| in_up(alpha[t], labels[t]) && f[t] - low_min > tol)
            .expect("a violating index exists while the gap exceeds the tolerance");
        let mut j = usize::MAX;
        let mut best = f64::NEG_INFINITY;
        for t in 0..n {
            if !in_low(alpha[t], labels[t]) {
                continue;
            }
            let b = f[i] - f[t];
            if b <= tol {
                continue;
            }
            let a = (k[i * n + i] + k[t * n + t] - 2.0 * k[i * n + t]).max(TAU);
            let gain = b * b / a;
            if gain > best {
                best = gain;
                j = t;
            }
        }

        let (yi, yj) = (labels[i], labels[j]);
        let curvature = (k[i * n + i] + k[j * n + j] - 2.0 * k[i * n + j]).max(TAU);
        let step = (f[i] - f[j]) / curvature;
        let room_i = if yi > 0.0 { c - alpha[i] } else { alpha[i] };
        let room_j = if yj > 0.0 { alpha[j] } else { c - alpha[j] };
        let lambda = step.min(room_i).min(room_j);

        let old_i = alpha[i];
        let old_j = alpha[j];
        alpha[i] = if lambda == room_i { if yi > 0.0 { c } else { 0.0 } } else { (old_i + yi * lambda).clamp(0.0, c) };
        alpha[j] = if lambda == room_j { if yj > 0.0 { 0.0 } else { c } } else { (old_j - yj * lambda).clamp(0.0, c) };
        let di = alpha[i] - old_i;
        let dj = alpha[j] - old_j;
        for t in 0..n {
            grad[t] += labels[t] * (yi * k[t * n + i] * di + yj * k[t * n + j] * dj);
        }
        iterations += 1;
    };

    let f: Vec<f64> = (0..n).map(|t| -labels[t] * grad[t]).collect();
    let free: Vec<f64> = (0..n).filter(|&t| alpha[t] > 0.0 && alpha[t] < c).map(|t| f[t]).collect();
    let bias = if free.is_empty() {
        let up = (0..n).filter(|&t| in_up(alpha[t], labels[t])).map(|t| f[t]).fold(f64::NEG_INFINITY, f64::max);
        let low = (0..n).filter(|&t| in_low(alpha[t], labels[t])).map(|t| f[t]).fold(f64::INFINITY, f64::min);
        (up + low) / 2.0
    } else {
        free.iter().sum::<f64>() / free.len() as f64
    };

    let (support_vectors, dual_coefs): (Vec<_>, Vec<_>) = (0..n)
        .filter(|&t| alpha[t] > 0.0)
        .map(|t| (points[t].clone(), alpha[t] * labels[t]))
        .unzip();
    let model = BinarySvm::new(support_vectors, dual_coefs, bias, *params)?;
    Ok(BinaryTraining { model, points, labels, alphas: alpha, iterations, gap })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e1(sign: f64) -> Vec<f64> {
        let mut v = vec![0.0; 63];
        v[0] = sign;
        v
    }

    /// Largest KKT residual, measured on the decision function.
    fn kkt_violation(t: &BinaryTraining) -> f64 {
        let c = t.model.hyperparams.c;
        t.points
            .iter()
            .zip(&t.labels)
            .zip(&t.alphas)
            .map(|((x, y), a)| {
                let m = y * t.model.decision(x);
                if *a == 0.0 {
                    (1.0 - m).max(0.0)
                } else if *a == c {
                    (m - 1.0).max(0.0)
                } else {
                    (m - 1.0).abs()
                }
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn symmetric_two_points() {
        let params = SvmHyperParams::with(100.0, 0.1);
        let t = train_binary_detailed(&[e1(1.0)], &[e1(-1.0)], &params).unwrap();
        assert_eq!(t.model.support_vectors.len(), 2);
        assert!(t.model.decision(&e1(1.0)) > 0.0);
        assert!(t.model.decision(&e1(-1.0)) < 0.0);
        assert!(kkt_violation(&t) <= 1e-3);
        // Closed form: alpha = 1 / (1 - K), K = exp(-0.4).
        let expected = 1.0 / (1.0 - (-0.4f64).exp());
        assert!((t.alphas[0] - expected).abs() < 1e-9);
        assert!(t.model.bias.abs() < 1e-12);
    }

    #[test]
    fn xor_fits_all_points() {
        let pos = vec![vec![0.0, 0.0], vec![1.0, 1.0]];
        let neg = vec![vec![0.0, 1.0], vec![1.0, 0.0]];
        let t = train_binary_detailed(&pos, &neg, &SvmHyperParams::with(100.0, 1.0)).unwrap();
        for p in &pos {
            assert!(t.model.decision(p) > 0.0);
        }
        for p in &neg {
            assert!(t.model.decision(p) < 0.0);
        }
        // Decision by explicit kernel expansion.
        let manual: f64 = t
            .points
            .iter()
            .zip(&t.labels)
            .zip(&t.alphas)
            .map(|((x, y), a)| a * y * rbf_unchecked(x, &pos[0], 1.0))
            .sum::<f64>()
            + t.model.bias;
        assert!((manual - t.model.decision(&pos[0])).abs() < 1e-12);
    }

    #[test]
    fn duals_boxed_on_overlapping_data() {
        let pos: Vec<Vec<f64>> = (0..20).map(|i| vec![(i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()]).collect();
        let neg: Vec<Vec<f64>> = (0..20).map(|i| vec![(i as f64 * 0.29).cos(), (i as f64 * 0.53).sin()]).collect();
        let params = SvmHyperParams::with(1.0, 2.0);
        let t = train_binary_detailed(&pos, &neg, &params).unwrap();
        assert!(t.alphas.iter().all(|&a| (0.0..=1.0).contains(&a)));
        assert!(t.alphas.contains(&1.0));
        assert!(kkt_violation(&t) <= params.tolerance);
        let balance: f64 = t.alphas.iter().zip(&t.labels).map(|(a, y)| a * y).sum();
        assert!(balance.abs() < 1e-9);
    }

    #[test]
    fn empty_class_and_bad_params() {
        let p = SvmHyperParams::default();
        assert!(matches!(train_binary(&[], &[e1(1.0)], &p), Err(Error::Empty(_))));
        assert!(train_binary(&[e1(1.0)], &[e1(-1.0)], &SvmHyperParams { c: 0.0, ..p }).is_err());
        assert!(train_binary(&[e1(1.0)], &[e1(-1.0)], &SvmHyperParams { tolerance: 0.5, ..p }).is_err());
    }

    #[test]
    fn budget_exhaustion_is_reported() {
        let pos: Vec<Vec<f64>> = (0..30).map(|i| vec![(i as f64).sin(), (i as f64 * 1.7).cos()]).collect();
        let neg: Vec<Vec<f64>> = (0..30).map(|i| vec![(i as f64 * 0.9).cos(), (i as f64 * 2.3).sin()]).collect();
        let params = SvmHyperParams { c: 1000.0, gamma: 5.0, tolerance: 1e-6, max_passes: 1 };
        match train_binary(&pos, &neg, &params) {
            Err(Error::NotConverged { violation, iterations }) => {
                assert!(violation > 1e-6);
                assert_eq!(iterations, 60);
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn training_is_deterministic() {
        let pos: Vec<Vec<f64>> = (0..15).map(|i| vec![i as f64 * 0.1, 1.0]).collect();
        let neg: Vec<Vec<f64>> = (0..15).map(|i| vec![i as f64 * 0.1, -0.5]).collect();
        let p = SvmHyperParams::with(10.0, 0.5);
        assert_eq!(train_binary(&pos, &neg, &p).unwrap(), train_binary(&pos, &neg, &p).unwrap());
    }
}
