//! Slow reference solver for the soft-margin SVM dual, used as an oracle.
//! Accelerated projected gradient on `max sum(a) - 0.5 a'Qa` over
//! `0 <= a <= C, y'a = 0`, with the projection found by bisection.

#![allow(dead_code)]

pub fn rbf_gram(points: &[Vec<f64>], gamma: f64) -> Vec<f64> {
    let n = points.len();
    let mut k = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let d2: f64 = points[i].iter().zip(&points[j]).map(|(a, b)| (a - b).powi(2)).sum();
            k[i * n + j] = (-gamma * d2).exp();
        }
    }
    k
}

fn q_times(q: &[f64], a: &[f64]) -> Vec<f64> {
    let n = a.len();
    (0..n).map(|i| (0..n).map(|j| q[i * n + j] * a[j]).sum()).collect()
}

pub fn objective(q: &[f64], a: &[f64]) -> f64 {
    let qa = q_times(q, a);
    a.iter().sum::<f64>() - 0.5 * a.iter().zip(&qa).map(|(x, y)| x * y).sum::<f64>()
}

/// Euclidean projection onto the box intersected with `y'a = 0`.
fn project(v: &[f64], y: &[f64], c: f64) -> Vec<f64> {
    let at = |lambda: f64| -> Vec<f64> { v.iter().zip(y).map(|(vi, yi)| (vi - lambda * yi).clamp(0.0, c)).collect() };
    let balance = |a: &[f64]| -> f64 { a.iter().zip(y).map(|(ai, yi)| ai * yi).sum() };
    let span = v.iter().map(|x| x.abs()).fold(0.0, f64::max) + c + 1.0;
    let (mut lo, mut hi) = (-span, span);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if balance(&at(mid)) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    at(0.5 * (lo + hi))
}

fn largest_eigenvalue(q: &[f64], n: usize) -> f64 {
    let mut v = vec![1.0 / (n as f64).sqrt(); n];
    let mut lambda = 1.0;
    for _ in 0..500 {
        let w = q_times(q, &v);
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 1.0;
        }
        lambda = norm;
        v = w.into_iter().map(|x| x / norm).collect();
    }
    lambda
}

/// Returns the maximizing duals and the objective value.
pub fn solve_dual(points: &[Vec<f64>], labels: &[f64], c: f64, gamma: f64, iterations: usize) -> (Vec<f64>, f64) {
    let n = points.len();
    let k = rbf_gram(points, gamma);
    let q: Vec<f64> = (0..n * n).map(|t| labels[t / n] * labels[t % n] * k[t]).collect();
    let step = 1.0 / (1.05 * largest_eigenvalue(&q, n));
    let mut a = vec![0.0; n];
    let mut z = a.clone();
    let mut t = 1.0f64;
    for _ in 0..iterations {
        let qz = q_times(&q, &z);
        let moved: Vec<f64> = z.iter().zip(&qz).map(|(zi, g)| zi + step * (1.0 - g)).collect();
        let next = project(&moved, labels, c);
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        z = next.iter().zip(&a).map(|(x, xo)| x + (t - 1.0) / t_next * (x - xo)).collect();
        // Restart the momentum when it stops helping.
        if objective(&q, &next) < objective(&q, &a) {
            z = next.clone();
            t = 1.0;
        } else {
            t = t_next;
        }
        a = next;
    }
    let obj = objective(&q, &a);
    (a, obj)
}
