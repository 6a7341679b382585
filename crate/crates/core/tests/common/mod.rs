//! Seeded synthetic photographs for tests that need a corpus: dead-leaves
//! scenes (occluding disks with a power-law size distribution), softened by
//! a Gaussian lens blur and overlaid with sensor noise.

#![allow(dead_code)]

pub mod qp;

use dctcrop::imagery::RgbImage;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub struct SceneParams {
    pub width: usize,
    pub height: usize,
    pub min_radius: f64,
    pub max_radius: f64,
    pub shapes: usize,
}

impl SceneParams {
    /// Roughly full coverage for the given size.
    pub fn for_size(width: usize, height: usize) -> Self {
        let max_radius = (width.min(height) as f64 / 3.0).max(8.0);
        let shapes = (width * height / 500).max(50);
        Self { width, height, min_radius: 4.0, max_radius, shapes }
    }
}

/// Inverse-CDF draw from a density proportional to r^-3 on [lo, hi].
fn power_law_radius(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    let (a, b) = (lo.powi(-2), hi.powi(-2));
    (a - rng.random::<f64>() * (a - b)).powf(-0.5)
}

fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil() as isize;
    let mut k: Vec<f64> = (-radius..=radius).map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp()).collect();
    let sum: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= sum);
    k
}

fn blur(data: &[f32], w: usize, h: usize, kernel: &[f64]) -> Vec<f32> {
    let r = (kernel.len() / 2) as isize;
    let mut tmp = vec![0f32; data.len()];
    for y in 0..h {
        for x in 0..w {
            for c in 0..3 {
                let mut acc = 0.0;
                for (k, wgt) in kernel.iter().enumerate() {
                    let xx = (x as isize + k as isize - r).clamp(0, w as isize - 1) as usize;
                    acc += wgt * data[(y * w + xx) * 3 + c] as f64;
                }
                tmp[(y * w + x) * 3 + c] = acc as f32;
            }
        }
    }
    let mut out = vec![0f32; data.len()];
    for y in 0..h {
        for x in 0..w {
            for c in 0..3 {
                let mut acc = 0.0;
                for (k, wgt) in kernel.iter().enumerate() {
                    let yy = (y as isize + k as isize - r).clamp(0, h as isize - 1) as usize;
                    acc += wgt * tmp[(yy * w + x) * 3 + c] as f64;
                }
                out[(y * w + x) * 3 + c] = acc as f32;
            }
        }
    }
    out
}

pub fn synthetic_photo(params: &SceneParams, seed: u64) -> RgbImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (w, h) = (params.width, params.height);
    let base: [f32; 3] = std::array::from_fn(|_| rng.random_range(40.0..200.0));
    let mut data: Vec<f32> = (0..w * h).flat_map(|_| base).collect();

    for _ in 0..params.shapes {
        let r = power_law_radius(&mut rng, params.min_radius, params.max_radius);
        let cx = rng.random_range(-r..w as f64 + r);
        let cy = rng.random_range(-r..h as f64 + r);
        let luma: f32 = rng.random_range(10.0..245.0);
        let color: [f32; 3] = std::array::from_fn(|_| (luma + rng.random_range(-40.0..40.0)).clamp(0.0, 255.0));
        let x0 = (cx - r).floor().max(0.0) as usize;
        let x1 = ((cx + r).ceil().max(0.0) as usize).min(w);
        let y0 = (cy - r).floor().max(0.0) as usize;
        let y1 = ((cy + r).ceil().max(0.0) as usize).min(h);
        for y in y0..y1 {
            let dy = y as f64 + 0.5 - cy;
            for x in x0..x1 {
                let dx = x as f64 + 0.5 - cx;
                if dx * dx + dy * dy <= r * r {
                    data[(y * w + x) * 3..(y * w + x) * 3 + 3].copy_from_slice(&color);
                }
            }
        }
    }

    let sigma = rng.random_range(1.0..1.6);
    let data = blur(&data, w, h, &gaussian_kernel(sigma));
    let noise = Normal::new(0.0, rng.random_range(1.5..3.0)).unwrap();
    let pixels = data
        .chunks_exact(3)
        .map(|p| std::array::from_fn(|c| (p[c] as f64 + noise.sample(&mut rng)).round().clamp(0.0, 255.0) as u8))
        .collect();
    RgbImage::new(w, h, pixels).unwrap()
}

/// Source size for corpus image `index`; every fourth one is landscape so
/// the center crop has work to do.
pub fn corpus_size(index: usize, side: usize) -> (usize, usize) {
    if index % 4 == 3 {
        (side + side / 9, side)
    } else {
        (side, side)
    }
}

pub fn corpus_image(index: usize, side: usize, seed: u64) -> RgbImage {
    let (w, h) = corpus_size(index, side);
    synthetic_photo(&SceneParams::for_size(w, h), seed.wrapping_mul(1_000_003).wrapping_add(index as u64))
}

/// Well separated Gaussian blobs in β space, one per class, `per_class`
/// points each. Centers are drawn from the seed.
pub fn blob_table(classes: &[u32], per_class: usize, seed: u64) -> dctcrop::features::FeatureTable {
    use dctcrop::features::{BetaVector, FeatureRecord, FeatureTable, ResolutionClass, AC_COUNT};
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let unit = Normal::new(0.0, 1.0).unwrap();
    let mut records = Vec::new();
    for &side in classes {
        let center: [f64; AC_COUNT] = std::array::from_fn(|_| rng.random_range(10.0..60.0));
        for i in 0..per_class {
            let b: [f64; AC_COUNT] = std::array::from_fn(|d| (center[d] + unit.sample(&mut rng)).max(0.0));
            records.push(FeatureRecord {
                image_id: format!("blob{side}_{i:03}"),
                label: ResolutionClass::new(side).unwrap(),
                features: BetaVector::new(b).unwrap(),
            });
        }
    }
    FeatureTable::from_records(records).unwrap()
}

/// Scaled points of each class, ascending by class, in table order.
pub fn scaled_groups(table: &dctcrop::features::FeatureTable, scaler: &dctcrop::classifier::FeatureScaler) -> Vec<Vec<Vec<f64>>> {
    let classes = table.classes();
    let mut groups = vec![Vec::new(); classes.len()];
    for r in table.records() {
        let i = classes.binary_search(&r.label).unwrap();
        groups[i].push(dctcrop::classifier::apply_scaler(scaler, &r.features));
    }
    groups
}

/// Largest KKT residual beyond the tolerance (0 or less when all hold), and
/// whether every dual lies in `[0, C]`.
pub fn kkt_report(t: &dctcrop::classifier::BinaryTraining) -> (f64, bool) {
    let c = t.model.hyperparams.c;
    let tol = t.model.hyperparams.tolerance;
    let mut worst = f64::NEG_INFINITY;
    let mut boxed = true;
    for ((x, &y), &a) in t.points.iter().zip(&t.labels).zip(&t.alphas) {
        boxed &= (0.0..=c).contains(&a);
        let m = y * t.model.decision(x);
        let excess = if a == 0.0 {
            (1.0 - tol) - m
        } else if a == c {
            m - (1.0 + tol)
        } else {
            (m - 1.0).abs() - tol
        };
        worst = worst.max(excess);
    }
    (worst, boxed)
}
