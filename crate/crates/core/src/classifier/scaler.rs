use serde::Serialize;

use crate::features::{BetaVector, FeatureTable, AC_COUNT};
use crate::{Error, Result};

/// Per-dimension z-score transform fitted on training data.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FeatureScaler {
    pub means: Vec<f64>,
    /// Population standard deviations; zero-variance dimensions hold 1.
    pub std_devs: Vec<f64>,
}

impl FeatureScaler {
    pub fn new(means: Vec<f64>, std_devs: Vec<f64>) -> Result<Self> {
        if means.len() != std_devs.len() {
            return Err(Error::DimensionMismatch { expected: means.len(), found: std_devs.len() });
        }
        if std_devs.iter().any(|s| !(*s > 0.0) || !s.is_finite()) || means.iter().any(|m| !m.is_finite()) {
            return Err(Error::ModelFormat("scaler needs finite means and positive deviations".into()));
        }
        Ok(Self { means, std_devs })
    }

    pub fn dim(&self) -> usize {
        self.means.len()
    }

    pub fn transform(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.means).zip(&self.std_devs).map(|((v, m), s)| (v - m) / s).collect()
    }
}

/// Sum in sorted order so the result does not depend on record order.
fn canonical_sum(values: &mut [f64]) -> f64 {
    values.sort_unstable_by(f64::total_cmp);
    values.iter().sum()
}

pub fn fit_scaler(table: &FeatureTable) -> Result<FeatureScaler> {
    if table.is_empty() {
        return Err(Error::Empty("feature table"));
    }
    let n = table.len() as f64;
    let mut means = Vec::with_capacity(AC_COUNT);
    let mut std_devs = Vec::with_capacity(AC_COUNT);
    let mut column = Vec::with_capacity(table.len());
    for d in 0..AC_COUNT {
        column.clear();
        column.extend(table.records().iter().map(|r| r.features.as_slice()[d]));
        let mean = canonical_sum(&mut column) / n;
        let mut sq: Vec<f64> = column.iter().map(|v| (v - mean) * (v - mean)).collect();
        let sd = (canonical_sum(&mut sq) / n).sqrt();
        means.push(mean);
        std_devs.push(if sd > 0.0 && sd.is_finite() { sd } else { 1.0 });
    }
    Ok(FeatureScaler { means, std_devs })
}

pub fn apply_scaler(scaler: &FeatureScaler, v: &BetaVector) -> Vec<f64> {
    scaler.transform(v.as_slice())
}
