use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::multiclass::train_model;
use super::smo::SvmHyperParams;
use crate::features::FeatureTable;
use crate::{Error, Result};

/// Brackets C = 100 by two decades each way.
pub const DEFAULT_C_GRID: [f64; 5] = [0.1, 1.0, 10.0, 100.0, 1000.0];
/// Brackets gamma = 0.1.
pub const DEFAULT_GAMMA_GRID: [f64; 4] = [0.001, 0.01, 0.1, 1.0];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CvCell {
    pub c: f64,
    pub gamma: f64,
    pub correct: usize,
    pub total: usize,
    /// Set when some fold failed to train; the cell is then not eligible.
    pub failure: Option<String>,
}

impl CvCell {
    pub fn accuracy(&self) -> Option<f64> {
        match self.failure {
            None if self.total > 0 => Some(self.correct as f64 / self.total as f64),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CvReport {
    pub folds: usize,
    pub seed: u64,
    /// Ordered by C, then gamma, both ascending.
    pub cells: Vec<CvCell>,
    pub best_c: f64,
    pub best_gamma: f64,
}

impl CvReport {
    pub fn best(&self) -> &CvCell {
        self.cells
            .iter()
            .find(|c| c.c == self.best_c && c.gamma == self.best_gamma)
            .expect("best cell is part of the report")
    }
}

/// Assigns each record to a fold, stratified by label: the records of each
/// class (ascending) are shuffled with a seeded ChaCha8 stream and dealt
/// round-robin.
pub fn stratified_folds(table: &FeatureTable, folds: usize, seed: u64) -> Result<Vec<usize>> {
    if folds < 2 {
        return Err(Error::Precondition(format!("cross-validation needs at least 2 folds, got {folds}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignment = vec![0; table.len()];
    for class in table.classes() {
        let mut idx: Vec<usize> = (0..table.len()).filter(|&i| table.records()[i].label == class).collect();
        if idx.len() < folds {
            return Err(Error::InsufficientFolds { side: class.side(), count: idx.len(), folds });
        }
        idx.shuffle(&mut rng);
        for (pos, i) in idx.into_iter().enumerate() {
            assignment[i] = pos % folds;
        }
    }
    Ok(assignment)
}

fn sorted_grid(values: &[f64], name: &str) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Err(Error::HyperParams(format!("empty {name} grid")));
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v.dedup();
    Ok(v)
}

fn evaluate_cell(table: &FeatureTable, assignment: &[usize], folds: usize, params: SvmHyperParams) -> CvCell {
    let mut correct = 0;
    let mut total = 0;
    for fold in 0..folds {
        let mut i = 0;
        let train = table.filter(|_| {
            i += 1;
            assignment[i - 1] != fold
        });
        let model = match train_model(&train, &params) {
            Ok(m) => m,
            Err(e) => {
                log::warn!("grid cell C={} gamma={} fold {fold}: {e}", params.c, params.gamma);
                return CvCell { c: params.c, gamma: params.gamma, correct, total, failure: Some(e.to_string()) };
            }
        };
        for (r, _) in table.records().iter().zip(assignment).filter(|(_, &f)| f == fold) {
            total += 1;
            if model.predict(&r.features).class == r.label {
                correct += 1;
            }
        }
    }
    CvCell { c: params.c, gamma: params.gamma, correct, total, failure: None }
}

/// Stratified k-fold cross-validation over every `(C, gamma)` combination.
///
/// Returns the most accurate pair; ties go to the smaller C, then the
/// smaller gamma. `base` supplies tolerance and iteration budget.
pub fn grid_search(
    table: &FeatureTable,
    c_grid: &[f64],
    gamma_grid: &[f64],
    folds: usize,
    seed: u64,
    base: &SvmHyperParams,
) -> Result<(SvmHyperParams, CvReport)> {
    let cs = sorted_grid(c_grid, "C")?;
    let gammas = sorted_grid(gamma_grid, "gamma")?;
    for &c in &cs {
        for &g in &gammas {
            SvmHyperParams { c, gamma: g, ..*base }.validate()?;
        }
    }
    let assignment = stratified_folds(table, folds, seed)?;
    let combos: Vec<SvmHyperParams> =
        cs.iter().flat_map(|&c| gammas.iter().map(move |&gamma| SvmHyperParams { c, gamma, ..*base })).collect();
    let cells: Vec<CvCell> = combos.par_iter().map(|&p| evaluate_cell(table, &assignment, folds, p)).collect();

    let mut best: Option<&CvCell> = None;
    for cell in cells.iter().filter(|c| c.failure.is_none()) {
        if best.is_none_or(|b| cell.correct > b.correct) {
            best = Some(cell);
        }
    }
    let best = best.ok_or_else(|| {
        let worst = cells.first().map_or(String::new(), |c| c.failure.clone().unwrap_or_default());
        Error::Precondition(format!("every grid cell failed to train ({worst})"))
    })?;
    let chosen = SvmHyperParams { c: best.c, gamma: best.gamma, ..*base };
    let report = CvReport { folds, seed, best_c: best.c, best_gamma: best.gamma, cells: cells.clone() };
    Ok((chosen, report))
}
