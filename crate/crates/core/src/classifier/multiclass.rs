use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use super::grid::CvReport;
use super::scaler::{apply_scaler, fit_scaler, FeatureScaler};
use super::smo::{train_binary, BinarySvm, SvmHyperParams};
use crate::features::{BetaVector, FeatureTable, ResolutionClass};
use crate::{Error, Result};

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ModelMetadata {
    /// Unix seconds; the harness takes it from `SOURCE_DATE_EPOCH` so
    /// rebuilt models stay byte-identical.
    pub trained_at: u64,
    pub seed: u64,
    pub grid: Option<CvReport>,
}

/// One-vs-one ensemble. `binaries` follows the pair order
/// `(0,1), (0,2), …, (k-2,k-1)` over `classes`; the first class of each pair
/// is the positive side.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SvmModel {
    pub classes: Vec<ResolutionClass>,
    pub scaler: FeatureScaler,
    pub binaries: Vec<BinarySvm>,
    pub metadata: ModelMetadata,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Prediction {
    pub class: ResolutionClass,
    pub votes: BTreeMap<ResolutionClass, usize>,
    /// Sum of `|decision|` over the pairwise contests each class won.
    pub confidence: BTreeMap<ResolutionClass, f64>,
    pub decision_values: Vec<f64>,
}

pub(crate) fn class_pairs(k: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..k).flat_map(move |a| (a + 1..k).map(move |b| (a, b)))
}

impl SvmModel {
    pub fn new(classes: Vec<ResolutionClass>, scaler: FeatureScaler, binaries: Vec<BinarySvm>, metadata: ModelMetadata) -> Result<Self> {
        if classes.len() < 2 {
            return Err(Error::ModelFormat(format!("{} classes, need at least 2", classes.len())));
        }
        if classes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::ModelFormat("classes must be strictly ascending".into()));
        }
        let expected = classes.len() * (classes.len() - 1) / 2;
        if binaries.len() != expected {
            return Err(Error::ModelFormat(format!("{} binaries for {} classes, expected {expected}", binaries.len(), classes.len())));
        }
        if binaries.iter().any(|b| b.dim() != scaler.dim()) {
            return Err(Error::ModelFormat("binary dimension differs from scaler".into()));
        }
        Ok(Self { classes, scaler, binaries, metadata })
    }

    /// Votes on an already standardized vector.
    pub fn predict_scaled(&self, x: &[f64]) -> Prediction {
        let mut votes: BTreeMap<ResolutionClass, usize> = self.classes.iter().map(|&c| (c, 0)).collect();
        let mut confidence: BTreeMap<ResolutionClass, f64> = self.classes.iter().map(|&c| (c, 0.0)).collect();
        let mut decision_values = Vec::with_capacity(self.binaries.len());
        for ((a, b), svm) in class_pairs(self.classes.len()).zip(&self.binaries) {
            let d = svm.decision(x);
            let winner = if d > 0.0 { self.classes[a] } else { self.classes[b] };
            *votes.get_mut(&winner).expect("known class") += 1;
            *confidence.get_mut(&winner).expect("known class") += d.abs();
            decision_values.push(d);
        }
        // Most votes, then highest confidence, then the smaller side.
        let class = *self
            .classes
            .iter()
            .max_by(|x, y| {
                votes[x]
                    .cmp(&votes[y])
                    .then(confidence[x].total_cmp(&confidence[y]))
                    .then(y.cmp(x))
            })
            .expect("at least two classes");
        Prediction { class, votes, confidence, decision_values }
    }

    pub fn predict(&self, v: &BetaVector) -> Prediction {
        self.predict_scaled(&apply_scaler(&self.scaler, v))
    }
}

pub fn predict_multiclass(model: &SvmModel, v: &BetaVector) -> ResolutionClass {
    model.predict(v).class
}

/// Fits the scaler and one binary SVM per class pair on `table`.
///
/// Points of each class are put in a canonical order (lexicographic on the
/// standardized features) before training, so the model does not depend on
/// record order or image ids.
pub fn train_model(table: &FeatureTable, params: &SvmHyperParams) -> Result<SvmModel> {
    params.validate()?;
    let classes = table.classes();
    if classes.len() < 2 {
        return Err(Error::Precondition(format!("training needs at least two classes, table has {}", classes.len())));
    }
    let scaler = fit_scaler(table)?;
    let mut grouped: Vec<Vec<Vec<f64>>> = vec![Vec::new(); classes.len()];
    for r in table.records() {
        let idx = classes.binary_search(&r.label).expect("label listed in classes");
        grouped[idx].push(apply_scaler(&scaler, &r.features));
    }
    for group in &mut grouped {
        group.sort_by(|a, b| {
            a.iter().zip(b).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal)
        });
    }
    let pairs: Vec<(usize, usize)> = class_pairs(classes.len()).collect();
    let binaries = pairs
        .par_iter()
        .map(|&(a, b)| train_binary(&grouped[a], &grouped[b], params))
        .collect::<Result<Vec<_>>>()?;
    SvmModel::new(classes, scaler, binaries, ModelMetadata::default())
}
