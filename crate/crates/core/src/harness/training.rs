use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::config::ExperimentConfig;
use super::write_text;
use crate::classifier::{grid_search, save_model, train_model, CvReport, ModelMetadata, SvmModel};
use crate::features::{read_feature_table, FeatureTable, ResolutionClass};
use crate::{Error, Result};

/// Source images on each side of the train/test split, sorted.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<String>,
    pub test: Vec<String>,
}

/// Shuffles the distinct source ids with a seeded ChaCha8 stream and holds
/// out `round(n * fraction)` of them (at least one on each side), so all
/// rungs of an image land in the same partition.
pub fn split_by_source(table: &FeatureTable, fraction: f64, seed: u64) -> Result<Split> {
    let sources: BTreeSet<&str> = table.records().iter().map(|r| r.source_id()).collect();
    let n = sources.len();
    if n < 2 {
        return Err(Error::Precondition(format!("a train/test split needs at least 2 source images, found {n}")));
    }
    let mut ids: Vec<String> = sources.into_iter().map(String::from).collect();
    ids.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_test = ((n as f64 * fraction).round() as usize).clamp(1, n - 1);
    let mut test = ids.split_off(n - n_test);
    ids.sort();
    test.sort();
    Ok(Split { train: ids, test })
}

pub fn write_split(split: &Split, path: &Path) -> Result<()> {
    let mut rows: Vec<(&str, &str)> = split.train.iter().map(|s| (s.as_str(), "train")).collect();
    rows.extend(split.test.iter().map(|s| (s.as_str(), "test")));
    rows.sort();
    let mut out = String::from("source_id,partition\n");
    for (id, part) in rows {
        let _ = writeln!(out, "{id},{part}");
    }
    write_text(path, &out)
}

pub fn read_split(path: &Path) -> Result<Split> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines();
    if lines.next() != Some("source_id,partition") {
        return Err(Error::Schema { line: 1, msg: "expected header source_id,partition".into() });
    }
    let mut split = Split { train: Vec::new(), test: Vec::new() };
    for (i, line) in lines.enumerate().filter(|(_, l)| !l.is_empty()) {
        match line.rsplit_once(',') {
            Some((id, "train")) => split.train.push(id.to_string()),
            Some((id, "test")) => split.test.push(id.to_string()),
            _ => return Err(Error::Schema { line: i + 2, msg: format!("bad split row {line:?}") }),
        }
    }
    split.train.sort();
    split.test.sort();
    Ok(split)
}

/// Rows are true classes, columns predicted classes.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ConfusionMatrix {
    /// Ascending.
    pub classes: Vec<ResolutionClass>,
    pub counts: Vec<Vec<usize>>,
}

impl ConfusionMatrix {
    pub fn from_pairs(classes: &[ResolutionClass], pairs: &[(ResolutionClass, ResolutionClass)]) -> Result<Self> {
        let mut classes = classes.to_vec();
        classes.sort();
        classes.dedup();
        let mut counts = vec![vec![0; classes.len()]; classes.len()];
        for (real, predicted) in pairs {
            let r = classes.binary_search(real).map_err(|_| Error::UnknownClass { side: real.side() })?;
            let p = classes.binary_search(predicted).map_err(|_| Error::UnknownClass { side: predicted.side() })?;
            counts[r][p] += 1;
        }
        Ok(Self { classes, counts })
    }

    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    pub fn row_total(&self, class: ResolutionClass) -> usize {
        self.index(class).map_or(0, |i| self.counts[i].iter().sum())
    }

    fn index(&self, class: ResolutionClass) -> Option<usize> {
        self.classes.binary_search(&class).ok()
    }

    /// Trace over total.
    pub fn accuracy(&self) -> f64 {
        let trace: usize = (0..self.classes.len()).map(|i| self.counts[i][i]).sum();
        trace as f64 / self.total().max(1) as f64
    }

    /// Diagonal entry of a row as a fraction of the row.
    pub fn recall(&self, class: ResolutionClass) -> Option<f64> {
        let i = self.index(class)?;
        let row: usize = self.counts[i].iter().sum();
        (row > 0).then(|| self.counts[i][i] as f64 / row as f64)
    }

    /// Notes worth flagging next to the table. Currently: the smallest class
    /// being recognized better than the next one up, which breaks the
    /// expected ordering of accuracy by resolution.
    pub fn annotations(&self) -> Vec<String> {
        let mut notes = Vec::new();
        if let [smallest, next, ..] = self.classes[..] {
            if let (Some(a), Some(b)) = (self.recall(smallest), self.recall(next)) {
                if a > b {
                    notes.push(format!(
                        "anomaly: {smallest}x{smallest} accuracy ({:.2}%) exceeds {next}x{next} ({:.2}%)",
                        a * 100.0,
                        b * 100.0
                    ));
                }
            }
        }
        notes
    }

    /// Counts, largest class first.
    pub fn to_csv(&self) -> String {
        let order: Vec<usize> = (0..self.classes.len()).rev().collect();
        let mut out = String::from("real\\predicted");
        for &j in &order {
            let _ = write!(out, ",{}", self.classes[j]);
        }
        out.push('\n');
        for &i in &order {
            let _ = write!(out, "{}", self.classes[i]);
            for &j in &order {
                let _ = write!(out, ",{}", self.counts[i][j]);
            }
            out.push('\n');
        }
        out
    }

    /// Row percentages, largest class first.
    pub fn render_text(&self) -> String {
        let order: Vec<usize> = (0..self.classes.len()).rev().collect();
        let mut out = format!("{:>14}", "real \\ pred");
        for &j in &order {
            let _ = write!(out, "{:>11}", self.classes[j].to_string());
        }
        out.push('\n');
        for &i in &order {
            let row: usize = self.counts[i].iter().sum();
            let _ = write!(out, "{:>14}", format!("{0}x{0}", self.classes[i]));
            for &j in &order {
                let pct = if row == 0 { 0.0 } else { 100.0 * self.counts[i][j] as f64 / row as f64 };
                let _ = write!(out, "{:>10.2}%", pct);
            }
            out.push('\n');
        }
        let _ = writeln!(out, "overall accuracy: {:.2}% ({} test records)", self.accuracy() * 100.0, self.total());
        for note in self.annotations() {
            let _ = writeln!(out, "{note}");
        }
        out
    }
}

#[derive(Clone, Debug)]
pub struct TrainingOutcome {
    pub model: SvmModel,
    pub confusion: ConfusionMatrix,
    pub split: Split,
}

/// `SOURCE_DATE_EPOCH` when set, otherwise 0.
fn build_timestamp() -> u64 {
    std::env::var("SOURCE_DATE_EPOCH").ok().and_then(|v| v.trim().parse().ok()).unwrap_or(0)
}

/// Splits by source image, grid-searches on the training part, refits on
/// all of it and scores the held-out part.
pub fn run_training(table: &FeatureTable, config: &ExperimentConfig) -> Result<TrainingOutcome> {
    config.validate()?;
    let split = split_by_source(table, config.split_fraction, config.seed)?;
    let test_ids: BTreeSet<&str> = split.test.iter().map(String::as_str).collect();
    let train = table.filter(|r| !test_ids.contains(r.source_id()));
    let test = table.filter(|r| test_ids.contains(r.source_id()));
    let classes = table.classes();
    for &class in &classes {
        if train.count_of(class) == 0 || test.count_of(class) == 0 {
            return Err(Error::Precondition(format!(
                "class {class} is missing from the {} partition",
                if train.count_of(class) == 0 { "training" } else { "test" }
            )));
        }
    }

    let (params, report): (_, CvReport) =
        grid_search(&train, &config.c_grid, &config.gamma_grid, config.folds, config.seed, &config.base_params())?;
    log::info!(
        "grid search picked C={} gamma={} (CV accuracy {:.4})",
        params.c,
        params.gamma,
        report.best().accuracy().unwrap_or(0.0)
    );
    let mut model = train_model(&train, &params)?;
    model.metadata = ModelMetadata { trained_at: build_timestamp(), seed: config.seed, grid: Some(report) };

    let pairs: Vec<_> = test.records().iter().map(|r| (r.label, model.predict(&r.features).class)).collect();
    let confusion = ConfusionMatrix::from_pairs(&classes, &pairs)?;
    Ok(TrainingOutcome { model, confusion, split })
}

fn cv_to_csv(report: &CvReport) -> String {
    let mut out = String::from("c,gamma,correct,total,accuracy,failure\n");
    for cell in &report.cells {
        let acc = cell.accuracy().map_or(String::new(), |a| format!("{a:.6}"));
        let failure = cell.failure.as_deref().unwrap_or("").replace([',', '\n'], ";");
        let _ = writeln!(out, "{},{},{},{},{acc},{failure}", cell.c, cell.gamma, cell.correct, cell.total);
    }
    out
}

/// Reads `features.csv`, trains, and writes the model, split, confusion
/// matrix and cross-validation table to the output directory.
pub fn run_training_stage(config: &ExperimentConfig) -> Result<TrainingOutcome> {
    let table = read_feature_table(&config.features_path())?;
    let outcome = run_training(&table, config)?;
    let out = &config.output_dir;
    save_model(&outcome.model, &config.model_path())?;
    write_split(&outcome.split, &config.split_path())?;
    write_text(&out.join("confusion.csv"), &outcome.confusion.to_csv())?;
    write_text(&out.join("confusion.txt"), &outcome.confusion.render_text())?;
    if let Some(report) = &outcome.model.metadata.grid {
        write_text(&out.join("cv.csv"), &cv_to_csv(report))?;
    }
    Ok(outcome)
}
