//! Experiment orchestration: dataset build, split and training, crop
//! sweeps and β trend data. Stages exchange data through files in the
//! configured output directory.

mod config;
mod dataset;
mod sweep;
mod training;
mod trend;

pub use config::ExperimentConfig;
pub use dataset::{list_corpus, records_for_image, run_dataset_build, source_plane};
pub use sweep::{classify_crops, run_crop_sweep, run_sweep_stage, CropSweepReport, SweepRow};
pub use training::{
    read_split, run_training, run_training_stage, split_by_source, write_split, ConfusionMatrix, Split, TrainingOutcome,
};
pub use trend::{beta_trend, emit_beta_trend, trend_to_csv, TrendPoint};

use std::fs;
use std::path::Path;

use crate::{Error, Result};

pub(crate) fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Runs dataset build, training and every configured crop sweep.
pub fn run_experiment(config: &ExperimentConfig) -> Result<()> {
    run_dataset_build(config)?;
    let outcome = run_training_stage(config)?;
    run_sweep_stage(config, &outcome.model, &outcome.split)?;
    Ok(())
}
