use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::classifier::{SvmHyperParams, DEFAULT_C_GRID, DEFAULT_GAMMA_GRID};
use crate::features::ResolutionClass;
use crate::{Error, Result};

/// Experiment settings, loadable from a TOML file whose keys mirror the
/// field names. Missing keys take the defaults below.
#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub corpus_dir: PathBuf,
    /// Where features, model and reports are written.
    pub output_dir: PathBuf,
    pub ladder_sides: Vec<usize>,
    /// Fraction of source images held out for testing.
    pub split_fraction: f64,
    pub crop_sizes: Vec<usize>,
    /// Source resolutions for the crop sweeps; each uses the crop sizes not
    /// larger than itself.
    pub sweep_sources: Vec<usize>,
    /// Cap on held-out images per sweep.
    pub max_sweep_images: usize,
    pub seed: u64,
    pub c_grid: Vec<f64>,
    pub gamma_grid: Vec<f64>,
    pub folds: usize,
    pub tolerance: f64,
    pub max_passes: u32,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            corpus_dir: PathBuf::from("corpus"),
            output_dir: PathBuf::from("out"),
            ladder_sides: ResolutionClass::SIDES.iter().map(|&s| s as usize).collect(),
            split_fraction: 0.2,
            crop_sizes: vec![1536, 1024, 750, 512, 350, 256, 128],
            sweep_sources: vec![2048, 1024],
            max_sweep_images: 200,
            seed: 0,
            c_grid: DEFAULT_C_GRID.to_vec(),
            gamma_grid: DEFAULT_GAMMA_GRID.to_vec(),
            folds: 5,
            tolerance: 1e-3,
            max_passes: 10_000,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.ladder_sides.is_empty() {
            return Err(Error::Config("ladder_sides is empty".into()));
        }
        for &s in &self.ladder_sides {
            ResolutionClass::new(s as u32).map_err(|e| Error::Config(format!("ladder_sides: {e}")))?;
        }
        if !(self.split_fraction > 0.0 && self.split_fraction < 1.0) {
            return Err(Error::Config(format!("split_fraction {} outside (0, 1)", self.split_fraction)));
        }
        if self.folds < 2 {
            return Err(Error::Config(format!("folds must be at least 2, got {}", self.folds)));
        }
        if self.crop_sizes.iter().chain(&self.sweep_sources).any(|&s| s < 16) {
            return Err(Error::Config("crop and sweep sizes must be at least 16".into()));
        }
        self.base_params().validate().map_err(|e| Error::Config(e.to_string()))?;
        for &c in &self.c_grid {
            SvmHyperParams { c, ..self.base_params() }.validate().map_err(|e| Error::Config(e.to_string()))?;
        }
        for &gamma in &self.gamma_grid {
            SvmHyperParams { gamma, ..self.base_params() }.validate().map_err(|e| Error::Config(e.to_string()))?;
        }
        Ok(())
    }

    /// Tolerance and iteration budget; C and gamma come from the grid.
    pub fn base_params(&self) -> SvmHyperParams {
        SvmHyperParams { tolerance: self.tolerance, max_passes: self.max_passes, ..SvmHyperParams::default() }
    }

    pub fn max_ladder_side(&self) -> usize {
        self.ladder_sides.iter().copied().max().unwrap_or(0)
    }

    pub fn features_path(&self) -> PathBuf {
        self.output_dir.join("features.csv")
    }

    pub fn model_path(&self) -> PathBuf {
        self.output_dir.join("model.csvm")
    }

    pub fn split_path(&self) -> PathBuf {
        self.output_dir.join("split.csv")
    }
}
