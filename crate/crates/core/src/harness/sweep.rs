use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use super::config::ExperimentConfig;
use super::dataset::source_plane;
use super::training::Split;
use super::write_text;
use crate::classifier::SvmModel;
use crate::detector::{classify_resolution, is_cropped};
use crate::features::ResolutionClass;
use crate::imagery::{aligned_crop, load_image, CropSpec, LuminancePlane};
use crate::{Error, Result};

/// Predictions for one crop size across all sweep images.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub crop_size: usize,
    pub counts: BTreeMap<ResolutionClass, usize>,
}

impl SweepRow {
    pub fn total(&self) -> usize {
        self.counts.values().sum()
    }

    pub fn percentage(&self, class: ResolutionClass) -> f64 {
        let total = self.total();
        if total == 0 {
            return 0.0;
        }
        100.0 * self.counts.get(&class).copied().unwrap_or(0) as f64 / total as f64
    }

    /// Share of crops predicted as a class strictly larger than the crop, in
    /// percent. Equals the sum of the matching entries of the percentage row.
    pub fn detection_rate(&self) -> f64 {
        self.counts.keys().filter(|c| is_cropped(**c, self.crop_size)).map(|&c| self.percentage(c)).sum()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CropSweepReport {
    pub source_side: usize,
    pub classes: Vec<ResolutionClass>,
    /// Largest crop first.
    pub rows: Vec<SweepRow>,
}

impl CropSweepReport {
    /// Tabulates `(crop_size, predicted)` pairs.
    pub fn from_predictions(
        source_side: usize,
        classes: &[ResolutionClass],
        crop_sizes: &[usize],
        predictions: &[(usize, ResolutionClass)],
    ) -> Result<Self> {
        let mut classes = classes.to_vec();
        classes.sort();
        classes.dedup();
        let mut sizes = crop_sizes.to_vec();
        sizes.sort_unstable_by(|a, b| b.cmp(a));
        sizes.dedup();
        let mut rows: Vec<SweepRow> = sizes
            .iter()
            .map(|&crop_size| SweepRow { crop_size, counts: classes.iter().map(|&c| (c, 0)).collect() })
            .collect();
        for &(size, class) in predictions {
            let row = rows
                .iter_mut()
                .find(|r| r.crop_size == size)
                .ok_or_else(|| Error::Precondition(format!("prediction for unlisted crop size {size}")))?;
            *row.counts.get_mut(&class).ok_or(Error::UnknownClass { side: class.side() })? += 1;
        }
        Ok(Self { source_side, classes, rows })
    }

    pub fn detection_rate(&self, crop_size: usize) -> Option<f64> {
        self.rows.iter().find(|r| r.crop_size == crop_size).map(SweepRow::detection_rate)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("source_side,crop_size,images");
        for c in self.classes.iter().rev() {
            let _ = write!(out, ",pct_{c}");
        }
        out.push_str(",detection_rate\n");
        for row in &self.rows {
            let _ = write!(out, "{},{},{}", self.source_side, row.crop_size, row.total());
            for &c in self.classes.iter().rev() {
                let _ = write!(out, ",{:.4}", row.percentage(c));
            }
            let _ = writeln!(out, ",{:.4}", row.detection_rate());
        }
        out
    }

    pub fn render_text(&self) -> String {
        let mut out = format!("crops of {0}x{0} sources\n", self.source_side);
        let _ = write!(out, "{:>12}", "crop");
        for c in self.classes.iter().rev() {
            let _ = write!(out, "{:>10}", c.to_string());
        }
        let _ = writeln!(out, "{:>12}", "detected");
        for row in &self.rows {
            let _ = write!(out, "{:>12}", format!("{0}x{0}", row.crop_size));
            for &c in self.classes.iter().rev() {
                let _ = write!(out, "{:>9.2}%", row.percentage(c));
            }
            let _ = writeln!(out, "{:>11.2}%", row.detection_rate());
        }
        out
    }
}

/// Classifies the grid-aligned central crop of `plane` at each size.
pub fn classify_crops(
    model: &SvmModel,
    plane: &LuminancePlane,
    crop_sizes: &[usize],
) -> Result<Vec<(usize, ResolutionClass)>> {
    crop_sizes
        .iter()
        .map(|&size| {
            let spec = CropSpec::centered_aligned(plane.width(), plane.height(), size)?;
            Ok((size, classify_resolution(model, &aligned_crop(plane, spec)?)?))
        })
        .collect()
}

fn check_sizes(source_side: usize, crop_sizes: &[usize]) -> Result<()> {
    match crop_sizes.iter().find(|&&s| s > source_side) {
        Some(s) => Err(Error::Precondition(format!("crop size {s} exceeds source side {source_side}"))),
        None => Ok(()),
    }
}

/// Crops every held-out plane at each size and tabulates the predictions.
pub fn run_crop_sweep(
    model: &SvmModel,
    planes: &[LuminancePlane],
    source_side: usize,
    crop_sizes: &[usize],
) -> Result<CropSweepReport> {
    check_sizes(source_side, crop_sizes)?;
    if let Some(p) = planes.iter().find(|p| p.width() != source_side || p.height() != source_side) {
        return Err(Error::Precondition(format!(
            "sweep plane is {}x{}, expected {source_side}x{source_side}",
            p.width(),
            p.height()
        )));
    }
    let per_plane = planes.par_iter().map(|p| classify_crops(model, p, crop_sizes)).collect::<Result<Vec<_>>>()?;
    let flat: Vec<_> = per_plane.into_iter().flatten().collect();
    CropSweepReport::from_predictions(source_side, &model.classes, crop_sizes, &flat)
}

/// Runs one sweep per configured source side over the held-out images and
/// writes `sweep_<side>.csv` and `.txt`. Planes are built one image at a
/// time rather than held together.
pub fn run_sweep_stage(config: &ExperimentConfig, model: &SvmModel, split: &Split) -> Result<Vec<CropSweepReport>> {
    let sources: Vec<&String> = split.test.iter().take(config.max_sweep_images).collect();
    let mut reports = Vec::new();
    for &side in &config.sweep_sources {
        let sizes: Vec<usize> = config.crop_sizes.iter().copied().filter(|&s| s <= side).collect();
        if sizes.is_empty() {
            log::warn!("no crop size fits {side}x{side} sources");
            continue;
        }
        let per_image = sources
            .par_iter()
            .map(|id| {
                let img = load_image(config.corpus_dir.join(id.as_str()))?;
                let plane = source_plane(&img, side)?;
                classify_crops(model, &plane, &sizes)
            })
            .collect::<Result<Vec<_>>>()?;
        let flat: Vec<_> = per_image.into_iter().flatten().collect();
        let report = CropSweepReport::from_predictions(side, &model.classes, &sizes, &flat)?;
        let out = &config.output_dir;
        write_text(&out.join(format!("sweep_{side}.csv")), &report.to_csv())?;
        write_text(&out.join(format!("sweep_{side}.txt")), &report.render_text())?;
        reports.push(report);
    }
    Ok(reports)
}
