use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::config::ExperimentConfig;
use super::write_text;
use crate::features::{extract_beta_vector, feature_table_to_csv, ladder_id, FeatureRecord, FeatureTable, ResolutionClass};
use crate::imagery::{bicubic_resize, center_crop_square, load_image, to_luminance, LuminancePlane, RgbImage};
use crate::{Error, Result};

const IMAGE_EXTENSIONS: [&str; 5] = ["png", "jpg", "jpeg", "tif", "tiff"];

/// Image files directly inside `dir`, sorted by file name.
pub fn list_corpus(dir: &Path) -> Result<Vec<PathBuf>> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut files = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        let is_image = path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| IMAGE_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()));
        if is_image && path.is_file() {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

/// Square plane of `side` pixels: center crop, bicubic resize, luminance.
pub fn source_plane(img: &RgbImage, side: usize) -> Result<LuminancePlane> {
    let square = center_crop_square(img);
    if side > square.width() {
        return Err(Error::Precondition(format!(
            "requested side {side} exceeds the {}x{} center crop",
            square.width(),
            square.height()
        )));
    }
    Ok(to_luminance(&bicubic_resize(&square, side)?))
}

/// One record per ladder rung, with ids `source@side`.
pub fn records_for_image(source_id: &str, img: &RgbImage, ladder_sides: &[usize]) -> Result<Vec<FeatureRecord>> {
    let min_side = img.width().min(img.height());
    if let Some(&max) = ladder_sides.iter().max().filter(|&&m| m > min_side) {
        return Err(Error::Precondition(format!(
            "{source_id} is {}x{}, smaller than the {max} ladder rung",
            img.width(),
            img.height()
        )));
    }
    let square = center_crop_square(img);
    ladder_sides
        .iter()
        .map(|&side| {
            let label = ResolutionClass::new(side as u32)?;
            let plane = to_luminance(&bicubic_resize(&square, side)?);
            Ok(FeatureRecord { image_id: ladder_id(source_id, label.side()), label, features: extract_beta_vector(&plane)? })
        })
        .collect()
}

pub(crate) fn source_id_of(path: &Path) -> Option<String> {
    path.file_name().and_then(|n| n.to_str()).filter(|n| !n.contains([',', '\n', '\r'])).map(str::to_string)
}

/// Builds the feature table for every usable image in the corpus and writes
/// it to `features.csv`. Undersized or undecodable images are skipped.
pub fn run_dataset_build(config: &ExperimentConfig) -> Result<FeatureTable> {
    config.validate()?;
    let files = list_corpus(&config.corpus_dir)?;
    if files.is_empty() {
        return Err(Error::Precondition(format!("no images in {}", config.corpus_dir.display())));
    }
    let max_side = config.max_ladder_side();
    let per_image: Vec<Option<Vec<FeatureRecord>>> = files
        .par_iter()
        .map(|path| {
            let Some(id) = source_id_of(path) else {
                log::warn!("skipping {}: file name unusable as an id", path.display());
                return Ok(None);
            };
            let img = match load_image(path) {
                Ok(img) => img,
                Err(e) => {
                    log::warn!("skipping {id}: {e}");
                    return Ok(None);
                }
            };
            if img.width().min(img.height()) < max_side {
                log::warn!("skipping {id}: {}x{} is smaller than the {max_side} rung", img.width(), img.height());
                return Ok(None);
            }
            records_for_image(&id, &img, &config.ladder_sides).map(Some)
        })
        .collect::<Result<_>>()?;
    let records: Vec<FeatureRecord> = per_image.into_iter().flatten().flatten().collect();
    if records.is_empty() {
        return Err(Error::Precondition(format!(
            "none of the {} images in {} reaches {max_side} pixels",
            files.len(),
            config.corpus_dir.display()
        )));
    }
    let table = FeatureTable::from_records(records)?;
    log::info!("{} records from {} images", table.len(), table.len() / config.ladder_sides.len());
    write_text(&config.features_path(), &feature_table_to_csv(&table))?;
    Ok(table)
}
