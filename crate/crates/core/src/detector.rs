//! Resolution classification of a single plane and the crop decision rule:
//! an image is cropped when its predicted source resolution is strictly
//! larger than its actual side.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::classifier::SvmModel;
use crate::features::{extract_beta_vector, ResolutionClass, AC_COUNT};
use crate::imagery::LuminancePlane;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CropVerdict {
    pub image_id: String,
    /// `min(width, height)` of the analysed plane.
    pub actual_side: usize,
    pub predicted: ResolutionClass,
    pub cropped: bool,
    /// Set when the plane was not square and `actual_side` is its short side.
    pub non_square: bool,
    /// One-vs-one votes per class.
    pub votes: BTreeMap<ResolutionClass, usize>,
}

impl CropVerdict {
    /// Single-line JSON record.
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("verdict serializes")
    }
}

/// Strict comparison; an image at its native class size is not cropped.
pub fn is_cropped(predicted: ResolutionClass, actual_side: usize) -> bool {
    predicted.side() as usize > actual_side
}

fn check_model(model: &SvmModel) -> Result<()> {
    if model.scaler.dim() != AC_COUNT {
        return Err(Error::ModelFormat(format!("model expects {} features, extractor produces {AC_COUNT}", model.scaler.dim())));
    }
    Ok(())
}

/// Feature extraction, scaling and one-vs-one vote, without resizing.
pub fn classify_resolution(model: &SvmModel, plane: &LuminancePlane) -> Result<ResolutionClass> {
    check_model(model)?;
    Ok(model.predict(&extract_beta_vector(plane)?).class)
}

pub fn detect_crop(model: &SvmModel, plane: &LuminancePlane, image_id: &str) -> Result<CropVerdict> {
    check_model(model)?;
    let prediction = model.predict(&extract_beta_vector(plane)?);
    let actual_side = plane.width().min(plane.height());
    Ok(CropVerdict {
        image_id: image_id.to_string(),
        actual_side,
        predicted: prediction.class,
        cropped: is_cropped(prediction.class, actual_side),
        non_square: plane.width() != plane.height(),
        votes: prediction.votes,
    })
}
