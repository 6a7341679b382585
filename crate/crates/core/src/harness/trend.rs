use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use super::write_text;
use crate::features::{build_resolution_ladder, extract_beta_vector, format_sig12, AC_COUNT};
use crate::imagery::RgbImage;
use crate::Result;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TrendPoint {
    pub side: usize,
    /// Zigzag index, 1..=63.
    pub position: usize,
    pub beta: f64,
}

/// β of every AC position at every ladder side, ordered by side then position.
pub fn beta_trend(img: &RgbImage, sides: &[usize]) -> Result<Vec<TrendPoint>> {
    let ladder = build_resolution_ladder(img, sides)?;
    let mut points = Vec::with_capacity(ladder.len() * AC_COUNT);
    for (&side, plane) in &ladder {
        let betas = extract_beta_vector(plane)?;
        points.extend((1..=AC_COUNT).map(|position| TrendPoint { side, position, beta: betas.at_zigzag(position) }));
    }
    Ok(points)
}

pub fn trend_to_csv(points: &[TrendPoint]) -> String {
    let mut out = String::from("side,position,beta\n");
    for p in points {
        let _ = writeln!(out, "{},{},{}", p.side, p.position, format_sig12(p.beta));
    }
    out
}

pub fn emit_beta_trend(img: &RgbImage, sides: &[usize], path: &Path) -> Result<Vec<TrendPoint>> {
    let points = beta_trend(img, sides)?;
    write_text(path, &trend_to_csv(&points))?;
    Ok(points)
}
