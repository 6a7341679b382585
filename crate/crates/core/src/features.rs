//! Per-image β feature vectors, the resolution ladder, and the labeled
//! feature table with its CSV form.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::imagery::{bicubic_resize, center_crop_square, to_luminance, LuminancePlane, RgbImage};
use crate::laplace::fit_laplace_in_place;
use crate::transform::{for_each_block, BLOCK, ZIGZAG};
use crate::{Error, Result};

/// Number of AC positions in an 8×8 block.
pub const AC_COUNT: usize = 63;

/// Smallest plane side accepted for extraction (2×2 blocks).
pub const MIN_PLANE_SIDE: usize = 16;

/// Laplacian scale of each AC position, indexed by zigzag order 1..=63
/// (entry `i` holds zigzag position `i + 1`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BetaVector([f64; AC_COUNT]);

impl BetaVector {
    pub fn new(betas: [f64; AC_COUNT]) -> Result<Self> {
        if let Some(i) = betas.iter().position(|b| !b.is_finite() || *b < 0.0) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self(betas))
    }

    pub fn from_slice(betas: &[f64]) -> Result<Self> {
        let arr: [f64; AC_COUNT] = betas
            .try_into()
            .map_err(|_| Error::DimensionMismatch { expected: AC_COUNT, found: betas.len() })?;
        Self::new(arr)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// β for zigzag position `k` in `1..=63`.
    pub fn at_zigzag(&self, k: usize) -> f64 {
        self.0[k - 1]
    }
}

/// One of the five square source resolutions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct ResolutionClass(u32);

impl ResolutionClass {
    pub const SIDES: [u32; 5] = [128, 256, 512, 1024, 2048];

    pub fn new(side: u32) -> Result<Self> {
        if Self::SIDES.contains(&side) {
            Ok(Self(side))
        } else {
            Err(Error::UnknownClass { side })
        }
    }

    pub fn all() -> Vec<Self> {
        Self::SIDES.iter().map(|&s| Self(s)).collect()
    }

    pub fn side(self) -> u32 {
        self.0
    }
}

impl TryFrom<u32> for ResolutionClass {
    type Error = Error;

    fn try_from(side: u32) -> Result<Self> {
        Self::new(side)
    }
}

impl From<ResolutionClass> for u32 {
    fn from(c: ResolutionClass) -> u32 {
        c.0
    }
}

impl fmt::Display for ResolutionClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FeatureRecord {
    pub image_id: String,
    pub label: ResolutionClass,
    pub features: BetaVector,
}

impl FeatureRecord {
    /// Source image of a ladder record: the part of `image_id` before the
    /// last `@` (the whole id when there is none).
    pub fn source_id(&self) -> &str {
        source_of(&self.image_id)
    }
}

pub fn source_of(image_id: &str) -> &str {
    image_id.rsplit_once('@').map_or(image_id, |(src, _)| src)
}

/// Record id for the ladder rung `side` of `source`.
pub fn ladder_id(source: &str, side: u32) -> String {
    format!("{source}@{side}")
}

/// Labeled records with unique ids, kept sorted by `(image_id, label)`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FeatureTable {
    records: Vec<FeatureRecord>,
}

impl FeatureTable {
    pub fn from_records(mut records: Vec<FeatureRecord>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(records.len());
        for r in &records {
            if r.image_id.is_empty() {
                return Err(Error::Schema { line: 0, msg: "empty image_id".into() });
            }
            if r.image_id.contains([',', '\n', '\r']) {
                return Err(Error::Schema { line: 0, msg: format!("image_id {:?} contains a separator", r.image_id) });
            }
            if !seen.insert(r.image_id.as_str()) {
                return Err(Error::DuplicateId(r.image_id.clone()));
            }
        }
        records.sort_by(|a, b| a.image_id.cmp(&b.image_id).then(a.label.cmp(&b.label)));
        Ok(Self { records })
    }

    pub fn records(&self) -> &[FeatureRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Distinct labels, ascending.
    pub fn classes(&self) -> Vec<ResolutionClass> {
        let mut c: Vec<_> = self.records.iter().map(|r| r.label).collect();
        c.sort();
        c.dedup();
        c
    }

    pub fn count_of(&self, class: ResolutionClass) -> usize {
        self.records.iter().filter(|r| r.label == class).count()
    }

    /// Subset of records for which `keep` holds, preserving order.
    pub fn filter(&self, mut keep: impl FnMut(&FeatureRecord) -> bool) -> Self {
        Self { records: self.records.iter().filter(|r| keep(r)).cloned().collect() }
    }
}

/// Fits a Laplacian to each AC position across all 8×8 blocks of the plane.
pub fn extract_beta_vector(plane: &LuminancePlane) -> Result<BetaVector> {
    if plane.width() < MIN_PLANE_SIDE || plane.height() < MIN_PLANE_SIDE {
        return Err(Error::PlaneTooSmall { width: plane.width(), height: plane.height(), min: MIN_PLANE_SIDE });
    }
    let blocks = (plane.width() / BLOCK) * (plane.height() / BLOCK);
    let mut columns: Vec<Vec<f64>> = (0..AC_COUNT).map(|_| Vec::with_capacity(blocks)).collect();
    for_each_block(plane, |_, _, c| {
        for (k, col) in columns.iter_mut().enumerate() {
            let n = ZIGZAG[k + 1];
            col.push(c[n / BLOCK][n % BLOCK]);
        }
    })?;
    let mut betas = [0.0; AC_COUNT];
    for (beta, col) in betas.iter_mut().zip(columns.iter_mut()) {
        *beta = fit_laplace_in_place(col)?.beta;
    }
    BetaVector::new(betas)
}

/// Center-crops `img` to a square, then for each side resizes bicubically and
/// takes the luminance (crop, resize, luminance, in that order).
pub fn build_resolution_ladder(img: &RgbImage, sides: &[usize]) -> Result<BTreeMap<usize, LuminancePlane>> {
    let square = center_crop_square(img);
    if let Some(&too_big) = sides.iter().find(|&&s| s > square.width()) {
        return Err(Error::Precondition(format!(
            "ladder side {too_big} exceeds the {}x{} center crop",
            square.width(),
            square.height()
        )));
    }
    sides
        .iter()
        .map(|&side| Ok((side, to_luminance(&bicubic_resize(&square, side)?))))
        .collect()
}

pub const CSV_FIXED_COLUMNS: [&str; 2] = ["image_id", "label"];

pub fn beta_column(k: usize) -> String {
    format!("beta_{k:02}")
}

pub fn csv_header() -> String {
    let mut cols: Vec<String> = CSV_FIXED_COLUMNS.iter().map(|s| s.to_string()).collect();
    cols.extend((1..=AC_COUNT).map(beta_column));
    cols.join(",")
}

/// Formats like C's `%.12g`.
pub fn format_sig12(v: f64) -> String {
    const P: i32 = 12;
    if v == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.*e}", (P - 1) as usize, v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let trim = |s: &str| -> String {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s.to_string()
        }
    };
    if (-4..P).contains(&exp) {
        trim(&format!("{:.*}", (P - 1 - exp) as usize, v))
    } else {
        format!("{}e{}", trim(mantissa), exp)
    }
}

pub fn feature_table_to_csv(table: &FeatureTable) -> String {
    let mut out = csv_header();
    out.push('\n');
    for r in table.records() {
        out.push_str(&r.image_id);
        out.push(',');
        out.push_str(&r.label.to_string());
        for b in r.features.as_slice() {
            out.push(',');
            out.push_str(&format_sig12(*b));
        }
        out.push('\n');
    }
    out
}

pub fn feature_table_from_csv(text: &str) -> Result<FeatureTable> {
    let mut lines = text.split('\n').map(|l| l.strip_suffix('\r').unwrap_or(l));
    let header = lines.next().unwrap_or("");
    let expected = csv_header();
    if header != expected {
        let got: Vec<&str> = header.split(',').collect();
        let msg = match expected.split(',').zip(got.iter().chain(std::iter::repeat(&""))).find(|(e, g)| e != *g) {
            Some((e, &"")) => format!("missing column {e}"),
            Some((e, g)) => format!("expected column {e}, found {g}"),
            None => format!("unexpected extra columns after {}", beta_column(AC_COUNT)),
        };
        return Err(Error::Schema { line: 1, msg });
    }
    let mut records = Vec::new();
    for (i, line) in lines.enumerate() {
        let line_no = i + 2;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 2 + AC_COUNT {
            return Err(Error::Schema {
                line: line_no,
                msg: format!("{} columns, expected {}", fields.len(), 2 + AC_COUNT),
            });
        }
        let side: u32 = fields[1]
            .parse()
            .map_err(|_| Error::Schema { line: line_no, msg: format!("label {:?} is not an integer", fields[1]) })?;
        let label = ResolutionClass::new(side).map_err(|e| Error::Schema { line: line_no, msg: e.to_string() })?;
        let mut betas = [0.0; AC_COUNT];
        for (k, (slot, raw)) in betas.iter_mut().zip(&fields[2..]).enumerate() {
            let v: f64 = raw.parse().map_err(|_| Error::Schema {
                line: line_no,
                msg: format!("{} = {raw:?} is not a number", beta_column(k + 1)),
            })?;
            if !v.is_finite() || v < 0.0 {
                return Err(Error::Schema { line: line_no, msg: format!("{} = {v} is not a valid scale", beta_column(k + 1)) });
            }
            *slot = v;
        }
        records.push(FeatureRecord { image_id: fields[0].to_string(), label, features: BetaVector(betas) });
    }
    FeatureTable::from_records(records)
}

pub fn write_feature_table(table: &FeatureTable, path: &Path) -> Result<()> {
    fs::write(path, feature_table_to_csv(table)).map_err(|e| Error::io(path, e))
}

pub fn read_feature_table(path: &Path) -> Result<FeatureTable> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    feature_table_from_csv(&text)
}
