//! Orthonormal DCT-II in one and two dimensions, and the 8×8 block tiling
//! of a luminance plane.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::sync::OnceLock;

use crate::imagery::LuminancePlane;
use crate::{Error, Result};

pub const BLOCK: usize = 8;

/// Natural (row-major) index of each zigzag position.
pub const ZIGZAG: [usize; 64] = [
    0, 1, 8, 16, 9, 2, 3, 10, 17, 24, 32, 25, 18, 11, 4, 5, 12, 19, 26, 33, 40, 48, 41, 34, 27, 20, 13, 6, 7, 14, 21,
    28, 35, 42, 49, 56, 57, 50, 43, 36, 29, 22, 15, 23, 30, 37, 44, 51, 58, 59, 52, 45, 38, 31, 39, 46, 53, 60, 61,
    54, 47, 55, 62, 63,
];

pub type Block = [[f64; BLOCK]; BLOCK];

/// DCT coefficients `C(u)`, `u = 0..N`.
#[derive(Clone, Debug, PartialEq)]
pub struct DctVector(Vec<f64>);

impl DctVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Orthonormal scale factor: `sqrt(1/N)` for DC, `sqrt(2/N)` otherwise.
pub fn alpha(u: usize, n: usize) -> f64 {
    if u == 0 {
        (1.0 / n as f64).sqrt()
    } else {
        (2.0 / n as f64).sqrt()
    }
}

/// `basis[u * n + x] = alpha(u) * cos(pi * (2x + 1) * u / 2n)`.
fn basis(n: usize) -> Vec<f64> {
    let mut table = Vec::with_capacity(n * n);
    for u in 0..n {
        let a = alpha(u, n);
        for x in 0..n {
            table.push(a * (PI * ((2 * x + 1) * u) as f64 / (2 * n) as f64).cos());
        }
    }
    table
}

fn basis8() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| basis(BLOCK))
}

fn forward(signal: &[f64], table: &[f64], out: &mut [f64]) {
    let n = signal.len();
    for (u, c) in out.iter_mut().enumerate() {
        let row = &table[u * n..(u + 1) * n];
        *c = signal.iter().zip(row).map(|(f, b)| f * b).sum();
    }
}

pub fn dct_1d(signal: &[f64]) -> Result<DctVector> {
    if signal.is_empty() {
        return Err(Error::Empty("DCT input signal"));
    }
    let n = signal.len();
    let owned;
    let table = if n == BLOCK {
        basis8()
    } else {
        owned = basis(n);
        &owned
    };
    let mut out = vec![0.0; n];
    forward(signal, table, &mut out);
    DctVector::new(out)
}

/// Inverse of [`dct_1d`] (DCT-III with the same normalization).
pub fn idct_1d(coeffs: &DctVector) -> Result<Vec<f64>> {
    let n = coeffs.len();
    if n == 0 {
        return Err(Error::Empty("DCT coefficients"));
    }
    let table = basis(n);
    Ok((0..n)
        .map(|x| coeffs.0.iter().enumerate().map(|(u, c)| c * table[u * n + x]).sum())
        .collect())
}

fn transpose(m: &Block) -> Block {
    let mut t = [[0.0; BLOCK]; BLOCK];
    for (i, row) in m.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            t[j][i] = *v;
        }
    }
    t
}

fn rows_forward(m: &Block) -> Block {
    let table = basis8();
    let mut out = [[0.0; BLOCK]; BLOCK];
    for (src, dst) in m.iter().zip(out.iter_mut()) {
        forward(src, table, dst);
    }
    out
}

/// Separable 2-D DCT of an 8×8 block: transform the rows of the transpose
/// (the columns), transpose back, then transform the rows. `out[u][v]` has
/// vertical frequency `u` and horizontal frequency `v`; `out[0][0]` is DC.
pub fn dct_2d(block: &Block) -> Block {
    rows_forward(&transpose(&rows_forward(&transpose(block))))
}

/// [`dct_2d`] over a row-major slice that must hold exactly 64 samples.
pub fn dct_2d_block(block: &[f64]) -> Result<Block> {
    if block.len() != BLOCK * BLOCK {
        return Err(Error::DimensionMismatch { expected: BLOCK * BLOCK, found: block.len() });
    }
    let mut m = [[0.0; BLOCK]; BLOCK];
    for (i, row) in m.iter_mut().enumerate() {
        row.copy_from_slice(&block[i * BLOCK..(i + 1) * BLOCK]);
    }
    Ok(dct_2d(&m))
}

/// Transformed 8×8 tile and its block coordinates in the source plane.
#[derive(Clone, Debug, PartialEq)]
pub struct DctBlock {
    pub coefficients: Block,
    pub block_row: usize,
    pub block_col: usize,
}

impl DctBlock {
    /// Coefficient at a zigzag position (0 is DC).
    pub fn zigzag(&self, k: usize) -> f64 {
        let n = ZIGZAG[k];
        self.coefficients[n / BLOCK][n % BLOCK]
    }

    /// Pixel origin `(x, y)` of the tile.
    pub fn origin(&self) -> (usize, usize) {
        (self.block_col * BLOCK, self.block_row * BLOCK)
    }

    /// One row per line, six decimals, space separated.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for row in &self.coefficients {
            let line: Vec<String> = row.iter().map(|v| format!("{v:.6}")).collect();
            let _ = writeln!(s, "{}", line.join(" "));
        }
        s
    }
}

fn check_tileable(plane: &LuminancePlane) -> Result<()> {
    if plane.width() < BLOCK || plane.height() < BLOCK {
        return Err(Error::PlaneTooSmall { width: plane.width(), height: plane.height(), min: BLOCK });
    }
    Ok(())
}

/// Calls `f(block_row, block_col, coefficients)` for every full tile in
/// row-major order.
pub(crate) fn for_each_block(plane: &LuminancePlane, mut f: impl FnMut(usize, usize, &Block)) -> Result<()> {
    check_tileable(plane)?;
    let rows = plane.height() / BLOCK;
    let cols = plane.width() / BLOCK;
    let mut tile = [[0.0; BLOCK]; BLOCK];
    for br in 0..rows {
        for bc in 0..cols {
            for (i, row) in tile.iter_mut().enumerate() {
                let src = plane.row(br * BLOCK + i);
                row.copy_from_slice(&src[bc * BLOCK..(bc + 1) * BLOCK]);
            }
            f(br, bc, &dct_2d(&tile));
        }
    }
    Ok(())
}

/// Non-overlapping 8×8 tiling from the top-left corner; partial tiles at the
/// right and bottom edges are dropped.
pub fn block_decompose(plane: &LuminancePlane) -> Result<Vec<DctBlock>> {
    let mut blocks = Vec::with_capacity((plane.width() / BLOCK) * (plane.height() / BLOCK));
    for_each_block(plane, |block_row, block_col, c| {
        blocks.push(DctBlock { coefficients: *c, block_row, block_col });
    })?;
    Ok(blocks)
}
