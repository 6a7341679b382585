//! Model file: `CSVM` magic, u16 format version, u64 payload length, the
//! payload, then a CRC32 of the payload. All integers and floats are
//! little-endian; floats are stored as their IEEE-754 bit patterns.

use std::fs;
use std::path::Path;

use super::grid::{CvCell, CvReport};
use super::multiclass::{ModelMetadata, SvmModel};
use super::scaler::FeatureScaler;
use super::smo::{BinarySvm, SvmHyperParams};
use crate::features::ResolutionClass;
use crate::{Error, Result};

pub const MAGIC: [u8; 4] = *b"CSVM";
pub const FORMAT_VERSION: u16 = 1;
const HEADER_LEN: usize = 4 + 2 + 8;

#[derive(Default)]
struct Writer(Vec<u8>);

impl Writer {
    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }
    fn u32(&mut self, v: u32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn len(&mut self, n: usize) {
        self.u32(u32::try_from(n).expect("collection fits in u32"));
    }
    fn str(&mut self, s: &str) {
        self.len(s.len());
        self.0.extend_from_slice(s.as_bytes());
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len()).ok_or_else(|| {
            Error::ModelFormat(format!("payload ends at byte {} while reading {n} more", self.buf.len()))
        })?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn len(&mut self) -> Result<usize> {
        let n = self.u32()? as usize;
        // Every element takes at least one byte.
        if n > self.buf.len() - self.pos {
            return Err(Error::ModelFormat(format!("implausible length {n}")));
        }
        Ok(n)
    }
    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        (0..n).map(|_| self.f64()).collect()
    }
    fn str(&mut self) -> Result<String> {
        let n = self.len()?;
        String::from_utf8(self.take(n)?.to_vec()).map_err(|_| Error::ModelFormat("invalid UTF-8".into()))
    }
}

fn write_params(w: &mut Writer, p: &SvmHyperParams) {
    w.f64(p.c);
    w.f64(p.gamma);
    w.f64(p.tolerance);
    w.u32(p.max_passes);
}

fn read_params(r: &mut Reader) -> Result<SvmHyperParams> {
    Ok(SvmHyperParams { c: r.f64()?, gamma: r.f64()?, tolerance: r.f64()?, max_passes: r.u32()? })
}

fn encode_payload(model: &SvmModel) -> Vec<u8> {
    let mut w = Writer::default();
    w.len(model.classes.len());
    model.classes.iter().for_each(|c| w.u32(c.side()));
    let dim = model.scaler.dim();
    w.len(dim);
    model.scaler.means.iter().for_each(|&v| w.f64(v));
    model.scaler.std_devs.iter().for_each(|&v| w.f64(v));
    w.len(model.binaries.len());
    for b in &model.binaries {
        write_params(&mut w, &b.hyperparams);
        w.f64(b.bias);
        w.len(b.dual_coefs.len());
        b.dual_coefs.iter().for_each(|&v| w.f64(v));
        for sv in &b.support_vectors {
            sv.iter().for_each(|&v| w.f64(v));
        }
    }
    let meta = &model.metadata;
    w.u64(meta.trained_at);
    w.u64(meta.seed);
    match &meta.grid {
        None => w.u8(0),
        Some(g) => {
            w.u8(1);
            w.len(g.folds);
            w.u64(g.seed);
            w.f64(g.best_c);
            w.f64(g.best_gamma);
            w.len(g.cells.len());
            for cell in &g.cells {
                w.f64(cell.c);
                w.f64(cell.gamma);
                w.u64(cell.correct as u64);
                w.u64(cell.total as u64);
                match &cell.failure {
                    None => w.u8(0),
                    Some(msg) => {
                        w.u8(1);
                        w.str(msg);
                    }
                }
            }
        }
    }
    w.0
}

fn decode_payload(buf: &[u8]) -> Result<SvmModel> {
    let mut r = Reader { buf, pos: 0 };
    let n_classes = r.len()?;
    let classes = (0..n_classes)
        .map(|_| ResolutionClass::new(r.u32()?).map_err(|e| Error::ModelFormat(e.to_string())))
        .collect::<Result<Vec<_>>>()?;
    let dim = r.len()?;
    let means = r.f64s(dim)?;
    let std_devs = r.f64s(dim)?;
    let scaler = FeatureScaler::new(means, std_devs)?;
    let n_bin = r.len()?;
    let mut binaries = Vec::with_capacity(n_bin);
    for _ in 0..n_bin {
        let params = read_params(&mut r)?;
        let bias = r.f64()?;
        let n_sv = r.len()?;
        let coefs = r.f64s(n_sv)?;
        let svs = (0..n_sv).map(|_| r.f64s(dim)).collect::<Result<Vec<_>>>()?;
        binaries.push(BinarySvm::new(svs, coefs, bias, params)?);
    }
    let trained_at = r.u64()?;
    let seed = r.u64()?;
    let grid = match r.u8()? {
        0 => None,
        1 => {
            let folds = r.len()?;
            let grid_seed = r.u64()?;
            let best_c = r.f64()?;
            let best_gamma = r.f64()?;
            let n_cells = r.len()?;
            let mut cells = Vec::with_capacity(n_cells);
            for _ in 0..n_cells {
                let c = r.f64()?;
                let gamma = r.f64()?;
                let correct = r.u64()? as usize;
                let total = r.u64()? as usize;
                let failure = match r.u8()? {
                    0 => None,
                    1 => Some(r.str()?),
                    t => return Err(Error::ModelFormat(format!("bad cell status {t}"))),
                };
                cells.push(CvCell { c, gamma, correct, total, failure });
            }
            Some(CvReport { folds, seed: grid_seed, cells, best_c, best_gamma })
        }
        t => return Err(Error::ModelFormat(format!("bad grid marker {t}"))),
    };
    if r.pos != buf.len() {
        return Err(Error::ModelFormat(format!("{} trailing payload bytes", buf.len() - r.pos)));
    }
    SvmModel::new(classes, scaler, binaries, ModelMetadata { trained_at, seed, grid })
}

pub fn model_to_bytes(model: &SvmModel) -> Vec<u8> {
    let payload = encode_payload(model);
    let mut out = Vec::with_capacity(HEADER_LEN + payload.len() + 4);
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(payload.len() as u64).to_le_bytes());
    out.extend_from_slice(&payload);
    out.extend_from_slice(&crc32fast::hash(&payload).to_le_bytes());
    out
}

pub fn model_from_bytes(bytes: &[u8]) -> Result<SvmModel> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::ModelFormat(format!("file is {} bytes, shorter than the header", bytes.len())));
    }
    if bytes[..4] != MAGIC {
        return Err(Error::ModelFormat(format!("bad magic {:02x?}", &bytes[..4])));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != FORMAT_VERSION {
        return Err(Error::VersionMismatch { found: version, expected: FORMAT_VERSION });
    }
    let len = u64::from_le_bytes(bytes[6..14].try_into().unwrap());
    let expected = (HEADER_LEN as u64).checked_add(len).and_then(|v| v.checked_add(4));
    if expected != Some(bytes.len() as u64) {
        return Err(Error::ModelFormat(format!("truncated: header announces {len} payload bytes, file has {}", bytes.len())));
    }
    let payload = &bytes[HEADER_LEN..HEADER_LEN + len as usize];
    let stored = u32::from_le_bytes(bytes[bytes.len() - 4..].try_into().unwrap());
    let computed = crc32fast::hash(payload);
    if stored != computed {
        return Err(Error::Checksum { stored, computed });
    }
    decode_payload(payload)
}

pub fn save_model(model: &SvmModel, path: &Path) -> Result<()> {
    fs::write(path, model_to_bytes(model)).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: &Path) -> Result<SvmModel> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    model_from_bytes(&bytes)
}

/// Human-readable mirror of the model; not accepted by [`load_model`].
pub fn model_to_json(model: &SvmModel) -> String {
    serde_json::to_string_pretty(model).expect("model serializes")
}
