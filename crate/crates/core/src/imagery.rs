//! Image decoding and the geometric/colorimetric preprocessing steps:
//! square center cropping, bicubic resizing, luminance extraction and
//! 8×8-grid-aligned cropping.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use image::{DynamicImage, ImageReader};

use crate::{Error, Result};

/// 8-bit RGB raster, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RgbImage {
    width: usize,
    height: usize,
    pixels: Vec<[u8; 3]>,
}

impl RgbImage {
    pub fn new(width: usize, height: usize, pixels: Vec<[u8; 3]>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidImage(format!("zero-sized image {width}x{height}")));
        }
        if pixels.len() != width * height {
            return Err(Error::InvalidImage(format!(
                "{} pixels for a {width}x{height} image",
                pixels.len()
            )));
        }
        Ok(Self { width, height, pixels })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> [u8; 3]) -> Result<Self> {
        let mut pixels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        Self::new(width, height, pixels)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[[u8; 3]] {
        &self.pixels
    }

    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        self.pixels[y * self.width + x]
    }

    fn channel(&self, c: usize) -> Vec<f64> {
        self.pixels.iter().map(|p| f64::from(p[c])).collect()
    }
}

/// Single-channel real-valued plane, row-major. Samples are nominally in
/// `[0, 255]`; only finiteness is enforced.
#[derive(Clone, Debug, PartialEq)]
pub struct LuminancePlane {
    width: usize,
    height: usize,
    samples: Vec<f64>,
}

impl LuminancePlane {
    pub fn new(width: usize, height: usize, samples: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidImage(format!("zero-sized plane {width}x{height}")));
        }
        if samples.len() != width * height {
            return Err(Error::InvalidImage(format!(
                "{} samples for a {width}x{height} plane",
                samples.len()
            )));
        }
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self { width, height, samples })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut samples = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                samples.push(f(x, y));
            }
        }
        Self::new(width, height, samples)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.samples[y * self.width + x]
    }

    pub fn row(&self, y: usize) -> &[f64] {
        &self.samples[y * self.width..(y + 1) * self.width]
    }

    /// Writes a binary PGM (P5, maxval 255), rounding and clamping samples.
    pub fn write_pgm(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        let bytes: Vec<u8> = self.samples.iter().map(|v| v.round().clamp(0.0, 255.0) as u8).collect();
        write!(out, "P5\n{} {}\n255\n", self.width, self.height)
            .and_then(|_| out.write_all(&bytes))
            .and_then(|_| out.flush())
            .map_err(|e| Error::io(path, e))
    }
}

/// Square crop window `side × side` anchored at (`top`, `left`).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CropSpec {
    pub top: usize,
    pub left: usize,
    pub side: usize,
}

impl CropSpec {
    pub fn new(top: usize, left: usize, side: usize) -> Self {
        Self { top, left, side }
    }

    /// Central window whose offsets are rounded down to multiples of 8 so the
    /// crop keeps the source's block grid.
    pub fn centered_aligned(width: usize, height: usize, side: usize) -> Result<Self> {
        if side == 0 || side > width || side > height {
            return Err(Error::InvalidCrop(format!(
                "crop side {side} does not fit a {width}x{height} plane"
            )));
        }
        let top = (height - side) / 2 / 8 * 8;
        let left = (width - side) / 2 / 8 * 8;
        Ok(Self { top, left, side })
    }

    pub fn is_aligned(&self) -> bool {
        self.top.is_multiple_of(8) && self.left.is_multiple_of(8)
    }

    fn check_bounds(&self, width: usize, height: usize) -> Result<()> {
        if self.side == 0 {
            return Err(Error::InvalidCrop("zero crop side".into()));
        }
        if self.top + self.side > height || self.left + self.side > width {
            return Err(Error::InvalidCrop(format!(
                "window top={} left={} side={} exceeds {width}x{height}",
                self.top, self.left, self.side
            )));
        }
        Ok(())
    }
}

/// Decodes a PNG, JPEG or TIFF file into 8-bit RGB. 16-bit samples are
/// reduced by dropping the low byte.
pub fn load_image(path: impl AsRef<Path>) -> Result<RgbImage> {
    let path = path.as_ref();
    let reader = ImageReader::open(path)
        .map_err(|e| Error::io(path, e))?
        .with_guessed_format()
        .map_err(|e| Error::io(path, e))?;
    let decoded = reader.decode().map_err(|source| Error::Decode { path: path.to_path_buf(), source })?;
    Ok(from_dynamic(decoded))
}

pub(crate) fn from_dynamic(img: DynamicImage) -> RgbImage {
    let (width, height) = (img.width() as usize, img.height() as usize);
    let pixels = match img {
        DynamicImage::ImageLuma16(_)
        | DynamicImage::ImageLumaA16(_)
        | DynamicImage::ImageRgb16(_)
        | DynamicImage::ImageRgba16(_) => img
            .to_rgb16()
            .pixels()
            .map(|p| [(p[0] >> 8) as u8, (p[1] >> 8) as u8, (p[2] >> 8) as u8])
            .collect(),
        other => other.to_rgb8().pixels().map(|p| p.0).collect(),
    };
    RgbImage { width, height, pixels }
}

/// Largest centered square. Odd margins put the extra pixel on the
/// bottom/right.
pub fn center_crop_square(img: &RgbImage) -> RgbImage {
    let side = img.width.min(img.height);
    let left = (img.width - side) / 2;
    let top = (img.height - side) / 2;
    let mut pixels = Vec::with_capacity(side * side);
    for y in top..top + side {
        let start = y * img.width + left;
        pixels.extend_from_slice(&img.pixels[start..start + side]);
    }
    RgbImage { width: side, height: side, pixels }
}

/// Cuts a square window whose offsets are multiples of 8.
pub fn aligned_crop(plane: &LuminancePlane, spec: CropSpec) -> Result<LuminancePlane> {
    if !spec.is_aligned() {
        return Err(Error::InvalidCrop(format!(
            "offsets top={} left={} are not multiples of 8",
            spec.top, spec.left
        )));
    }
    spec.check_bounds(plane.width, plane.height)?;
    let mut samples = Vec::with_capacity(spec.side * spec.side);
    for y in spec.top..spec.top + spec.side {
        let start = y * plane.width + spec.left;
        samples.extend_from_slice(&plane.samples[start..start + spec.side]);
    }
    Ok(LuminancePlane { width: spec.side, height: spec.side, samples })
}

/// BT.601 full-range luma, kept unrounded. Computed in integer thousandths
/// so white maps to exactly 255.
pub fn to_luminance(img: &RgbImage) -> LuminancePlane {
    let samples = img
        .pixels
        .iter()
        .map(|&[r, g, b]| {
            let y = 299 * u32::from(r) + 587 * u32::from(g) + 114 * u32::from(b);
            f64::from(y) / 1000.0
        })
        .collect();
    LuminancePlane { width: img.width, height: img.height, samples }
}

const CUBIC_A: f64 = -0.5;

/// Cubic convolution kernel with `a = -0.5`.
pub fn cubic_kernel(x: f64) -> f64 {
    let x = x.abs();
    if x <= 1.0 {
        ((CUBIC_A + 2.0) * x - (CUBIC_A + 3.0)) * x * x + 1.0
    } else if x < 2.0 {
        ((CUBIC_A * x - 5.0 * CUBIC_A) * x + 8.0 * CUBIC_A) * x - 4.0 * CUBIC_A
    } else {
        0.0
    }
}

/// Interpolates `samples` at a fractional `position` with the four-tap cubic
/// kernel, replicating edge samples.
pub fn cubic_sample_1d(samples: &[f64], position: f64) -> f64 {
    assert!(!samples.is_empty());
    let last = samples.len() as isize - 1;
    let base = position.floor() as isize;
    (base - 1..=base + 2)
        .map(|i| samples[i.clamp(0, last) as usize] * cubic_kernel(position - i as f64))
        .sum()
}

struct Taps {
    index: Vec<usize>,
    weight: Vec<f64>,
}

/// Per-output-sample taps for resampling `src` samples to `dst`. Downscaling
/// stretches the kernel by the scale factor so every source sample
/// contributes; weights are normalized to sum to one.
fn resample_taps(src: usize, dst: usize) -> Vec<Taps> {
    let scale = src as f64 / dst as f64;
    let support = scale.max(1.0);
    let last = src as isize - 1;
    (0..dst)
        .map(|o| {
            let center = (o as f64 + 0.5) * scale - 0.5;
            let lo = (center - 2.0 * support).ceil() as isize;
            let hi = (center + 2.0 * support).floor() as isize;
            let mut index = Vec::with_capacity((hi - lo + 1) as usize);
            let mut weight = Vec::with_capacity((hi - lo + 1) as usize);
            for i in lo..=hi {
                let w = cubic_kernel((i as f64 - center) / support);
                if w != 0.0 {
                    index.push(i.clamp(0, last) as usize);
                    weight.push(w);
                }
            }
            let total: f64 = weight.iter().sum();
            weight.iter_mut().for_each(|w| *w /= total);
            Taps { index, weight }
        })
        .collect()
}

/// Separable resize of one row-major channel; rows first, then columns.
fn resample_channel(data: &[f64], width: usize, height: usize, out_w: usize, out_h: usize) -> Vec<f64> {
    let h_taps = resample_taps(width, out_w);
    let mut horizontal = vec![0.0; out_w * height];
    for y in 0..height {
        let src = &data[y * width..(y + 1) * width];
        let dst = &mut horizontal[y * out_w..(y + 1) * out_w];
        for (d, taps) in dst.iter_mut().zip(&h_taps) {
            *d = taps.index.iter().zip(&taps.weight).map(|(&i, &w)| src[i] * w).sum();
        }
    }
    let v_taps = resample_taps(height, out_h);
    let mut out = vec![0.0; out_w * out_h];
    for (y, taps) in v_taps.iter().enumerate() {
        let dst = &mut out[y * out_w..(y + 1) * out_w];
        for (&i, &w) in taps.index.iter().zip(&taps.weight) {
            let src = &horizontal[i * out_w..(i + 1) * out_w];
            for (d, s) in dst.iter_mut().zip(src) {
                *d += s * w;
            }
        }
    }
    out
}

/// Square rasters that can be bicubically resized.
pub trait Resample: Sized {
    fn bicubic_resize(&self, target_side: usize) -> Result<Self>;
}

fn check_square(width: usize, height: usize, target_side: usize) -> Result<()> {
    if width != height {
        return Err(Error::InvalidImage(format!("resize source {width}x{height} is not square")));
    }
    if target_side == 0 {
        return Err(Error::InvalidImage("resize target side is zero".into()));
    }
    Ok(())
}

impl Resample for RgbImage {
    fn bicubic_resize(&self, target_side: usize) -> Result<Self> {
        check_square(self.width, self.height, target_side)?;
        let planes: Vec<Vec<f64>> = (0..3)
            .map(|c| resample_channel(&self.channel(c), self.width, self.height, target_side, target_side))
            .collect();
        let quantize = |v: f64| v.round().clamp(0.0, 255.0) as u8;
        let pixels = (0..target_side * target_side)
            .map(|i| [quantize(planes[0][i]), quantize(planes[1][i]), quantize(planes[2][i])])
            .collect();
        Ok(RgbImage { width: target_side, height: target_side, pixels })
    }
}

impl Resample for LuminancePlane {
    fn bicubic_resize(&self, target_side: usize) -> Result<Self> {
        check_square(self.width, self.height, target_side)?;
        let mut samples = resample_channel(&self.samples, self.width, self.height, target_side, target_side);
        samples.iter_mut().for_each(|v| *v = v.clamp(0.0, 255.0));
        Ok(LuminancePlane { width: target_side, height: target_side, samples })
    }
}

/// Resizes a square RGB image or luminance plane to `target_side`².
pub fn bicubic_resize<T: Resample>(img: &T, target_side: usize) -> Result<T> {
    img.bicubic_resize(target_side)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn gradient(w: usize, h: usize) -> RgbImage {
        RgbImage::from_fn(w, h, |x, y| [(x * 20 % 256) as u8, (y * 30 % 256) as u8, ((x + y) % 256) as u8]).unwrap()
    }

    #[test]
    fn rejects_bad_dimensions() {
        assert!(RgbImage::new(2, 2, vec![[0; 3]; 3]).is_err());
        assert!(RgbImage::new(0, 2, vec![]).is_err());
        assert!(matches!(LuminancePlane::new(1, 1, vec![f64::NAN]), Err(Error::NonFinite(0))));
    }

    #[test]
    fn center_crop_square_input_is_identity() {
        let img = gradient(100, 100);
        assert_eq!(center_crop_square(&img), img);
    }

    #[test]
    fn center_crop_even_margin() {
        let img = gradient(10, 6);
        let out = center_crop_square(&img);
        assert_eq!((out.width(), out.height()), (6, 6));
        for y in 0..6 {
            for x in 0..6 {
                assert_eq!(out.pixel(x, y), img.pixel(x + 2, y));
            }
        }
    }

    #[test]
    fn center_crop_odd_margin_floors_left() {
        // Margin 5: the two candidate placements start at column 2 or 3.
        let img = gradient(11, 6);
        let out = center_crop_square(&img);
        let window = |left: usize| {
            RgbImage::from_fn(6, 6, |x, y| img.pixel(x + left, y)).unwrap()
        };
        assert_eq!(out, window(2));
        assert_ne!(out, window(3));
    }

    #[test]
    fn center_crop_tall_image_floors_top() {
        let img = gradient(4, 7);
        let out = center_crop_square(&img);
        assert_eq!(out.pixel(0, 0), img.pixel(0, 1));
    }

    #[test]
    fn luminance_reference_colors() {
        let img = RgbImage::new(3, 1, vec![[255, 255, 255], [0, 0, 0], [255, 0, 0]]).unwrap();
        let y = to_luminance(&img);
        assert_eq!(y.samples()[0], 255.0);
        assert_eq!(y.samples()[1], 0.0);
        assert!((y.samples()[2] - 76.245).abs() < 1e-12);
    }

    #[test]
    fn kernel_values_at_half_offsets() {
        assert!((cubic_kernel(1.5) + 1.0 / 16.0).abs() < 1e-15);
        assert!((cubic_kernel(0.5) - 9.0 / 16.0).abs() < 1e-15);
        assert_eq!(cubic_kernel(0.0), 1.0);
        assert_eq!(cubic_kernel(1.0), 0.0);
        assert_eq!(cubic_kernel(2.0), 0.0);
    }

    #[test]
    fn midpoint_interpolation_uses_sixteenths() {
        let v = cubic_sample_1d(&[10.0, 20.0, 40.0, 80.0], 1.5);
        let expected = (-10.0 + 9.0 * 20.0 + 9.0 * 40.0 - 80.0) / 16.0;
        assert!((v - expected).abs() < 1e-12);
        assert!((v - 28.125).abs() < 1e-12);
    }

    #[test]
    fn same_side_resize_is_identity() {
        let plane = LuminancePlane::from_fn(17, 17, |x, y| ((x * 13 + y * 7) % 256) as f64).unwrap();
        let out = bicubic_resize(&plane, 17).unwrap();
        for (a, b) in out.samples().iter().zip(plane.samples()) {
            assert!((a - b).abs() < 1e-9);
        }
        let img = gradient(9, 9);
        assert_eq!(bicubic_resize(&img, 9).unwrap(), img);
    }

    #[test]
    fn resize_rejects_non_square() {
        assert!(bicubic_resize(&gradient(10, 6), 4).is_err());
        assert!(bicubic_resize(&gradient(6, 6), 0).is_err());
    }

    #[test]
    fn resize_clamps_overshoot() {
        // A hard step overshoots with a negative-lobe kernel.
        let plane = LuminancePlane::from_fn(8, 8, |x, _| if x < 4 { 0.0 } else { 255.0 }).unwrap();
        let up = bicubic_resize(&plane, 29).unwrap();
        assert!(up.samples().iter().all(|v| (0.0..=255.0).contains(v)));
        assert!(up.samples().contains(&255.0));
    }

    #[test]
    fn aligned_crop_identity_and_offsets() {
        let plane = LuminancePlane::from_fn(64, 64, |x, y| (x * 64 + y) as f64 % 255.0).unwrap();
        assert_eq!(aligned_crop(&plane, CropSpec::new(0, 0, 64)).unwrap(), plane);
        let crop = aligned_crop(&plane, CropSpec::new(8, 16, 32)).unwrap();
        assert_eq!(crop.get(0, 0), plane.get(16, 8));
        assert_eq!(crop.get(31, 31), plane.get(47, 39));
    }

    #[test]
    fn aligned_crop_errors() {
        let plane = LuminancePlane::from_fn(32, 32, |_, _| 1.0).unwrap();
        assert!(matches!(aligned_crop(&plane, CropSpec::new(4, 0, 8)), Err(Error::InvalidCrop(_))));
        assert!(matches!(aligned_crop(&plane, CropSpec::new(0, 3, 8)), Err(Error::InvalidCrop(_))));
        assert!(matches!(aligned_crop(&plane, CropSpec::new(8, 8, 32)), Err(Error::InvalidCrop(_))));
    }

    #[test]
    fn centered_aligned_offsets() {
        assert_eq!(CropSpec::centered_aligned(2048, 2048, 1024).unwrap(), CropSpec::new(512, 512, 1024));
        // (2048 - 750) / 2 = 649 -> 648
        assert_eq!(CropSpec::centered_aligned(2048, 2048, 750).unwrap(), CropSpec::new(648, 648, 750));
        assert!(CropSpec::centered_aligned(100, 100, 101).is_err());
    }

    #[test]
    fn pgm_dump_header_and_rounding() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.pgm");
        LuminancePlane::new(2, 1, vec![76.245, 300.0]).unwrap().write_pgm(&path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(bytes, b"P5\n2 1\n255\n\x4c\xff");
    }

    #[test]
    fn load_png_and_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("white.png");
        image::RgbImage::from_pixel(2, 2, image::Rgb([255, 255, 255])).save(&path).unwrap();
        let img = load_image(&path).unwrap();
        assert_eq!(img.pixels(), &[[255, 255, 255]; 4]);

        let bytes = std::fs::read(&path).unwrap();
        let truncated = dir.path().join("truncated.png");
        std::fs::write(&truncated, &bytes[..bytes.len() / 2]).unwrap();
        let err = load_image(&truncated).unwrap_err();
        assert!(err.to_string().contains("truncated.png"), "{err}");

        let missing = load_image(dir.path().join("missing.png")).unwrap_err();
        assert!(missing.to_string().contains("missing.png"));
    }

    #[test]
    fn sixteen_bit_tiff_drops_low_byte() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("deep.tiff");
        // 0xABCD >> 8 = 0xAB = 171; 0x00FF >> 8 = 0; 0xFFFF >> 8 = 255
        let buf: image::ImageBuffer<image::Rgb<u16>, Vec<u16>> =
            image::ImageBuffer::from_pixel(3, 2, image::Rgb([0xABCD, 0x00FF, 0xFFFF]));
        buf.save(&path).unwrap();
        let img = load_image(&path).unwrap();
        assert_eq!((img.width(), img.height()), (3, 2));
        assert_eq!(img.pixel(1, 1), [171, 0, 255]);
    }

    proptest! {
        #[test]
        fn center_crop_is_idempotent(w in 1usize..40, h in 1usize..40) {
            let img = gradient(w, h);
            let once = center_crop_square(&img);
            prop_assert_eq!(center_crop_square(&once), once);
        }

        #[test]
        fn resize_of_constant_is_constant(side in 1usize..40, target in 1usize..60, value in 0.0f64..=255.0) {
            let plane = LuminancePlane::from_fn(side, side, |_, _| value).unwrap();
            let out = bicubic_resize(&plane, target).unwrap();
            prop_assert!(out.samples().iter().all(|v| (v - value).abs() < 1e-9));
            let img = RgbImage::from_fn(side, side, |_, _| [value as u8; 3]).unwrap();
            let out = bicubic_resize(&img, target).unwrap();
            prop_assert!(out.pixels().iter().all(|p| *p == [value as u8; 3]));
        }

        #[test]
        fn resize_stays_in_range(seed in any::<u64>(), side in 2usize..24, target in 1usize..48) {
            let mut state = seed;
            let plane = LuminancePlane::from_fn(side, side, |_, _| {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                if state >> 63 == 1 { 255.0 } else { 0.0 }
            }).unwrap();
            let out = bicubic_resize(&plane, target).unwrap();
            prop_assert!(out.samples().iter().all(|v| (0.0..=255.0).contains(v)));
        }

        #[test]
        fn luminance_monotone_and_bounded(r in 0u8..255, g in 0u8..255, b in 0u8..255, ch in 0usize..3) {
            let mut brighter = [r, g, b];
            brighter[ch] += 1;
            let img = RgbImage::new(2, 1, vec![[r, g, b], brighter]).unwrap();
            let y = to_luminance(&img);
            prop_assert!(y.samples()[1] > y.samples()[0]);
            prop_assert!(y.samples().iter().all(|v| (0.0..=255.0).contains(v)));
        }
    }
}
