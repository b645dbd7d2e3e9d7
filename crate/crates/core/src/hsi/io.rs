//! On-disk formats.
//!
//! HSC1 (all little-endian):
//!
//! ```text
//! "HSC1" | u32 W | u32 H | u32 B | B x f32 centres (nm) | W*H*B x f32
//! ```
//!
//! with the payload stored band-major: all of band 0 in row-major order,
//! then band 1, and so on.
//!
//! LBL1: `"LBL1" | u32 W | u32 H | u32 K | W*H x u16 | K x (u32 len, utf-8)`.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::image::Image;

use super::{HsiCube, LabelMap, WavelengthGrid};

pub const HSC1_MAGIC: &[u8; 4] = b"HSC1";
pub const LBL1_MAGIC: &[u8; 4] = b"LBL1";

/// Centres read back from f32 are compared against the rebuilt uniform
/// grid with this tolerance (nm).
const CENTER_TOL: f64 = 1e-3;

/// Raw contents of an HSC1 file: a stack of same-sized planes with one
/// "centre" value per plane.
///
/// Cubes use wavelength centres; measurement sets and score maps reuse the
/// container with plane indices as centres and allow signed values.
#[derive(Debug, Clone, PartialEq)]
pub struct PlaneStack {
    pub width: usize,
    pub height: usize,
    pub centers: Vec<f32>,
    /// Band-major, `centers.len() * width * height` values.
    pub values: Vec<f32>,
}

impl PlaneStack {
    pub fn planes(&self) -> usize {
        self.centers.len()
    }

    pub fn plane(&self, i: usize) -> Image {
        let n = self.width * self.height;
        let data = self.values[i * n..(i + 1) * n].iter().map(|&v| v as f64).collect();
        Image::from_vec(self.width, self.height, data).expect("plane size")
    }

    /// Stack images with centres `0, 1, 2, ...`.
    pub fn from_images(images: &[Image]) -> Result<Self> {
        let first = images.first().ok_or_else(|| Error::validation("no planes to stack"))?;
        let (width, height) = (first.width(), first.height());
        let mut values = Vec::with_capacity(images.len() * width * height);
        for img in images {
            if img.width() != width || img.height() != height {
                return Err(Error::dim("planes differ in size"));
            }
            values.extend(img.data().iter().map(|&v| v as f32));
        }
        let stack = Self { width, height, centers: (0..images.len()).map(|i| i as f32).collect(), values };
        stack.check_finite()?;
        Ok(stack)
    }

    fn check_finite(&self) -> Result<()> {
        if let Some(i) = self.centers.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index: i });
        }
        if let Some(i) = self.values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index: i });
        }
        Ok(())
    }
}

fn u32_at(bytes: &[u8], off: usize) -> u32 {
    u32::from_le_bytes(bytes[off..off + 4].try_into().expect("4 bytes"))
}

fn check_magic(bytes: &[u8], magic: &'static [u8; 4], name: &'static str) -> Result<()> {
    if bytes.len() < 4 || &bytes[..4] != magic {
        return Err(Error::BadMagic { expected: name, found: bytes[..bytes.len().min(4)].to_vec() });
    }
    Ok(())
}

fn checked_len(parts: &[usize]) -> Option<usize> {
    parts.iter().try_fold(1usize, |acc, &p| acc.checked_mul(p))
}

pub fn decode_hsc1(bytes: &[u8]) -> Result<PlaneStack> {
    check_magic(bytes, HSC1_MAGIC, "HSC1")?;
    if bytes.len() < 16 {
        return Err(Error::Truncated { expected: 16, found: bytes.len() });
    }
    let (w, h, b) = (u32_at(bytes, 4) as usize, u32_at(bytes, 8) as usize, u32_at(bytes, 12) as usize);
    let expected = checked_len(&[w, h, b])
        .and_then(|n| n.checked_add(b))
        .and_then(|n| n.checked_mul(4))
        .and_then(|n| n.checked_add(16))
        .ok_or_else(|| Error::parse("HSC1 header", format!("dimensions {w}x{h}x{b} overflow")))?;
    if bytes.len() < expected {
        return Err(Error::Truncated { expected, found: bytes.len() });
    }
    if bytes.len() > expected {
        return Err(Error::parse("HSC1 payload", format!("{} trailing bytes", bytes.len() - expected)));
    }
    let floats: Vec<f32> = bytes[16..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
        .collect();
    let (centers, values) = floats.split_at(b);
    let stack = PlaneStack { width: w, height: h, centers: centers.to_vec(), values: values.to_vec() };
    stack.check_finite()?;
    Ok(stack)
}

pub fn encode_hsc1(stack: &PlaneStack) -> Result<Vec<u8>> {
    let n = checked_len(&[stack.width, stack.height, stack.planes()])
        .ok_or_else(|| Error::validation("plane stack too large"))?;
    if stack.values.len() != n {
        return Err(Error::dim(format!("plane stack holds {} values, header implies {n}", stack.values.len())));
    }
    for d in [stack.width, stack.height, stack.planes()] {
        if d > u32::MAX as usize {
            return Err(Error::validation("dimension exceeds u32"));
        }
    }
    stack.check_finite()?;
    let mut out = Vec::with_capacity(16 + 4 * (stack.planes() + n));
    out.extend_from_slice(HSC1_MAGIC);
    for d in [stack.width, stack.height, stack.planes()] {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    for v in stack.centers.iter().chain(&stack.values) {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

pub fn cube_to_stack(cube: &HsiCube) -> Result<PlaneStack> {
    let (n, b) = (cube.pixels(), cube.bands());
    let mut values = vec![0f32; n * b];
    for (p, px) in cube.pixel_spectra().enumerate() {
        for (band, &v) in px.iter().enumerate() {
            let f = v as f32;
            if !f.is_finite() {
                return Err(Error::validation(format!("voxel {v} does not fit in a 32-bit float")));
            }
            values[band * n + p] = f;
        }
    }
    let centers = cube.grid().centers().iter().map(|&c| c as f32).collect();
    Ok(PlaneStack { width: cube.width(), height: cube.height(), centers, values })
}

pub fn stack_to_cube(stack: &PlaneStack) -> Result<HsiCube> {
    if stack.width == 0 || stack.height == 0 || stack.planes() == 0 {
        return Err(Error::validation("cube dimensions must be positive"));
    }
    let centers: Vec<f64> = stack.centers.iter().map(|&c| c as f64).collect();
    let grid = WavelengthGrid::from_centers(&centers, CENTER_TOL)?;
    let (n, b) = (stack.width * stack.height, stack.planes());
    let mut data = vec![0.0; n * b];
    for band in 0..b {
        for p in 0..n {
            data[p * b + band] = stack.values[band * n + p] as f64;
        }
    }
    HsiCube::new(stack.width, stack.height, grid, data)
}

pub fn decode_cube(bytes: &[u8]) -> Result<HsiCube> {
    stack_to_cube(&decode_hsc1(bytes)?)
}

pub fn encode_cube(cube: &HsiCube) -> Result<Vec<u8>> {
    encode_hsc1(&cube_to_stack(cube)?)
}

pub fn load_cube(path: impl AsRef<Path>) -> Result<HsiCube> {
    decode_cube(&fs::read(path)?)
}

/// Writes voxels as 32-bit floats; [`HsiCube::quantized_f32`] is what a
/// later [`load_cube`] returns.
pub fn save_cube(cube: &HsiCube, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode_cube(cube)?)?;
    Ok(())
}

pub fn load_stack(path: impl AsRef<Path>) -> Result<PlaneStack> {
    decode_hsc1(&fs::read(path)?)
}

pub fn save_stack(stack: &PlaneStack, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode_hsc1(stack)?)?;
    Ok(())
}

pub fn decode_labels(bytes: &[u8]) -> Result<LabelMap> {
    check_magic(bytes, LBL1_MAGIC, "LBL1")?;
    if bytes.len() < 16 {
        return Err(Error::Truncated { expected: 16, found: bytes.len() });
    }
    let (w, h, k) = (u32_at(bytes, 4) as usize, u32_at(bytes, 8) as usize, u32_at(bytes, 12) as usize);
    let label_bytes = checked_len(&[w, h, 2])
        .ok_or_else(|| Error::parse("LBL1 header", format!("dimensions {w}x{h} overflow")))?;
    let labels_end = label_bytes
        .checked_add(16)
        .ok_or_else(|| Error::parse("LBL1 header", "size overflow"))?;
    if bytes.len() < labels_end {
        return Err(Error::Truncated { expected: labels_end, found: bytes.len() });
    }
    let labels: Vec<u16> = bytes[16..labels_end]
        .chunks_exact(2)
        .map(|c| u16::from_le_bytes([c[0], c[1]]))
        .collect();
    let mut names = Vec::new();
    let mut off = labels_end;
    for i in 0..k {
        if bytes.len() < off + 4 {
            return Err(Error::Truncated { expected: off + 4, found: bytes.len() });
        }
        let len = u32_at(bytes, off) as usize;
        off += 4;
        let end = off
            .checked_add(len)
            .ok_or_else(|| Error::parse("LBL1 class name", "length overflow"))?;
        if bytes.len() < end {
            return Err(Error::Truncated { expected: end, found: bytes.len() });
        }
        let name = std::str::from_utf8(&bytes[off..end])
            .map_err(|_| Error::parse("LBL1 class name", format!("class {i} is not UTF-8")))?;
        names.push(name.to_string());
        off = end;
    }
    if off != bytes.len() {
        return Err(Error::parse("LBL1 payload", format!("{} trailing bytes", bytes.len() - off)));
    }
    LabelMap::new(w, h, labels, names)
}

pub fn encode_labels(labels: &LabelMap) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + 2 * labels.labels().len());
    out.extend_from_slice(LBL1_MAGIC);
    for d in [labels.width(), labels.height(), labels.classes()] {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    for l in labels.labels() {
        out.extend_from_slice(&l.to_le_bytes());
    }
    for name in labels.class_names() {
        out.extend_from_slice(&(name.len() as u32).to_le_bytes());
        out.extend_from_slice(name.as_bytes());
    }
    out
}

pub fn load_labels(path: impl AsRef<Path>) -> Result<LabelMap> {
    decode_labels(&fs::read(path)?)
}

pub fn save_labels(labels: &LabelMap, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode_labels(labels))?;
    Ok(())
}

/// Sample type of a raw band-sequential file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RawDtype {
    F32,
    U16,
}

impl std::str::FromStr for RawDtype {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "f32" => Ok(RawDtype::F32),
            "u16" => Ok(RawDtype::U16),
            other => Err(Error::validation(format!("unknown raw dtype {other:?} (expected f32 or u16)"))),
        }
    }
}

/// Header-less band-sequential layout description.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RawLayout {
    pub width: usize,
    pub height: usize,
    pub bands: usize,
    pub dtype: RawDtype,
    pub lambda_min: f64,
    pub lambda_max: f64,
}

/// Decode a little-endian band-sequential raw file (e.g. the 220-band
/// Indian Pines scene exported as `u16`).
pub fn decode_raw_bsq(bytes: &[u8], layout: &RawLayout) -> Result<HsiCube> {
    let grid = WavelengthGrid::new(layout.lambda_min, layout.lambda_max, layout.bands)?;
    let sample = match layout.dtype {
        RawDtype::F32 => 4,
        RawDtype::U16 => 2,
    };
    let n = checked_len(&[layout.width, layout.height])
        .ok_or_else(|| Error::validation("raw dimensions overflow"))?;
    let expected = checked_len(&[n, layout.bands, sample])
        .ok_or_else(|| Error::validation("raw dimensions overflow"))?;
    if n == 0 {
        return Err(Error::validation("raw dimensions must be positive"));
    }
    if bytes.len() < expected {
        return Err(Error::Truncated { expected, found: bytes.len() });
    }
    if bytes.len() > expected {
        return Err(Error::parse("raw BSQ payload", format!("{} trailing bytes", bytes.len() - expected)));
    }
    let b = layout.bands;
    let mut data = vec![0.0; n * b];
    for (i, chunk) in bytes.chunks_exact(sample).enumerate() {
        let v = match layout.dtype {
            RawDtype::F32 => f32::from_le_bytes(chunk.try_into().expect("4 bytes")) as f64,
            RawDtype::U16 => u16::from_le_bytes([chunk[0], chunk[1]]) as f64,
        };
        let (band, p) = (i / n, i % n);
        data[p * b + band] = v;
    }
    HsiCube::new(layout.width, layout.height, grid, data)
}

pub fn import_raw_bsq(path: impl AsRef<Path>, layout: &RawLayout) -> Result<HsiCube> {
    decode_raw_bsq(&fs::read(path)?, layout)
}
