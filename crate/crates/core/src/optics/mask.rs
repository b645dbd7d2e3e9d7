//! Binary aperture masks and the PBM format.

use rand::seq::SliceRandom;
use rand::Rng as _;

use crate::error::{Error, Result};
use crate::rng;

/// Binary `rows x cols` aperture; columns run along the dispersion axis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    rows: usize,
    cols: usize,
    data: Vec<bool>,
}

impl BinaryMask {
    pub fn new(rows: usize, cols: usize, data: Vec<bool>) -> Result<Self> {
        if rows == 0 || cols == 0 || data.len() != rows * cols {
            return Err(Error::dim(format!("mask {rows}x{cols} with {} entries", data.len())));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[&[u8]]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::dim("ragged mask rows"));
        }
        Self::new(rows.len(), cols, rows.iter().flat_map(|r| r.iter().map(|&v| v != 0)).collect())
    }

    pub fn open(rows: usize, cols: usize) -> Result<Self> {
        Self::new(rows, cols, vec![true; rows * cols])
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> bool {
        self.data[row * self.cols + col]
    }

    pub fn open_count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    /// Open pixels per column: the mask collapsed along rows.
    pub fn column_profile(&self) -> Vec<usize> {
        (0..self.cols).map(|c| (0..self.rows).filter(|&r| self.get(r, c)).count()).collect()
    }

    /// Circular autocorrelation at every shift divided by its zero-shift
    /// value; its minimum is the invertibility margin of the spatial blur
    /// the mask produces.
    pub fn autocorrelation_margin(&self) -> f64 {
        let open = self.open_count();
        if open == 0 {
            return 0.0;
        }
        let mut worst = usize::MAX;
        for dy in 0..self.rows {
            for dx in 0..self.cols {
                let mut overlap = 0;
                for r in 0..self.rows {
                    for c in 0..self.cols {
                        if self.get(r, c) && self.get((r + dy) % self.rows, (c + dx) % self.cols) {
                            overlap += 1;
                        }
                    }
                }
                worst = worst.min(overlap);
            }
        }
        worst as f64 / open as f64
    }

    /// Minimum DFT magnitude of the column code (zero-padded to four times
    /// its length) relative to its DC value.
    pub fn spectral_code_margin(&self) -> f64 {
        let profile = self.column_profile();
        let total: usize = profile.iter().sum();
        if total == 0 {
            return 0.0;
        }
        let n = 4 * profile.len();
        (0..n)
            .map(|k| {
                let (mut re, mut im) = (0.0, 0.0);
                for (c, &v) in profile.iter().enumerate() {
                    let ph = -2.0 * std::f64::consts::PI * (k * c) as f64 / n as f64;
                    re += v as f64 * ph.cos();
                    im += v as f64 * ph.sin();
                }
                (re * re + im * im).sqrt()
            })
            .fold(f64::INFINITY, f64::min)
            / total as f64
    }
}

/// Seed of the shipped default mask: the best of the first 64 seeds by the
/// smaller of the two invertibility margins.
pub const DEFAULT_MASK_SEED: u64 = 39;
pub const DEFAULT_MASK_SIZE: usize = 32;
const OPEN_ROWS_PER_COLUMN: usize = 8;

/// Pseudo-random `size x size` code with a binary column profile.
///
/// A random binary column code (first and last columns open) picks which
/// columns pass light; each open column has exactly `size / 4` open rows
/// at random heights. Collapsing along rows therefore yields a binary 1D
/// spectral code, while the 2D pattern keeps a broad, invertible spatial
/// transfer function.
pub fn coded_mask(size: usize, seed: u64) -> Result<BinaryMask> {
    if size < 2 {
        return Err(Error::validation("coded mask needs size >= 2"));
    }
    let mut r = rng::stream(seed, 5);
    let mut code: Vec<bool> = (0..size).map(|_| r.random::<bool>()).collect();
    code[0] = true;
    code[size - 1] = true;
    let open_rows = (size * OPEN_ROWS_PER_COLUMN / DEFAULT_MASK_SIZE).max(1);
    let mut data = vec![false; size * size];
    let mut rows: Vec<usize> = (0..size).collect();
    for (c, &on) in code.iter().enumerate() {
        if !on {
            continue;
        }
        rows.shuffle(&mut r);
        for &row in &rows[..open_rows] {
            data[row * size + c] = true;
        }
    }
    BinaryMask::new(size, size, data)
}

pub fn default_mask() -> BinaryMask {
    coded_mask(DEFAULT_MASK_SIZE, DEFAULT_MASK_SEED).expect("default mask parameters are valid")
}

fn skip_ws_and_comments(bytes: &[u8], mut i: usize) -> usize {
    while i < bytes.len() {
        match bytes[i] {
            b'#' => {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
            }
            b' ' | b'\t' | b'\r' | b'\n' => i += 1,
            _ => break,
        }
    }
    i
}

fn read_uint(bytes: &[u8], i: usize) -> Result<(usize, usize)> {
    let i = skip_ws_and_comments(bytes, i);
    let start = i;
    let mut end = i;
    let mut v: usize = 0;
    while end < bytes.len() && bytes[end].is_ascii_digit() {
        v = v
            .checked_mul(10)
            .and_then(|v| v.checked_add((bytes[end] - b'0') as usize))
            .ok_or_else(|| Error::parse("PBM header", "dimension overflow"))?;
        end += 1;
    }
    if end == start {
        return Err(Error::parse("PBM header", "expected a number"));
    }
    Ok((v, end))
}

/// Decode plain (P1) or raw (P4) PBM. Bit value 1 marks an open pixel.
pub fn decode_pbm(bytes: &[u8]) -> Result<BinaryMask> {
    if bytes.len() < 2 || bytes[0] != b'P' || !(bytes[1] == b'1' || bytes[1] == b'4') {
        return Err(Error::BadMagic { expected: "P1 or P4", found: bytes[..bytes.len().min(2)].to_vec() });
    }
    let raw = bytes[1] == b'4';
    let (cols, i) = read_uint(bytes, 2)?;
    let (rows, i) = read_uint(bytes, i)?;
    if rows == 0 || cols == 0 {
        return Err(Error::parse("PBM header", "zero dimension"));
    }
    let n = rows.checked_mul(cols).ok_or_else(|| Error::parse("PBM header", "dimension overflow"))?;
    if raw {
        // Exactly one whitespace byte separates the header from the bits.
        if i >= bytes.len() || !bytes[i].is_ascii_whitespace() {
            return Err(Error::parse("PBM header", "missing separator before raster"));
        }
        let stride = cols.div_ceil(8);
        let need = stride.checked_mul(rows).ok_or_else(|| Error::parse("PBM header", "dimension overflow"))?;
        let body = &bytes[i + 1..];
        if body.len() < need {
            return Err(Error::Truncated { expected: need, found: body.len() });
        }
        let mut data = Vec::with_capacity(n);
        for r in 0..rows {
            let row = &body[r * stride..(r + 1) * stride];
            for c in 0..cols {
                data.push(row[c / 8] & (0x80 >> (c % 8)) != 0);
            }
        }
        BinaryMask::new(rows, cols, data)
    } else {
        // Every pixel costs at least one byte, so this bounds allocation.
        if n > bytes.len() {
            return Err(Error::Truncated { expected: n, found: bytes.len() });
        }
        let mut data = Vec::with_capacity(n);
        let mut j = i;
        while data.len() < n {
            j = skip_ws_and_comments(bytes, j);
            match bytes.get(j) {
                Some(b'0') => data.push(false),
                Some(b'1') => data.push(true),
                Some(other) => {
                    return Err(Error::parse("PBM raster", format!("unexpected byte {other:#04x}")));
                }
                None => return Err(Error::Truncated { expected: n, found: data.len() }),
            }
            j += 1;
        }
        BinaryMask::new(rows, cols, data)
    }
}

/// Plain-text P1 encoding.
pub fn encode_pbm(mask: &BinaryMask) -> Vec<u8> {
    let mut out = format!("P1\n{} {}\n", mask.cols(), mask.rows());
    for r in 0..mask.rows() {
        let line: Vec<&str> = (0..mask.cols()).map(|c| if mask.get(r, c) { "1" } else { "0" }).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out.into_bytes()
}

pub fn load_pbm(path: impl AsRef<std::path::Path>) -> Result<BinaryMask> {
    decode_pbm(&std::fs::read(path)?)
}
