//! Spectral code and band-to-wavelength calibration from laser captures.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::hsi::{HsiCube, IlluminantAndResponse, Spectrum, WavelengthGrid};
use crate::optics::{rainbow_plane_spectrum, CodedApertureModel, SpectralKernel};

pub const DEFAULT_CODE_THRESHOLD: f64 = 0.5;

/// Flat `width x height` scene lit by a line at `wavelength_nm`, split
/// linearly between the two neighbouring band centres.
pub fn laser_scene(grid: &WavelengthGrid, wavelength_nm: f64, width: usize, height: usize) -> Result<HsiCube> {
    if !grid.contains(wavelength_nm) {
        return Err(Error::validation(format!("laser at {wavelength_nm} nm is outside the grid")));
    }
    let pos = if grid.bands() == 1 { 0.0 } else { (wavelength_nm - grid.lambda_min()) / grid.delta() };
    let lo = (pos.floor() as usize).min(grid.bands() - 1);
    let frac = pos - lo as f64;
    let mut spectrum = vec![0.0; grid.bands()];
    spectrum[lo] = 1.0 - frac;
    if frac > 0.0 {
        spectrum[lo + 1] = frac;
    }
    let data = (0..width * height).flat_map(|_| spectrum.iter().copied()).collect();
    HsiCube::new(width, height, *grid, data)
}

/// Rainbow-plane signal of a flat laser scene.
pub fn simulate_laser_capture(ap: &CodedApertureModel, ir: &IlluminantAndResponse, wavelength_nm: f64) -> Result<Spectrum> {
    rainbow_plane_spectrum(&laser_scene(ap.grid(), wavelength_nm, 4, 4)?, ap, ir)
}

/// Binary 1D code, trimmed to its first and last open tap; `offset` is the
/// capture index of the first tap.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryCode {
    pub taps: Vec<bool>,
    pub offset: usize,
}

impl BinaryCode {
    pub fn open(&self) -> usize {
        self.taps.iter().filter(|&&t| t).count()
    }

    /// Energy-normalized kernel with a centred origin.
    pub fn to_kernel(&self) -> Result<SpectralKernel> {
        let n = self.open();
        if n == 0 {
            return Err(Error::validation("code has no open taps"));
        }
        SpectralKernel::centered(self.taps.iter().map(|&t| if t { 1.0 / n as f64 } else { 0.0 }).collect())
    }

    pub fn to_bits(&self) -> String {
        self.taps.iter().map(|&t| if t { '1' } else { '0' }).collect()
    }
}

/// Threshold a laser capture at `threshold · max`. For a single-band laser
/// the capture is the code itself.
pub fn estimate_code(capture: &Spectrum, threshold: f64) -> Result<BinaryCode> {
    if !(0.0..=1.0).contains(&threshold) || threshold == 0.0 {
        return Err(Error::validation("code threshold must be in (0, 1]"));
    }
    let max = capture.max();
    if max <= 0.0 {
        return Err(Error::validation("laser capture is all zero"));
    }
    let bits: Vec<bool> = capture.values().iter().map(|&v| v >= threshold * max).collect();
    let first = bits.iter().position(|&b| b).expect("max passes threshold");
    let last = bits.iter().rposition(|&b| b).expect("max passes threshold");
    Ok(BinaryCode { taps: bits[first..=last].to_vec(), offset: first })
}

/// True when the open taps reach either end of a capture of `bands`
/// samples, so part of the code may have fallen off the band range.
pub fn code_touches_edge(code: &BinaryCode, bands: usize) -> bool {
    code.offset == 0 || code.offset + code.taps.len() >= bands
}

/// Regularized least-squares (Wiener) deconvolution over the band range:
/// `x = (KᵀK + nsr·I)⁻¹ Kᵀ y`, where `K` is the same-length zero-padded
/// convolution by `kernel`. Working on the truncated operator keeps lines
/// near the band edges exact.
pub fn deconvolve_spectrum(signal: &[f64], kernel: &SpectralKernel, nsr: f64) -> Result<Vec<f64>> {
    if !(nsr >= 0.0) || !nsr.is_finite() {
        return Err(Error::validation("nsr must be non-negative"));
    }
    let n = signal.len();
    let mut k = DMatrix::<f64>::zeros(n, n);
    for s in 0..n {
        for (j, &t) in kernel.taps().iter().enumerate() {
            let b = s as isize + j as isize - kernel.origin() as isize;
            if (0..n as isize).contains(&b) {
                k[(b as usize, s)] += t;
            }
        }
    }
    let kt = k.transpose();
    let mut normal = &kt * &k;
    for i in 0..n {
        normal[(i, i)] += nsr;
    }
    let rhs = &kt * DVector::from_column_slice(signal);
    let x = match normal.clone().cholesky() {
        Some(c) => c.solve(&rhs),
        None => normal.lu().solve(&rhs).ok_or(Error::Degenerate("deconvolution system is singular".into()))?,
    };
    Ok(x.iter().copied().collect())
}

/// Fractional index of the strongest line: centroid of the maximum and its
/// two neighbours (negative values clipped).
pub fn locate_peak(signal: &[f64]) -> Result<f64> {
    let (mut best, mut at) = (f64::NEG_INFINITY, 0);
    for (i, &v) in signal.iter().enumerate() {
        if v > best {
            best = v;
            at = i;
        }
    }
    if !(best > 0.0) {
        return Err(Error::validation("no positive peak"));
    }
    let lo = at.saturating_sub(1);
    let hi = (at + 1).min(signal.len() - 1);
    let (mut w, mut m) = (0.0, 0.0);
    for (i, &v) in signal.iter().enumerate().take(hi + 1).skip(lo) {
        let v = v.max(0.0);
        w += v;
        m += v * i as f64;
    }
    Ok(m / w)
}

/// `λ = intercept + slope · index`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WavelengthMapping {
    pub slope: f64,
    pub intercept: f64,
}

impl WavelengthMapping {
    pub fn wavelength(&self, index: f64) -> f64 {
        self.intercept + self.slope * index
    }

    pub fn index(&self, wavelength_nm: f64) -> f64 {
        (wavelength_nm - self.intercept) / self.slope
    }
}

/// Deconvolve a laser capture by the code and return the fractional band
/// index of its line.
pub fn line_index(capture: &Spectrum, code: &BinaryCode, nsr: f64) -> Result<f64> {
    locate_peak(&deconvolve_spectrum(capture.values(), &code.to_kernel()?, nsr)?)
}

/// Affine fit through the line positions of two lasers of known
/// wavelength.
pub fn calibrate_wavelengths(
    captures: [(f64, &Spectrum); 2],
    code: &BinaryCode,
    nsr: f64,
) -> Result<WavelengthMapping> {
    let [(l1, c1), (l2, c2)] = captures;
    if l1 == l2 {
        return Err(Error::validation("calibration lasers must differ in wavelength"));
    }
    let (i1, i2) = (line_index(c1, code, nsr)?, line_index(c2, code, nsr)?);
    if (i1 - i2).abs() < 1e-9 {
        return Err(Error::validation("calibration peaks are indistinguishable"));
    }
    let slope = (l2 - l1) / (i2 - i1);
    if !(slope > 0.0) {
        return Err(Error::validation("calibration slope is not positive"));
    }
    Ok(WavelengthMapping { slope, intercept: l1 - slope * i1 })
}

/// Wavelength of an unknown laser under a fitted mapping.
pub fn localize_laser(capture: &Spectrum, code: &BinaryCode, mapping: &WavelengthMapping, nsr: f64) -> Result<f64> {
    Ok(mapping.wavelength(line_index(capture, code, nsr)?))
}
