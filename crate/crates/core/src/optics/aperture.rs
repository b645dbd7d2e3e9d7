//! Coded-aperture blur model.
//!
//! A mask `a(u, v)` in the relay produces two blurs:
//!
//! * a spectral blur along λ whose kernel is the mask's column profile
//!   mapped onto the band axis through `x = λ ν₀ f`;
//! * a spatial blur per band proportional to `|A(x / λf, y / λf)|²`, with
//!   `A` the Fourier transform of the mask, so its footprint grows
//!   linearly with λ.
//!
//! The PSF is sampled so that at the shortest wavelength of the grid one
//! sensor pixel equals one DFT bin of the mask; longer wavelengths sample
//! the same continuous transform on a finer frequency pitch (`1 / m` bins
//! per pixel with `m = λ / λ_min`), which stretches the footprint by `m`.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::hsi::WavelengthGrid;
use crate::image::Kernel2D;

use super::mask::BinaryMask;

/// 1D kernel along the band axis; tap `j` sits at band offset
/// `j - origin`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralKernel {
    taps: Vec<f64>,
    origin: usize,
}

impl SpectralKernel {
    pub fn new(taps: Vec<f64>, origin: usize) -> Result<Self> {
        if taps.is_empty() || origin >= taps.len() {
            return Err(Error::dim("spectral kernel origin outside support"));
        }
        if taps.iter().any(|t| !t.is_finite() || *t < 0.0) {
            return Err(Error::validation("spectral kernel taps must be finite and non-negative"));
        }
        Ok(Self { taps, origin })
    }

    /// Origin at `floor((P - 1) / 2)`.
    pub fn centered(taps: Vec<f64>) -> Result<Self> {
        let origin = taps.len().saturating_sub(1) / 2;
        Self::new(taps, origin)
    }

    pub fn identity() -> Self {
        Self { taps: vec![1.0], origin: 0 }
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    pub fn origin(&self) -> usize {
        self.origin
    }

    pub fn len(&self) -> usize {
        self.taps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taps.is_empty()
    }

    pub fn is_identity(&self) -> bool {
        self.taps.len() == 1 && self.taps[0] == 1.0
    }

    /// Same-length convolution with zero padding:
    /// `out[b] = Σ_j taps[j] · input[b - (j - origin)]`.
    pub fn convolve(&self, input: &[f64], out: &mut [f64]) {
        let n = input.len() as isize;
        for (b, o) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (j, &t) in self.taps.iter().enumerate() {
                let src = b as isize - (j as isize - self.origin as isize);
                if src >= 0 && src < n {
                    acc += t * input[src as usize];
                }
            }
            *o = acc;
        }
    }
}

/// Relay geometry linking mask pitch to band pitch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApertureGeometry {
    /// Mask pixel pitch in millimetres.
    pub pitch_mm: f64,
    pub focal_length_mm: f64,
    /// Grating groove density in lines per millimetre.
    pub groove_density_per_mm: f64,
}

impl ApertureGeometry {
    pub const DEFAULT_FOCAL_LENGTH_MM: f64 = 100.0;
    pub const DEFAULT_GROOVE_DENSITY: f64 = 300.0;

    /// Default relay with the mask pitch chosen so one mask column spans
    /// exactly one band of `grid`.
    pub fn matched_to(grid: &WavelengthGrid) -> Self {
        let (f, nu) = (Self::DEFAULT_FOCAL_LENGTH_MM, Self::DEFAULT_GROOVE_DENSITY);
        Self { pitch_mm: band_width_mm(grid.delta(), f, nu), focal_length_mm: f, groove_density_per_mm: nu }
    }

    fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("pitch", self.pitch_mm),
            ("focal length", self.focal_length_mm),
            ("groove density", self.groove_density_per_mm),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        Ok(())
    }
}

/// Width on the rainbow plane (mm) of a `delta_nm` slice of spectrum.
fn band_width_mm(delta_nm: f64, focal_length_mm: f64, groove_density: f64) -> f64 {
    delta_nm * 1e-6 * groove_density * focal_length_mm
}

/// Mask plus the spectral kernel and per-band PSFs it induces.
#[derive(Debug, Clone)]
pub struct CodedApertureModel {
    mask: BinaryMask,
    geometry: ApertureGeometry,
    grid: WavelengthGrid,
    spectral_kernel: SpectralKernel,
    psfs: Vec<Kernel2D>,
}

impl CodedApertureModel {
    /// Delta blur in both domains (no aperture effect).
    pub fn identity(grid: WavelengthGrid) -> Self {
        Self {
            mask: BinaryMask::open(1, 1).expect("1x1"),
            geometry: ApertureGeometry::matched_to(&grid),
            grid,
            spectral_kernel: SpectralKernel::identity(),
            psfs: vec![Kernel2D::delta(); grid.bands()],
        }
    }

    /// Replace the derived kernels; used to test blur paths with
    /// hand-written kernels.
    pub fn with_kernels(grid: WavelengthGrid, spectral_kernel: SpectralKernel, psfs: Vec<Kernel2D>) -> Result<Self> {
        if psfs.len() != grid.bands() {
            return Err(Error::dim(format!("{} PSFs for {} bands", psfs.len(), grid.bands())));
        }
        Ok(Self {
            mask: BinaryMask::open(1, 1).expect("1x1"),
            geometry: ApertureGeometry::matched_to(&grid),
            grid,
            spectral_kernel,
            psfs,
        })
    }

    pub fn mask(&self) -> &BinaryMask {
        &self.mask
    }

    pub fn geometry(&self) -> &ApertureGeometry {
        &self.geometry
    }

    pub fn grid(&self) -> &WavelengthGrid {
        &self.grid
    }

    pub fn spectral_kernel(&self) -> &SpectralKernel {
        &self.spectral_kernel
    }

    pub fn psf(&self, band: usize) -> &Kernel2D {
        &self.psfs[band]
    }

    pub fn psfs(&self) -> &[Kernel2D] {
        &self.psfs
    }

    pub fn is_identity(&self) -> bool {
        self.spectral_kernel.is_identity() && self.psfs.iter().all(Kernel2D::is_delta)
    }
}

/// Derive the spectral kernel and per-band PSFs of `mask`.
pub fn build_aperture_model(
    mask: &BinaryMask,
    geometry: ApertureGeometry,
    grid: WavelengthGrid,
) -> Result<CodedApertureModel> {
    geometry.validate()?;
    if mask.open_count() == 0 {
        return Err(Error::DegenerateAperture);
    }
    let spectral_kernel = spectral_kernel(mask, &geometry, &grid)?;
    let lambda_ref = grid.lambda_min();
    let psfs = grid
        .centers()
        .into_iter()
        .map(|lambda| spatial_psf(mask, lambda / lambda_ref))
        .collect::<Result<Vec<_>>>()?;
    Ok(CodedApertureModel { mask: mask.clone(), geometry, grid, spectral_kernel, psfs })
}

/// Column profile box-resampled onto band pitch, normalized to sum 1.
fn spectral_kernel(mask: &BinaryMask, geometry: &ApertureGeometry, grid: &WavelengthGrid) -> Result<SpectralKernel> {
    let profile = mask.column_profile();
    let p = geometry.pitch_mm;
    let band = band_width_mm(grid.delta(), geometry.focal_length_mm, geometry.groove_density_per_mm);
    let extent = profile.len() as f64 * p;
    // Snap ratios within rounding noise of an integer.
    let raw = extent / band;
    let taps_len = if (raw - raw.round()).abs() < 1e-9 { raw.round() } else { raw.ceil() }.max(1.0) as usize;
    let mut taps = vec![0.0; taps_len];
    for (c, &open) in profile.iter().enumerate() {
        if open == 0 {
            continue;
        }
        let (c0, c1) = (c as f64 * p, (c + 1) as f64 * p);
        let first = ((c0 / band).floor() as usize).min(taps_len - 1);
        let last = (((c1 / band).ceil() as usize).max(first + 1)).min(taps_len);
        for (j, tap) in taps.iter_mut().enumerate().take(last).skip(first) {
            let (b0, b1) = (j as f64 * band, (j + 1) as f64 * band);
            let overlap = (c1.min(b1) - c0.max(b0)).max(0.0);
            *tap += open as f64 * overlap / p;
        }
    }
    let total: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|t| *t /= total);
    SpectralKernel::centered(taps)
}

/// Frequency indices sampled along one axis of length `len` at
/// magnification `m`: `k ∈ [-floor(mL/2), ceil(mL/2) - 1]`.
fn frequency_window(len: usize, m: f64) -> (isize, isize) {
    let half = m * len as f64 / 2.0;
    let lo = -(half.floor() as isize);
    let hi = (half.ceil() as isize - 1).max(lo);
    (lo, hi)
}

/// `|A(ν)|²` sampled at `ν = k / (m L)` per axis, normalized, origin at
/// the zero-frequency tap.
fn spatial_psf(mask: &BinaryMask, m: f64) -> Result<Kernel2D> {
    let (rows, cols) = (mask.rows(), mask.cols());
    let (kx0, kx1) = frequency_window(cols, m);
    let (ky0, ky1) = frequency_window(rows, m);
    let (w, h) = ((kx1 - kx0 + 1) as usize, (ky1 - ky0 + 1) as usize);
    // Row transforms first: row_ft[r][ix] = Σ_c a[r][c] e^{-2πi νx c}.
    let mut row_re = vec![0.0; rows * w];
    let mut row_im = vec![0.0; rows * w];
    for ix in 0..w {
        let nu = (kx0 + ix as isize) as f64 / (m * cols as f64);
        let (sins, coss): (Vec<f64>, Vec<f64>) = (0..cols).map(|c| (-2.0 * PI * nu * c as f64).sin_cos()).unzip();
        for r in 0..rows {
            let (mut re, mut im) = (0.0, 0.0);
            for c in 0..cols {
                if mask.get(r, c) {
                    re += coss[c];
                    im += sins[c];
                }
            }
            row_re[r * w + ix] = re;
            row_im[r * w + ix] = im;
        }
    }
    let mut data = vec![0.0; w * h];
    for iy in 0..h {
        let nu = (ky0 + iy as isize) as f64 / (m * rows as f64);
        let phases: Vec<(f64, f64)> = (0..rows).map(|r| (-2.0 * PI * nu * r as f64).sin_cos()).collect();
        for ix in 0..w {
            let (mut re, mut im) = (0.0, 0.0);
            for (r, &(s, c)) in phases.iter().enumerate() {
                let (a, b) = (row_re[r * w + ix], row_im[r * w + ix]);
                re += a * c - b * s;
                im += a * s + b * c;
            }
            data[iy * w + ix] = re * re + im * im;
        }
    }
    Kernel2D::new(w, h, (-kx0) as usize, (-ky0) as usize, data)?.normalized()
}
