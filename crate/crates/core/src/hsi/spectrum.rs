use crate::error::{Error, Result};

use super::WavelengthGrid;

/// Non-negative radiance (or transmittance) sampled on a wavelength grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    grid: WavelengthGrid,
    values: Vec<f64>,
}

impl Spectrum {
    pub fn new(grid: WavelengthGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.bands() {
            return Err(Error::dim(format!(
                "spectrum has {} values for a {}-band grid",
                values.len(),
                grid.bands()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index: i });
        }
        if let Some(i) = values.iter().position(|v| *v < 0.0) {
            return Err(Error::validation(format!("negative spectrum value at band {i}")));
        }
        Ok(Self { grid, values })
    }

    pub fn constant(grid: WavelengthGrid, value: f64) -> Result<Self> {
        Self::new(grid, vec![value; grid.bands()])
    }

    pub fn ones(grid: WavelengthGrid) -> Self {
        Self { grid, values: vec![1.0; grid.bands()] }
    }

    pub fn from_fn(grid: WavelengthGrid, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(grid, grid.centers().into_iter().map(f).collect())
    }

    pub fn grid(&self) -> &WavelengthGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }
}

/// Linear interpolation of `s` at the centres of `target`.
pub fn resample_spectrum(s: &Spectrum, target: &WavelengthGrid) -> Result<Spectrum> {
    let src = s.grid();
    let tol = 1e-9 * src.lambda_max().abs().max(1.0);
    if target.lambda_min() < src.lambda_min() - tol || target.lambda_max() > src.lambda_max() + tol {
        return Err(Error::validation(format!(
            "target grid {}..{} nm extends beyond source {}..{} nm",
            target.lambda_min(),
            target.lambda_max(),
            src.lambda_min(),
            src.lambda_max()
        )));
    }
    if src == target {
        return Ok(s.clone());
    }
    let v = s.values();
    let last = src.bands() - 1;
    let out = target
        .centers()
        .into_iter()
        .map(|lambda| {
            if last == 0 {
                return v[0];
            }
            let t = src.index_of(lambda).clamp(0.0, last as f64);
            let i = (t.floor() as usize).min(last - 1);
            let frac = t - i as f64;
            v[i] * (1.0 - frac) + v[i + 1] * frac
        })
        .collect();
    Spectrum::new(*target, out)
}

/// Scene illuminant `L(λ)` and the optical system response `c(λ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct IlluminantAndResponse {
    illuminant: Spectrum,
    response: Spectrum,
}

impl IlluminantAndResponse {
    pub fn new(illuminant: Spectrum, response: Spectrum) -> Result<Self> {
        if illuminant.grid() != response.grid() {
            return Err(Error::GridMismatch);
        }
        Ok(Self { illuminant, response })
    }

    /// Flat illuminant and flat response.
    pub fn flat(grid: WavelengthGrid) -> Self {
        Self { illuminant: Spectrum::ones(grid), response: Spectrum::ones(grid) }
    }

    pub fn illuminant(&self) -> &Spectrum {
        &self.illuminant
    }

    pub fn response(&self) -> &Spectrum {
        &self.response
    }

    pub fn grid(&self) -> &WavelengthGrid {
        self.illuminant.grid()
    }
}
