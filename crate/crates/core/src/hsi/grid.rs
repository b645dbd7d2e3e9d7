use crate::error::{Error, Result};

/// Uniform wavelength sampling `lambda_min..=lambda_max` with `bands`
/// centres, in nanometres.
///
/// A single-band grid has `lambda_min == lambda_max` and a unit
/// integration weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WavelengthGrid {
    lambda_min: f64,
    lambda_max: f64,
    bands: usize,
}

impl WavelengthGrid {
    pub fn new(lambda_min: f64, lambda_max: f64, bands: usize) -> Result<Self> {
        if bands == 0 {
            return Err(Error::validation("wavelength grid needs at least one band"));
        }
        if !lambda_min.is_finite() || !lambda_max.is_finite() {
            return Err(Error::validation("wavelength bounds must be finite"));
        }
        if bands == 1 && lambda_min != lambda_max {
            return Err(Error::validation("single-band grid must have lambda_min == lambda_max"));
        }
        if bands > 1 && !(lambda_max > lambda_min) {
            return Err(Error::validation("lambda_max must exceed lambda_min"));
        }
        Ok(Self { lambda_min, lambda_max, bands })
    }

    /// 600–900 nm sampled at 100 bands.
    pub fn default_nir() -> Self {
        Self { lambda_min: 600.0, lambda_max: 900.0, bands: 100 }
    }

    pub fn lambda_min(&self) -> f64 {
        self.lambda_min
    }

    pub fn lambda_max(&self) -> f64 {
        self.lambda_max
    }

    pub fn bands(&self) -> usize {
        self.bands
    }

    /// Band pitch, also the Riemann weight of every band.
    pub fn delta(&self) -> f64 {
        if self.bands == 1 {
            1.0
        } else {
            (self.lambda_max - self.lambda_min) / (self.bands - 1) as f64
        }
    }

    pub fn center(&self, i: usize) -> f64 {
        if i + 1 == self.bands {
            self.lambda_max
        } else {
            self.lambda_min + i as f64 * self.delta()
        }
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.bands).map(|i| self.center(i)).collect()
    }

    /// Fractional band index of a wavelength.
    pub fn index_of(&self, lambda: f64) -> f64 {
        if self.bands == 1 {
            0.0
        } else {
            (lambda - self.lambda_min) / self.delta()
        }
    }

    pub fn contains(&self, lambda: f64) -> bool {
        lambda >= self.lambda_min && lambda <= self.lambda_max
    }

    /// Rebuild a grid from stored centres, checking they are uniform to
    /// within `tol` nanometres.
    pub fn from_centers(centers: &[f64], tol: f64) -> Result<Self> {
        let (first, last) = match (centers.first(), centers.last()) {
            (Some(f), Some(l)) => (*f, *l),
            _ => return Err(Error::validation("empty wavelength list")),
        };
        let grid = Self::new(first, last, centers.len())?;
        for (i, c) in centers.iter().enumerate() {
            if (c - grid.center(i)).abs() > tol {
                return Err(Error::validation(format!(
                    "wavelength centres not uniform at band {i}: {c} vs {}",
                    grid.center(i)
                )));
            }
        }
        Ok(grid)
    }
}

impl Default for WavelengthGrid {
    fn default() -> Self {
        Self::default_nir()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid_invariants() {
        let g = WavelengthGrid::default();
        let c = g.centers();
        assert_eq!(c.len(), 100);
        assert_eq!(c[0], 600.0);
        assert_eq!(c[99], 900.0);
        for w in c.windows(2) {
            assert!(w[1] > w[0]);
            assert!((w[1] - w[0] - g.delta()).abs() < 1e-9);
        }
        assert!((g.delta() - 3.0303).abs() < 1e-4);
    }

    #[test]
    fn single_band() {
        let g = WavelengthGrid::new(750.0, 750.0, 1).unwrap();
        assert_eq!(g.centers(), vec![750.0]);
        assert_eq!(g.delta(), 1.0);
        assert!(WavelengthGrid::new(700.0, 750.0, 1).is_err());
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(WavelengthGrid::new(600.0, 900.0, 0).is_err());
        assert!(WavelengthGrid::new(900.0, 600.0, 4).is_err());
        assert!(WavelengthGrid::new(f64::NAN, 600.0, 4).is_err());
    }

    #[test]
    fn from_centers_checks_uniformity() {
        let g = WavelengthGrid::new(600.0, 900.0, 256).unwrap();
        let f32_centers: Vec<f64> = g.centers().iter().map(|&c| c as f32 as f64).collect();
        assert_eq!(WavelengthGrid::from_centers(&f32_centers, 1e-3).unwrap(), g);
        assert!(WavelengthGrid::from_centers(&[600.0, 601.0, 610.0], 1e-3).is_err());
    }
}
