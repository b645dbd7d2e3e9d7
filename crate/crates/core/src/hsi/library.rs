//! Spectrum libraries.
//!
//! The five-material set mirrors the material classes of the lab
//! experiments (cardboard, varnished wood, wood-textured paper, real and
//! plastic plants) with smooth Gaussian-mixture surrogates. The shapes are
//! invented for simulation; they are not measured reflectances.

use rand::Rng as _;

use crate::error::Result;
use crate::rng;

use super::{Spectrum, WavelengthGrid};

pub const MATERIAL_NAMES: [&str; 5] = ["cardboard", "wood", "fake_wood", "plant", "fake_plant"];

fn gauss(lambda: f64, center: f64, width: f64) -> f64 {
    (-0.5 * ((lambda - center) / width).powi(2)).exp()
}

fn sigmoid(lambda: f64, edge: f64, width: f64) -> f64 {
    1.0 / (1.0 + (-(lambda - edge) / width).exp())
}

/// Surrogate reflectance for one of [`MATERIAL_NAMES`].
pub fn material_spectrum(grid: WavelengthGrid, class: usize) -> Result<Spectrum> {
    let f: fn(f64) -> f64 = match class % 5 {
        // Dark, nearly flat, slowly rising.
        0 => |l| 0.08 + 0.04 * (l - 600.0) / 300.0 + 0.02 * gauss(l, 820.0, 60.0),
        // Warm wood: rises through the red, broad NIR plateau.
        1 => |l| 0.25 + 0.35 * sigmoid(l, 680.0, 30.0) + 0.05 * gauss(l, 760.0, 40.0),
        // Printed paper: similar to wood in the red, drops in the NIR.
        2 => |l| 0.25 + 0.30 * sigmoid(l, 670.0, 25.0) - 0.15 * sigmoid(l, 800.0, 30.0) + 0.04 * gauss(l, 740.0, 30.0),
        // Vegetation: chlorophyll trough then the red edge near 715 nm.
        3 => |l| 0.05 + 0.50 * sigmoid(l, 715.0, 12.0) - 0.03 * gauss(l, 670.0, 15.0) + 0.03 * gauss(l, 880.0, 50.0),
        // Plastic foliage: pigment dip but no red edge.
        _ => |l| 0.12 + 0.10 * sigmoid(l, 690.0, 40.0) - 0.04 * gauss(l, 650.0, 25.0) + 0.06 * gauss(l, 850.0, 70.0),
    };
    Spectrum::from_fn(grid, |l| f(l).max(0.0))
}

pub fn material_library(grid: WavelengthGrid) -> Result<Vec<Spectrum>> {
    (0..MATERIAL_NAMES.len()).map(|k| material_spectrum(grid, k)).collect()
}

/// Smooth positive spectrum: offset plus `bumps` random Gaussians.
pub fn random_smooth_spectrum(grid: WavelengthGrid, bumps: usize, seed: u64) -> Result<Spectrum> {
    let mut r = rng::stream(seed, 4);
    let (lo, hi) = (grid.lambda_min(), grid.lambda_max());
    let span = (hi - lo).max(1.0);
    let base = r.random_range(0.1..0.4);
    let terms: Vec<(f64, f64, f64)> = (0..bumps)
        .map(|_| (r.random_range(0.1..0.8), r.random_range(lo..=hi), r.random_range(0.03..0.2) * span))
        .collect();
    Spectrum::from_fn(grid, |l| base + terms.iter().map(|&(a, c, w)| a * gauss(l, c, w)).sum::<f64>())
}
