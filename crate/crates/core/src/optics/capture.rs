//! Filtered capture on the sensor plane and sensor noise.

use rand_distr::{Distribution, Normal, Poisson};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hsi::{HsiCube, IlluminantAndResponse, Spectrum};
use crate::image::Image;
use crate::rng::{self, Rng};

use super::CodedApertureModel;

/// Shot plus read noise, anchored to a photon budget.
///
/// `peak_photons` is the expected photon count of the brightest noiseless
/// pixel of the sum image. When an acquisition needs several frames, the
/// budget is split evenly across them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    pub peak_photons: f64,
    /// Read noise in electrons RMS.
    pub read_sigma: f64,
    pub seed: u64,
}

impl NoiseModel {
    pub fn new(peak_photons: f64, read_sigma: f64, seed: u64) -> Result<Self> {
        let m = Self { peak_photons, read_sigma, seed };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.peak_photons > 0.0) || !self.peak_photons.is_finite() {
            return Err(Error::validation("peak_photons must be positive and finite"));
        }
        if !(self.read_sigma >= 0.0) || !self.read_sigma.is_finite() {
            return Err(Error::validation("read_sigma must be non-negative and finite"));
        }
        Ok(())
    }

    /// Photons per unit signal when the brightest sum-image pixel is
    /// `sum_peak` and this frame receives `1 / frames` of the budget.
    pub fn photon_scale(&self, sum_peak: f64, frames: usize) -> f64 {
        let budget = self.peak_photons / frames.max(1) as f64;
        if sum_peak > 0.0 {
            budget / sum_peak
        } else {
            budget
        }
    }
}

/// Replace each pixel `v` by `(Poisson(scale·v) + N(0, read_sigma)) / scale`.
pub fn add_sensor_noise(img: &Image, scale: f64, read_sigma: f64, rng: &mut Rng) -> Result<Image> {
    let read = Normal::new(0.0, read_sigma).map_err(|e| Error::validation(e.to_string()))?;
    let mut out = img.clone();
    for v in out.data_mut() {
        let mean = (*v * scale).max(0.0);
        let photons = if mean > 0.0 {
            Poisson::new(mean).map_err(|e| Error::validation(e.to_string()))?.sample(rng)
        } else {
            0.0
        };
        let electrons = if read_sigma > 0.0 { photons + read.sample(rng) } else { photons };
        *v = electrons / scale;
    }
    Ok(out)
}

fn check_profile(profile: &[f64]) -> Result<()> {
    if let Some(i) = profile.iter().position(|v| !(0.0..=1.0).contains(v)) {
        return Err(Error::validation(format!(
            "SLM transmittance {} at band {i} outside [0, 1]",
            profile[i]
        )));
    }
    Ok(())
}

/// Noiseless `Σ_λ Ĥ(x, y, λ) · s(λ) · c(λ) · Δλ` for an arbitrary (possibly
/// signed) weight vector; the building block of every capture.
pub fn project(cube: &HsiCube, weights: &[f64], ir: &IlluminantAndResponse) -> Result<Image> {
    if cube.grid() != ir.grid() {
        return Err(Error::GridMismatch);
    }
    if weights.len() != cube.bands() {
        return Err(Error::dim(format!("{} weights for {} bands", weights.len(), cube.bands())));
    }
    let dl = cube.grid().delta();
    let eff: Vec<f64> = weights.iter().zip(ir.response().values()).map(|(s, c)| s * c * dl).collect();
    let data: Vec<f64> = (0..cube.pixels())
        .into_par_iter()
        .map(|p| cube.pixel_at(p).iter().zip(&eff).map(|(h, w)| h * w).sum())
        .collect();
    Image::from_vec(cube.width(), cube.height(), data)
}

/// Noiseless sum image (all-ones SLM profile).
pub fn sum_image(cube: &HsiCube, ir: &IlluminantAndResponse) -> Result<Image> {
    project(cube, &vec![1.0; cube.bands()], ir)
}

/// Image captured with SLM transmittance profile `s` loaded on the
/// rainbow plane. `cube_hat` is the already-blurred cube.
///
/// With noise, the photon scale maps the brightest noiseless sum-image
/// pixel to `peak_photons`; the draw is deterministic in the seed.
pub fn capture_filtered_image(
    cube_hat: &HsiCube,
    s: &Spectrum,
    ir: &IlluminantAndResponse,
    noise: Option<&NoiseModel>,
) -> Result<Image> {
    if s.grid() != cube_hat.grid() {
        return Err(Error::GridMismatch);
    }
    check_profile(s.values())?;
    let clean = project(cube_hat, s.values(), ir)?;
    match noise {
        None => Ok(clean),
        Some(n) => {
            n.validate()?;
            let scale = n.photon_scale(sum_image(cube_hat, ir)?.max(), 1);
            add_sensor_noise(&clean, scale, n.read_sigma, &mut rng::stream(n.seed, 0))
        }
    }
}

/// 1D signal on the rainbow plane: spatially integrated spectrum times the
/// system response, blurred by the spectral code.
pub fn rainbow_plane_spectrum(cube: &HsiCube, ap: &CodedApertureModel, ir: &IlluminantAndResponse) -> Result<Spectrum> {
    if cube.grid() != ap.grid() || cube.grid() != ir.grid() {
        return Err(Error::GridMismatch);
    }
    let weighted: Vec<f64> = cube
        .spatial_sum()
        .iter()
        .zip(ir.response().values())
        .map(|(s, c)| s * c)
        .collect();
    let mut out = vec![0.0; weighted.len()];
    ap.spectral_kernel().convolve(&weighted, &mut out);
    Spectrum::new(*cube.grid(), out.into_iter().map(|v| v.max(0.0)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hsi::WavelengthGrid;
    use crate::optics::SpectralKernel;

    fn g(b: usize) -> WavelengthGrid {
        WavelengthGrid::new(1.0, b as f64, b).unwrap()
    }

    #[test]
    fn plain_and_masked_sums() {
        let grid = g(3);
        let cube = HsiCube::new(1, 1, grid, vec![1.0, 2.0, 4.0]).unwrap();
        let ir = IlluminantAndResponse::flat(grid);
        let img = capture_filtered_image(&cube, &Spectrum::ones(grid), &ir, None).unwrap();
        assert_eq!(img.data(), &[7.0]);

        let grid = g(4);
        let cube = HsiCube::new(1, 1, grid, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let s = Spectrum::new(grid, vec![0.0, 1.0, 0.0, 1.0]).unwrap();
        let img = capture_filtered_image(&cube, &s, &IlluminantAndResponse::flat(grid), None).unwrap();
        assert_eq!(img.data(), &[6.0]);
    }

    #[test]
    fn profile_must_be_transmittance() {
        let grid = g(2);
        let cube = HsiCube::zeros(1, 1, grid);
        let s = Spectrum::new(grid, vec![0.5, 1.5]).unwrap();
        assert!(capture_filtered_image(&cube, &s, &IlluminantAndResponse::flat(grid), None).is_err());
    }

    #[test]
    fn noisy_capture_is_seed_deterministic() {
        let grid = g(4);
        let cube = HsiCube::new(2, 1, grid, vec![1.0, 2.0, 3.0, 4.0, 0.5, 0.5, 0.5, 0.5]).unwrap();
        let ir = IlluminantAndResponse::flat(grid);
        let s = Spectrum::ones(grid);
        let n1 = NoiseModel::new(1000.0, 2.0, 11).unwrap();
        let a = capture_filtered_image(&cube, &s, &ir, Some(&n1)).unwrap();
        let b = capture_filtered_image(&cube, &s, &ir, Some(&n1)).unwrap();
        assert_eq!(a, b);
        let n2 = NoiseModel { seed: 12, ..n1 };
        assert_ne!(a, capture_filtered_image(&cube, &s, &ir, Some(&n2)).unwrap());
    }

    #[test]
    fn rainbow_plane_cases() {
        let grid = g(3);
        let ir = IlluminantAndResponse::flat(grid);
        let ap = CodedApertureModel::identity(grid);
        let one = HsiCube::new(1, 1, grid, vec![1.0, 2.0, 3.0]).unwrap();
        assert_eq!(rainbow_plane_spectrum(&one, &ap, &ir).unwrap().values(), &[1.0, 2.0, 3.0]);
        let two = HsiCube::new(2, 1, grid, vec![1.0, 0.0, 0.0, 0.0, 0.0, 1.0]).unwrap();
        assert_eq!(rainbow_plane_spectrum(&two, &ap, &ir).unwrap().values(), &[1.0, 0.0, 1.0]);
    }

    #[test]
    fn monochromatic_flat_scene_reveals_the_code() {
        let grid = g(12);
        let code = [1.0, 0.0, 1.0, 1.0, 0.0];
        let k = SpectralKernel::centered(code.iter().map(|c| c / 3.0).collect()).unwrap();
        let ap = CodedApertureModel::with_kernels(grid, k.clone(), vec![crate::image::Kernel2D::delta(); 12]).unwrap();
        let mut data = vec![0.0; 4 * 12];
        for p in 0..4 {
            data[p * 12 + 5] = 1.0;
        }
        let cube = HsiCube::new(2, 2, grid, data).unwrap();
        let out = rainbow_plane_spectrum(&cube, &ap, &IlluminantAndResponse::flat(grid)).unwrap();
        // Laser at band 5, origin 2: tap j lands on band 5 + j - 2.
        let expected: Vec<f64> = (0..12)
            .map(|b| {
                let j = b as isize - 5 + 2;
                if (0..5).contains(&j) { 4.0 * code[j as usize] / 3.0 } else { 0.0 }
            })
            .collect();
        for (a, e) in out.values().iter().zip(&expected) {
            assert!((a - e).abs() < 1e-12);
        }
    }
}
