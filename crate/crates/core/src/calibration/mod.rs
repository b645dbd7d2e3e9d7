//! Simulated calibration: code and wavelength calibration from laser
//! captures, PSF estimation from a pinhole, and the deconvolution MTF
//! experiment.

mod mtf;
mod psf;
mod spectral;

pub use mtf::{measure_mtf, sector_star, MtfCurve, DEFAULT_SPOKES, DEFAULT_STAR_SIZE, MTF30_LEVEL};
pub use psf::{
    estimate_psf, kernel_total_variation, pinhole_image, wiener_deconvolve, DEFAULT_SUPPORT_FRACTION,
    DEFAULT_WIENER_NSR,
};
pub use spectral::{
    calibrate_wavelengths, deconvolve_spectrum, estimate_code, laser_scene, line_index, localize_laser, locate_peak,
    simulate_laser_capture, code_touches_edge, BinaryCode, WavelengthMapping, DEFAULT_CODE_THRESHOLD,
};

use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::hsi::{IlluminantAndResponse, Spectrum};
use crate::image::Kernel2D;
use crate::kv::{self, KvDoc};
use crate::optics::CodedApertureModel;
use crate::rng;

/// Regularization of the 1D code deconvolution.
pub const DEFAULT_SPECTRAL_NSR: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationConfig {
    pub calibration_lasers: [f64; 2],
    /// Laser used for code estimation, snapped to its nearest band centre.
    /// `None` picks the band next to a calibration laser that lies farthest
    /// from the band edges.
    pub code_laser: Option<f64>,
    pub validation_lasers: Vec<f64>,
    pub code_threshold: f64,
    pub spectral_nsr: f64,
    pub wiener_nsr: f64,
    /// Gaussian noise on laser captures, as a fraction of each capture's
    /// peak.
    pub noise_fraction: f64,
    pub seed: u64,
    pub star_size: usize,
    pub spokes: usize,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        Self {
            calibration_lasers: [635.0, 850.0],
            code_laser: None,
            validation_lasers: vec![780.0, 830.0],
            code_threshold: DEFAULT_CODE_THRESHOLD,
            spectral_nsr: DEFAULT_SPECTRAL_NSR,
            wiener_nsr: DEFAULT_WIENER_NSR,
            noise_fraction: 0.0,
            seed: 0,
            star_size: DEFAULT_STAR_SIZE,
            spokes: DEFAULT_SPOKES,
        }
    }
}

/// A validation laser: true wavelength, estimate, and the error in bands.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaserCheck {
    pub wavelength_nm: f64,
    pub estimated_nm: f64,
    pub error_bands: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationReport {
    pub estimated_code: BinaryCode,
    pub mapping: WavelengthMapping,
    pub validation: Vec<LaserCheck>,
    pub psf_estimate: Kernel2D,
    /// Total variation between the estimated and true centre-band PSF.
    pub psf_error: f64,
    pub mtf_raw: MtfCurve,
    pub mtf_deconvolved: MtfCurve,
    pub mtf30_raw: f64,
    pub mtf30_deconvolved: f64,
}

impl CalibrationReport {
    pub fn to_kv(&self) -> KvDoc {
        let mut d = KvDoc::new();
        d.set("estimated_code", self.estimated_code.to_bits());
        d.set("code_offset", self.estimated_code.offset);
        d.set("mapping_slope_nm", self.mapping.slope);
        d.set("mapping_intercept_nm", self.mapping.intercept);
        d.set("validation_lasers_nm", kv::join(&self.validation.iter().map(|c| c.wavelength_nm).collect::<Vec<_>>()));
        d.set("validation_estimates_nm", kv::join(&self.validation.iter().map(|c| c.estimated_nm).collect::<Vec<_>>()));
        d.set("validation_error_bands", kv::join(&self.validation.iter().map(|c| c.error_bands).collect::<Vec<_>>()));
        d.set("psf_size", format!("{}x{}", self.psf_estimate.width(), self.psf_estimate.height()));
        d.set("psf_tv_error", self.psf_error);
        d.set("mtf30_raw", self.mtf30_raw);
        d.set("mtf30_deconvolved", self.mtf30_deconvolved);
        d
    }
}

fn noisy(capture: Spectrum, fraction: f64, rng: &mut rng::Rng) -> Result<Spectrum> {
    if fraction == 0.0 {
        return Ok(capture);
    }
    let normal = Normal::new(0.0, fraction * capture.max()).map_err(|e| Error::validation(e.to_string()))?;
    let grid = *capture.grid();
    Spectrum::new(grid, capture.into_values().into_iter().map(|v| (v + normal.sample(rng)).max(0.0)).collect())
}

/// Capture of a laser through the aperture, with optional noise drawn
/// from stream `stream` of the config seed. Noisy readings clip at zero.
pub fn laser_capture(
    ap: &CodedApertureModel,
    ir: &IlluminantAndResponse,
    wavelength_nm: f64,
    cfg: &CalibrationConfig,
    stream: u64,
) -> Result<Spectrum> {
    noisy(simulate_laser_capture(ap, ir, wavelength_nm)?, cfg.noise_fraction, &mut rng::stream(cfg.seed, stream))
}

/// Code estimation from a single-band laser, mapping fit and validation.
/// Fails when the estimated code reaches a band edge, since part of it
/// may then be missing.
pub fn calibrate_spectral(
    ap: &CodedApertureModel,
    ir: &IlluminantAndResponse,
    cfg: &CalibrationConfig,
) -> Result<(BinaryCode, WavelengthMapping, Vec<LaserCheck>)> {
    let grid = ap.grid();
    if !(0.0..0.5).contains(&cfg.noise_fraction) {
        return Err(Error::validation("noise fraction must be in [0, 0.5)"));
    }
    let last = grid.bands() - 1;
    let margin = |b: usize| b.min(last - b);
    let band = match cfg.code_laser {
        Some(l) => grid.index_of(l).round().clamp(0.0, last as f64) as usize,
        // Either neighbouring band centre of each calibration laser.
        None => cfg
            .calibration_lasers
            .iter()
            .flat_map(|&l| {
                let i = grid.index_of(l).clamp(0.0, last as f64);
                [i.floor() as usize, i.ceil() as usize]
            })
            .max_by_key(|&b| margin(b))
            .expect("two lasers"),
    };
    let code = estimate_code(&laser_capture(ap, ir, grid.center(band), cfg, 0)?, cfg.code_threshold)?;
    if code_touches_edge(&code, grid.bands()) {
        return Err(Error::validation(format!(
            "code laser at band {band} puts the code against a band edge; choose one nearer mid-range"
        )));
    }
    let [l1, l2] = cfg.calibration_lasers;
    let c1 = laser_capture(ap, ir, l1, cfg, 1)?;
    let c2 = laser_capture(ap, ir, l2, cfg, 2)?;
    let mapping = calibrate_wavelengths([(l1, &c1), (l2, &c2)], &code, cfg.spectral_nsr)?;
    let mut checks = Vec::with_capacity(cfg.validation_lasers.len());
    for (i, &l) in cfg.validation_lasers.iter().enumerate() {
        let cap = laser_capture(ap, ir, l, cfg, 3 + i as u64)?;
        let est = localize_laser(&cap, &code, &mapping, cfg.spectral_nsr)?;
        checks.push(LaserCheck { wavelength_nm: l, estimated_nm: est, error_bands: (est - l).abs() / grid.delta() });
    }
    Ok((code, mapping, checks))
}

/// Sector star blurred (periodically) by `psf`, measured before and after
/// Wiener deconvolution with the same kernel.
pub fn mtf_experiment(psf: &Kernel2D, cfg: &CalibrationConfig) -> Result<(MtfCurve, MtfCurve)> {
    let star = sector_star(cfg.star_size, cfg.spokes)?;
    let blurred = psf.convolve_circular(&star);
    let raw = measure_mtf(&blurred, cfg.spokes)?;
    let deconvolved = measure_mtf(&wiener_deconvolve(&blurred, psf, cfg.wiener_nsr)?, cfg.spokes)?;
    Ok((raw, deconvolved))
}

/// The whole loop on one aperture: spectral calibration, PSF estimation
/// from a pinhole at the centre band, and the MTF experiment with the
/// estimated PSF.
pub fn run_calibration(
    ap: &CodedApertureModel,
    ir: &IlluminantAndResponse,
    cfg: &CalibrationConfig,
) -> Result<CalibrationReport> {
    let (estimated_code, mapping, validation) = calibrate_spectral(ap, ir, cfg)?;
    let truth = ap.psf(ap.grid().bands() / 2);
    let (w, h) = (3 * truth.width().max(8), 3 * truth.height().max(8));
    let pinhole = pinhole_image(truth, w, h, w / 2, h / 2)?;
    let psf_estimate = estimate_psf(&pinhole, DEFAULT_SUPPORT_FRACTION)?;
    let psf_error = kernel_total_variation(&psf_estimate, truth);
    let (mtf_raw, mtf_deconvolved) = mtf_experiment(&psf_estimate, cfg)?;
    Ok(CalibrationReport {
        estimated_code,
        mapping,
        validation,
        psf_error,
        mtf30_raw: mtf_raw.mtf30(),
        mtf30_deconvolved: mtf_deconvolved.mtf30(),
        psf_estimate,
        mtf_raw,
        mtf_deconvolved,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hsi::WavelengthGrid;
    use crate::optics::{build_aperture_model, default_mask, ApertureGeometry};

    #[test]
    fn default_loop_closes() {
        let grid = WavelengthGrid::default_nir();
        let ap = build_aperture_model(&default_mask(), ApertureGeometry::matched_to(&grid), grid).unwrap();
        let cfg = CalibrationConfig { spectral_nsr: 1e-9, star_size: 128, ..Default::default() };
        let r = run_calibration(&ap, &IlluminantAndResponse::flat(grid), &cfg).unwrap();
        assert!((r.mapping.slope - grid.delta()).abs() < 1e-6 * grid.delta(), "{:?}", r.mapping);
        for c in &r.validation {
            assert!(c.error_bands < 1e-4, "{c:?}");
        }
        assert!(r.psf_error < 1e-3, "{}", r.psf_error);
        assert!(r.mtf30_deconvolved > r.mtf30_raw, "{} {}", r.mtf30_raw, r.mtf30_deconvolved);
        assert!(r.to_kv().get("mtf30_raw").is_some());
    }
}
