//! Calibration routines against forward simulation.

use specbench::calibration::{
    calibrate_spectral, estimate_code, estimate_psf, kernel_total_variation, laser_capture, measure_mtf,
    pinhole_image, sector_star, CalibrationConfig, DEFAULT_CODE_THRESHOLD, DEFAULT_SPOKES, DEFAULT_SUPPORT_FRACTION,
};
use specbench::hsi::{IlluminantAndResponse, WavelengthGrid};
use specbench::image::Kernel2D;
use specbench::optics::{build_aperture_model, default_mask, ApertureGeometry, CodedApertureModel, SpectralKernel};

#[test]
fn code_survives_five_percent_noise() {
    let grid = WavelengthGrid::new(600.0, 900.0, 60).unwrap();
    // Runs of at least three open or closed taps.
    let bits = "1110001111000111";
    let taps: Vec<f64> = bits.chars().map(|c| if c == '1' { 1.0 } else { 0.0 }).collect();
    let n: f64 = taps.iter().sum();
    let k = SpectralKernel::centered(taps.iter().map(|t| t / n).collect()).unwrap();
    let ap = CodedApertureModel::with_kernels(grid, k, vec![Kernel2D::delta(); 60]).unwrap();
    let ir = IlluminantAndResponse::flat(grid);
    for seed in 0..100 {
        let cfg = CalibrationConfig { noise_fraction: 0.05, seed, ..CalibrationConfig::default() };
        let cap = laser_capture(&ap, &ir, grid.center(30), &cfg, 0).unwrap();
        let code = estimate_code(&cap, DEFAULT_CODE_THRESHOLD).unwrap();
        let got = code.to_bits();
        let flips = if got.len() == bits.len() {
            got.chars().zip(bits.chars()).filter(|(a, b)| a != b).count()
        } else {
            usize::MAX
        };
        assert!(flips <= 1, "seed {seed}: {got}");
    }
}

#[test]
fn wavelength_mapping_recovers_grid() {
    let grid = WavelengthGrid::default_nir();
    let ap = build_aperture_model(&default_mask(), ApertureGeometry::matched_to(&grid), grid).unwrap();
    let (_, mapping, _) = calibrate_spectral(&ap, &IlluminantAndResponse::flat(grid), &CalibrationConfig::default()).unwrap();
    assert!((mapping.slope / grid.delta() - 1.0).abs() < 0.02, "{mapping:?}");
    assert!((mapping.intercept - grid.lambda_min()).abs() < grid.delta(), "{mapping:?}");
}

#[test]
fn pinhole_recovers_centre_band_psf() {
    let grid = WavelengthGrid::default_nir();
    let ap = build_aperture_model(&default_mask(), ApertureGeometry::matched_to(&grid), grid).unwrap();
    let truth = ap.psf(grid.bands() / 2);
    let (w, h) = (3 * truth.width(), 3 * truth.height());
    let est = estimate_psf(&pinhole_image(truth, w, h, w / 2, h / 2).unwrap(), DEFAULT_SUPPORT_FRACTION).unwrap();
    assert!(kernel_total_variation(&est, truth) < 1e-3);
}

#[test]
fn blur_never_raises_contrast() {
    let star = sector_star(128, DEFAULT_SPOKES).unwrap();
    let raw = measure_mtf(&star, DEFAULT_SPOKES).unwrap();
    for size in [3, 5] {
        let k = Kernel2D::centered(size, size, vec![1.0; size * size]).unwrap().normalized().unwrap();
        let blurred = measure_mtf(&k.convolve_circular(&star), DEFAULT_SPOKES).unwrap();
        for (b, a) in blurred.points.iter().zip(&raw.points) {
            assert!(b.1 <= a.1 + 0.02, "{b:?} vs {a:?}");
        }
    }
}
