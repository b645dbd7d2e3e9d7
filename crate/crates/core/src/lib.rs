//! Simulation workbench for a programmable spectral-filter camera.
//!
//! The camera places a spatial light modulator on the rainbow plane of a
//! coded-aperture 4f relay, so every captured frame is the scene's
//! hyperspectral image integrated against an arbitrary spectral profile.
//! Material classification then needs only the handful of projections a
//! linear classifier (or the first layer of a small network) consumes,
//! instead of the full cube.
//!
//! Modules:
//! - [`hsi`]: wavelength grids, spectra, cubes, label maps, file formats,
//!   and scene synthesis.
//! - [`optics`]: coded-aperture blur, SLM-programmed capture, sensor noise,
//!   column-height SLM encoding, and the measurement plan.
//! - [`calibration`]: code and wavelength calibration from laser captures,
//!   PSF estimation, Wiener deconvolution, and MTF measurement.
//! - [`learn`]: dataset splits, one-vs-all linear SVM, PCA, the shallow
//!   network whose first layer is the filter bank, and filter extraction.
//! - [`eval`]: feature normalization, per-pixel inference, ROC/AUC,
//!   confusion matrices, the scan baseline, and filter-count sweeps.

pub mod calibration;
pub mod error;
pub mod fft;
pub mod eval;
pub mod hsi;
pub mod image;
pub mod kv;
pub mod learn;
pub mod optics;
pub mod rng;

pub use error::{Error, Result};
