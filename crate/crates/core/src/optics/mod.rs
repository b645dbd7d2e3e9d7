//! Forward model of the programmable spectral-filter camera.

mod acquire;
mod aperture;
mod blur;
mod capture;
pub mod mask;
mod slm;

pub use acquire::{
    acquire_measurements, quantization_bound, sidecar_path, single_band_profile, AcquisitionPlan, MeasurementSet,
};
pub use aperture::{build_aperture_model, ApertureGeometry, CodedApertureModel, SpectralKernel};
pub use blur::apply_coded_blur;
pub use capture::{add_sensor_noise, capture_filtered_image, project, rainbow_plane_spectrum, sum_image, NoiseModel};
pub use mask::{coded_mask, decode_pbm, default_mask, encode_pbm, load_pbm, BinaryMask};
pub use slm::{column_transmittance, encode_filter_to_slm, SlmEncoding, SlmPatternPair};
