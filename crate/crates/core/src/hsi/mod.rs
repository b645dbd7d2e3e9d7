//! Hyperspectral data model, file formats, and scene synthesis.

mod cube;
mod grid;
pub mod io;
mod labels;
pub mod library;
mod spectrum;
pub mod synth;

pub use cube::{apply_illumination, HsiCube};
pub use grid::WavelengthGrid;
pub use labels::{AbundanceMap, LabelMap};
pub use spectrum::{resample_spectrum, IlluminantAndResponse, Spectrum};
