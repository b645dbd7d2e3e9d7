use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fft;
use crate::hsi::HsiCube;
use crate::image::{Image, Kernel2D};

use super::CodedApertureModel;

/// Kernels with more taps than this go through the FFT path.
const DIRECT_TAPS_LIMIT: usize = 81;

pub(crate) fn convolve_auto(kernel: &Kernel2D, img: &Image) -> Image {
    if kernel.is_delta() {
        img.clone()
    } else if kernel.data().len() <= DIRECT_TAPS_LIMIT {
        kernel.convolve_same(img)
    } else {
        fft::convolve_same(kernel, img)
    }
}

/// `Ĥ`: each band convolved with its PSF, then every pixel spectrum
/// convolved with the spectral kernel. Same-size output, zero padding
/// outside the field and the band range.
pub fn apply_coded_blur(cube: &HsiCube, ap: &CodedApertureModel) -> Result<HsiCube> {
    if cube.grid() != ap.grid() {
        return Err(Error::GridMismatch);
    }
    if ap.is_identity() {
        return Ok(cube.clone());
    }
    let blurred: Vec<Image> = (0..cube.bands())
        .into_par_iter()
        .map(|b| convolve_auto(ap.psf(b), &cube.band_plane(b)))
        .collect();
    let spatial = assemble(cube, &blurred);
    let k = ap.spectral_kernel();
    let bands = cube.bands();
    let mut out = vec![0.0; spatial.len()];
    if k.is_identity() {
        out.copy_from_slice(&spatial);
    } else {
        out.par_chunks_mut(bands)
            .zip(spatial.par_chunks(bands))
            .for_each(|(o, px)| k.convolve(px, o));
    }
    // Round-off in the FFT path can leave values like -1e-17.
    out.iter_mut().for_each(|v| *v = v.max(0.0));
    HsiCube::new(cube.width(), cube.height(), *cube.grid(), out)
}

fn assemble(cube: &HsiCube, planes: &[Image]) -> Vec<f64> {
    let b = cube.bands();
    let mut data = vec![0.0; cube.pixels() * b];
    for (band, plane) in planes.iter().enumerate() {
        for (p, v) in plane.data().iter().enumerate() {
            data[p * b + band] = *v;
        }
    }
    data
}
