use crate::error::{Error, Result};
use crate::image::Image;

use super::{IlluminantAndResponse, WavelengthGrid};

/// Hyperspectral cube `H(x, y, λ)`.
///
/// Stored pixel-interleaved: the spectrum of pixel `(x, y)` is the
/// contiguous slice at `(y * width + x) * bands`.
#[derive(Debug, Clone, PartialEq)]
pub struct HsiCube {
    width: usize,
    height: usize,
    grid: WavelengthGrid,
    data: Vec<f64>,
}

impl HsiCube {
    pub fn new(width: usize, height: usize, grid: WavelengthGrid, data: Vec<f64>) -> Result<Self> {
        let expected = width * height * grid.bands();
        if data.len() != expected {
            return Err(Error::dim(format!(
                "cube {width}x{height}x{} needs {expected} values, got {}",
                grid.bands(),
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index: i });
        }
        if let Some(i) = data.iter().position(|v| *v < 0.0) {
            return Err(Error::validation(format!("negative cube value at index {i}")));
        }
        Ok(Self { width, height, grid, data })
    }

    pub fn zeros(width: usize, height: usize, grid: WavelengthGrid) -> Self {
        Self { width, height, grid, data: vec![0.0; width * height * grid.bands()] }
    }

    /// Assemble from band planes (each `width x height`).
    pub fn from_planes(grid: WavelengthGrid, planes: &[Image]) -> Result<Self> {
        if planes.len() != grid.bands() {
            return Err(Error::dim(format!("{} planes for {} bands", planes.len(), grid.bands())));
        }
        let (w, h) = (planes[0].width(), planes[0].height());
        if planes.iter().any(|p| p.width() != w || p.height() != h) {
            return Err(Error::dim("band planes differ in size"));
        }
        let b = grid.bands();
        let mut data = vec![0.0; w * h * b];
        for (band, plane) in planes.iter().enumerate() {
            for (p, v) in plane.data().iter().enumerate() {
                data[p * b + band] = *v;
            }
        }
        Self::new(w, h, grid, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bands(&self) -> usize {
        self.grid.bands()
    }

    pub fn pixels(&self) -> usize {
        self.width * self.height
    }

    pub fn grid(&self) -> &WavelengthGrid {
        &self.grid
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, band: usize) -> f64 {
        self.data[(y * self.width + x) * self.grid.bands() + band]
    }

    /// Spectrum of pixel `(x, y)`.
    #[inline]
    pub fn pixel(&self, x: usize, y: usize) -> &[f64] {
        self.pixel_at(y * self.width + x)
    }

    /// Spectrum of the pixel with row-major index `p`.
    #[inline]
    pub fn pixel_at(&self, p: usize) -> &[f64] {
        let b = self.grid.bands();
        &self.data[p * b..(p + 1) * b]
    }

    pub fn pixel_spectra(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.grid.bands())
    }

    pub fn band_plane(&self, band: usize) -> Image {
        let b = self.grid.bands();
        let data = (0..self.pixels()).map(|p| self.data[p * b + band]).collect();
        Image::from_vec(self.width, self.height, data).expect("plane size")
    }

    pub fn band_planes(&self) -> Vec<Image> {
        (0..self.bands()).map(|b| self.band_plane(b)).collect()
    }

    /// Every voxel multiplied by `k >= 0`.
    pub fn scaled(&self, k: f64) -> Result<Self> {
        Self::new(self.width, self.height, self.grid, self.data.iter().map(|v| v * k).collect())
    }

    /// Copy with every voxel rounded to the nearest 32-bit float, i.e. what
    /// survives an HSC1 round trip.
    pub fn quantized_f32(&self) -> Self {
        Self {
            width: self.width,
            height: self.height,
            grid: self.grid,
            data: self.data.iter().map(|&v| v as f32 as f64).collect(),
        }
    }

    /// Sum over all pixels, per band.
    pub fn spatial_sum(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.bands()];
        for px in self.pixel_spectra() {
            for (acc, v) in s.iter_mut().zip(px) {
                *acc += v;
            }
        }
        s
    }
}

/// Reflectance times illuminant, voxel by voxel. The system response is
/// applied at capture time, not here.
pub fn apply_illumination(reflectance: &HsiCube, ir: &IlluminantAndResponse) -> Result<HsiCube> {
    if reflectance.grid() != ir.grid() {
        return Err(Error::GridMismatch);
    }
    let l = ir.illuminant().values();
    let b = l.len();
    let data = reflectance
        .data()
        .iter()
        .enumerate()
        .map(|(i, v)| v * l[i % b])
        .collect();
    HsiCube::new(reflectance.width(), reflectance.height(), *reflectance.grid(), data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hsi::Spectrum;

    #[test]
    fn plane_round_trip() {
        let g = WavelengthGrid::new(600.0, 900.0, 3).unwrap();
        let cube = HsiCube::new(2, 2, g, (0..12).map(f64::from).collect()).unwrap();
        let rebuilt = HsiCube::from_planes(g, &cube.band_planes()).unwrap();
        assert_eq!(rebuilt, cube);
        assert_eq!(cube.pixel(1, 0), &[3.0, 4.0, 5.0]);
        assert_eq!(cube.band_plane(1).data(), &[1.0, 4.0, 7.0, 10.0]);
    }

    #[test]
    fn rejects_invalid_data() {
        let g = WavelengthGrid::new(600.0, 900.0, 2).unwrap();
        assert!(matches!(HsiCube::new(1, 1, g, vec![1.0, f64::NAN]), Err(Error::NonFinite { index: 1 })));
        assert!(HsiCube::new(1, 1, g, vec![1.0, -1.0]).is_err());
        assert!(HsiCube::new(1, 1, g, vec![1.0]).is_err());
    }

    #[test]
    fn illumination_cases() {
        let g = WavelengthGrid::new(600.0, 900.0, 3).unwrap();
        let cube = HsiCube::new(1, 1, g, vec![1.0, 1.0, 1.0]).unwrap();
        let flat = IlluminantAndResponse::flat(g);
        assert_eq!(apply_illumination(&cube, &flat).unwrap(), cube);

        let l = Spectrum::new(g, vec![0.5, 1.0, 2.0]).unwrap();
        let ir = IlluminantAndResponse::new(l, Spectrum::ones(g)).unwrap();
        assert_eq!(apply_illumination(&cube, &ir).unwrap().data(), &[0.5, 1.0, 2.0]);

        let other = WavelengthGrid::new(600.0, 800.0, 3).unwrap();
        assert!(apply_illumination(&cube, &IlluminantAndResponse::flat(other)).is_err());
    }
}
