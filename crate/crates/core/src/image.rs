//! Single-plane images and 2D kernels.

use crate::error::{Error, Result};

/// Row-major real image; pixel `(x, y)` lives at `y * width + x`.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl Image {
    pub fn zeros(width: usize, height: usize) -> Self {
        Self { width, height, data: vec![0.0; width * height] }
    }

    pub fn from_vec(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::dim(format!(
                "image {width}x{height} needs {} values, got {}",
                width * height,
                data.len()
            )));
        }
        Ok(Self { width, height, data })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self { width, height, data }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: f64) {
        self.data[y * self.width + x] = v;
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self { width: self.width, height: self.height, data: self.data.iter().map(|v| v * k).collect() }
    }

    /// 8-bit binary portable graymap, linearly stretched from min to max.
    pub fn to_pgm(&self) -> Vec<u8> {
        let (lo, hi) = (self.min(), self.max());
        let span = if hi > lo { hi - lo } else { 1.0 };
        let mut out = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend(self.data.iter().map(|&v| {
            let t = if v.is_finite() { (v - lo) / span } else { 0.0 };
            (t * 255.0).round().clamp(0.0, 255.0) as u8
        }));
        out
    }
}

/// A 2D kernel with an explicit origin tap.
///
/// Convolution places tap `(i, j)` at offset `(i - origin_x, j - origin_y)`:
/// `out(x, y) = sum k(i, j) * in(x - (i - ox), y - (j - oy))`.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel2D {
    width: usize,
    height: usize,
    origin_x: usize,
    origin_y: usize,
    data: Vec<f64>,
}

impl Kernel2D {
    pub fn new(width: usize, height: usize, origin_x: usize, origin_y: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 || data.len() != width * height {
            return Err(Error::dim(format!("kernel {width}x{height} with {} taps", data.len())));
        }
        if origin_x >= width || origin_y >= height {
            return Err(Error::dim("kernel origin outside support"));
        }
        Ok(Self { width, height, origin_x, origin_y, data })
    }

    /// Origin at the centre tap (`floor((n - 1) / 2)` on each axis).
    pub fn centered(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        Self::new(width, height, (width - 1) / 2, (height - 1) / 2, data)
    }

    pub fn delta() -> Self {
        Self { width: 1, height: 1, origin_x: 0, origin_y: 0, data: vec![1.0] }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn origin(&self) -> (usize, usize) {
        (self.origin_x, self.origin_y)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[j * self.width + i]
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn normalized(mut self) -> Result<Self> {
        let s = self.sum();
        if !(s > 0.0) || !s.is_finite() {
            return Err(Error::validation("kernel has no positive mass"));
        }
        self.data.iter_mut().for_each(|v| *v /= s);
        Ok(self)
    }

    /// Value at integer offset from the origin, zero outside the support.
    pub fn at_offset(&self, dx: isize, dy: isize) -> f64 {
        let i = self.origin_x as isize + dx;
        let j = self.origin_y as isize + dy;
        if i < 0 || j < 0 || i >= self.width as isize || j >= self.height as isize {
            0.0
        } else {
            self.get(i as usize, j as usize)
        }
    }

    /// Root of the mass-weighted mean squared distance from the centroid.
    pub fn second_moment_radius(&self) -> f64 {
        let total = self.sum();
        let (mut cx, mut cy) = (0.0, 0.0);
        for j in 0..self.height {
            for i in 0..self.width {
                let w = self.get(i, j);
                cx += w * i as f64;
                cy += w * j as f64;
            }
        }
        cx /= total;
        cy /= total;
        let mut m2 = 0.0;
        for j in 0..self.height {
            for i in 0..self.width {
                let (dx, dy) = (i as f64 - cx, j as f64 - cy);
                m2 += self.get(i, j) * (dx * dx + dy * dy);
            }
        }
        (m2 / total).sqrt()
    }

    pub fn is_delta(&self) -> bool {
        let nz: Vec<_> = self.data.iter().enumerate().filter(|(_, v)| **v != 0.0).collect();
        nz.len() == 1 && nz[0].0 == self.origin_y * self.width + self.origin_x
    }

    /// Same-size convolution with zero padding outside the image.
    pub fn convolve_same(&self, img: &Image) -> Image {
        if self.width == 1 && self.height == 1 {
            return img.scaled(self.data[0]);
        }
        let (w, h) = (img.width as isize, img.height as isize);
        let mut out = Image::zeros(img.width, img.height);
        for y in 0..h {
            for x in 0..w {
                let mut acc = 0.0;
                for j in 0..self.height {
                    let sy = y - (j as isize - self.origin_y as isize);
                    if sy < 0 || sy >= h {
                        continue;
                    }
                    let row = &img.data[(sy * w) as usize..((sy + 1) * w) as usize];
                    let krow = &self.data[j * self.width..(j + 1) * self.width];
                    for (i, &k) in krow.iter().enumerate() {
                        if k == 0.0 {
                            continue;
                        }
                        let sx = x - (i as isize - self.origin_x as isize);
                        if sx >= 0 && sx < w {
                            acc += k * row[sx as usize];
                        }
                    }
                }
                out.data[(y * w + x) as usize] = acc;
            }
        }
        out
    }

    /// Circular convolution (periodic boundaries); the model Wiener
    /// deconvolution inverts exactly.
    pub fn convolve_circular(&self, img: &Image) -> Image {
        let (w, h) = (img.width as isize, img.height as isize);
        let mut out = Image::zeros(img.width, img.height);
        for y in 0..h {
            for x in 0..w {
                let mut acc = 0.0;
                for j in 0..self.height {
                    let sy = (y - (j as isize - self.origin_y as isize)).rem_euclid(h);
                    for i in 0..self.width {
                        let sx = (x - (i as isize - self.origin_x as isize)).rem_euclid(w);
                        acc += self.get(i, j) * img.data[(sy * w + sx) as usize];
                    }
                }
                out.data[(y * w + x) as usize] = acc;
            }
        }
        out
    }
}
