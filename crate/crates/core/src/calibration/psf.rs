//! PSF estimation from a pinhole capture and frequency-domain Wiener
//! deconvolution.

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft::{fft2, kernel_transfer};
use crate::image::{Image, Kernel2D};

pub const DEFAULT_WIENER_NSR: f64 = 1e-3;
/// Pixels above this fraction of the background-subtracted peak set the
/// crop box.
pub const DEFAULT_SUPPORT_FRACTION: f64 = 1e-6;

/// A point source at `(x, y)` imaged through `psf` (zero-padded borders).
pub fn pinhole_image(psf: &Kernel2D, width: usize, height: usize, x: usize, y: usize) -> Result<Image> {
    if x >= width || y >= height {
        return Err(Error::dim("pinhole outside the image"));
    }
    let mut img = Image::zeros(width, height);
    img.set(x, y, 1.0);
    Ok(psf.convolve_same(&img))
}

fn border_median(img: &Image) -> f64 {
    let (w, h) = (img.width(), img.height());
    let mut ring: Vec<f64> = (0..w)
        .flat_map(|x| [img.get(x, 0), img.get(x, h - 1)])
        .chain((1..h.saturating_sub(1)).flat_map(|y| [img.get(0, y), img.get(w - 1, y)]))
        .collect();
    ring.sort_by(f64::total_cmp);
    let n = ring.len();
    if n % 2 == 1 {
        ring[n / 2]
    } else {
        (ring[n / 2 - 1] + ring[n / 2]) / 2.0
    }
}

/// Subtract the border-median background, crop to the blob's support and
/// normalize; the origin is the rounded intensity centroid.
pub fn estimate_psf(img: &Image, support_fraction: f64) -> Result<Kernel2D> {
    if img.is_empty() {
        return Err(Error::validation("empty pinhole image"));
    }
    if !(0.0..1.0).contains(&support_fraction) {
        return Err(Error::validation("support fraction must be in [0, 1)"));
    }
    let bg = border_median(img);
    let clean: Vec<f64> = img.data().iter().map(|v| (v - bg).max(0.0)).collect();
    let peak = clean.iter().copied().fold(0.0, f64::max);
    if !(peak > 0.0) || !peak.is_finite() {
        return Err(Error::validation("no blob above background"));
    }
    let w = img.width();
    let cut = support_fraction * peak;
    let (mut x0, mut y0, mut x1, mut y1) = (usize::MAX, usize::MAX, 0, 0);
    for (i, &v) in clean.iter().enumerate() {
        if v > cut {
            let (x, y) = (i % w, i / w);
            x0 = x0.min(x);
            x1 = x1.max(x);
            y0 = y0.min(y);
            y1 = y1.max(y);
        }
    }
    let (kw, kh) = (x1 - x0 + 1, y1 - y0 + 1);
    let mut data = Vec::with_capacity(kw * kh);
    for y in y0..=y1 {
        data.extend_from_slice(&clean[y * w + x0..=y * w + x1]);
    }
    let total: f64 = data.iter().sum();
    let (mut cx, mut cy) = (0.0, 0.0);
    for (i, &v) in data.iter().enumerate() {
        cx += v * (i % kw) as f64;
        cy += v * (i / kw) as f64;
    }
    let ox = ((cx / total).round() as usize).min(kw - 1);
    let oy = ((cy / total).round() as usize).min(kh - 1);
    Kernel2D::new(kw, kh, ox, oy, data)?.normalized()
}

/// Sum of absolute differences between two kernels aligned at their
/// origins.
pub fn kernel_total_variation(a: &Kernel2D, b: &Kernel2D) -> f64 {
    let span = |k: &Kernel2D| {
        let (ox, oy) = k.origin();
        (-(ox as isize), k.width() as isize - ox as isize, -(oy as isize), k.height() as isize - oy as isize)
    };
    let (ax0, ax1, ay0, ay1) = span(a);
    let (bx0, bx1, by0, by1) = span(b);
    let mut tv = 0.0;
    for dy in ay0.min(by0)..ay1.max(by1) {
        for dx in ax0.min(bx0)..ax1.max(bx1) {
            tv += (a.at_offset(dx, dy) - b.at_offset(dx, dy)).abs();
        }
    }
    tv
}

/// Apply `conj(K) / (|K|² + nsr)` on the image's periodic grid.
pub fn wiener_deconvolve(img: &Image, kernel: &Kernel2D, nsr: f64) -> Result<Image> {
    let (w, h) = (img.width(), img.height());
    if kernel.width() > w || kernel.height() > h {
        return Err(Error::dim(format!(
            "kernel {}x{} larger than image {w}x{h}",
            kernel.width(),
            kernel.height()
        )));
    }
    if !(nsr >= 0.0) {
        return Err(Error::validation("nsr must be non-negative"));
    }
    if nsr.is_infinite() {
        return Ok(Image::zeros(w, h));
    }
    let k = kernel_transfer(kernel, w, h);
    let mut buf: Vec<Complex64> = img.data().iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft2(&mut buf, w, h, false);
    for (b, kf) in buf.iter_mut().zip(&k) {
        let d = kf.norm_sqr() + nsr;
        *b = if d > 0.0 { *b * kf.conj() / d } else { Complex64::default() };
    }
    fft2(&mut buf, w, h, true);
    Image::from_vec(w, h, buf.into_iter().map(|c| c.re).collect())
}
