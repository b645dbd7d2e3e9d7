//! 2D FFT helpers over row-major complex buffers.

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::image::{Image, Kernel2D};

pub fn fft2(buf: &mut [Complex64], width: usize, height: usize, inverse: bool) {
    let mut planner = FftPlanner::new();
    let (row, col) = if inverse {
        (planner.plan_fft_inverse(width), planner.plan_fft_inverse(height))
    } else {
        (planner.plan_fft_forward(width), planner.plan_fft_forward(height))
    };
    for r in buf.chunks_exact_mut(width) {
        row.process(r);
    }
    let mut column = vec![Complex64::default(); height];
    for x in 0..width {
        for y in 0..height {
            column[y] = buf[y * width + x];
        }
        col.process(&mut column);
        for y in 0..height {
            buf[y * width + x] = column[y];
        }
    }
    if inverse {
        let k = 1.0 / (width * height) as f64;
        buf.iter_mut().for_each(|v| *v *= k);
    }
}

pub fn fft1(buf: &mut [Complex64], inverse: bool) {
    let mut planner = FftPlanner::new();
    let plan = if inverse { planner.plan_fft_inverse(buf.len()) } else { planner.plan_fft_forward(buf.len()) };
    plan.process(buf);
    if inverse {
        let k = 1.0 / buf.len() as f64;
        buf.iter_mut().for_each(|v| *v *= k);
    }
}

/// Kernel spectrum on a `width x height` periodic grid, origin wrapped to
/// index `(0, 0)`.
pub fn kernel_transfer(kernel: &Kernel2D, width: usize, height: usize) -> Vec<Complex64> {
    let mut buf = vec![Complex64::default(); width * height];
    let (ox, oy) = kernel.origin();
    for j in 0..kernel.height() {
        for i in 0..kernel.width() {
            let x = (i as isize - ox as isize).rem_euclid(width as isize) as usize;
            let y = (j as isize - oy as isize).rem_euclid(height as isize) as usize;
            buf[y * width + x] += kernel.get(i, j);
        }
    }
    fft2(&mut buf, width, height, false);
    buf
}

/// Same-size zero-padded convolution computed through a padded FFT.
pub fn convolve_same(kernel: &Kernel2D, img: &Image) -> Image {
    let pw = (img.width() + kernel.width()).next_power_of_two();
    let ph = (img.height() + kernel.height()).next_power_of_two();
    let mut buf = vec![Complex64::default(); pw * ph];
    for y in 0..img.height() {
        for x in 0..img.width() {
            buf[y * pw + x].re = img.get(x, y);
        }
    }
    fft2(&mut buf, pw, ph, false);
    let k = kernel_transfer(kernel, pw, ph);
    buf.iter_mut().zip(&k).for_each(|(a, b)| *a *= b);
    fft2(&mut buf, pw, ph, true);
    Image::from_fn(img.width(), img.height(), |x, y| buf[y * pw + x].re)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fft_matches_direct_convolution() {
        let img = Image::from_fn(9, 7, |x, y| ((x * 31 + y * 17) % 11) as f64);
        let k = Kernel2D::new(4, 3, 1, 2, (0..12).map(|i| (i % 5) as f64 * 0.1).collect()).unwrap();
        let direct = k.convolve_same(&img);
        let via_fft = convolve_same(&k, &img);
        for (a, b) in direct.data().iter().zip(via_fft.data()) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn forward_inverse_round_trip() {
        let orig: Vec<Complex64> = (0..12).map(|i| Complex64::new(i as f64, -(i as f64) / 2.0)).collect();
        let mut buf = orig.clone();
        fft2(&mut buf, 4, 3, false);
        fft2(&mut buf, 4, 3, true);
        for (a, b) in buf.iter().zip(&orig) {
            assert!((a - b).norm() < 1e-12);
        }
    }
}
