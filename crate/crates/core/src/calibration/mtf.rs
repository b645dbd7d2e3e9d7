//! Sector-star target and ring-wise MTF estimation.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::image::Image;

pub const DEFAULT_SPOKES: usize = 36;
pub const DEFAULT_STAR_SIZE: usize = 256;
pub const MTF30_LEVEL: f64 = 0.3;

/// `0.5 + 0.5 cos(n θ)` about the image centre: `n` line pairs per turn.
pub fn sector_star(size: usize, periods: usize) -> Result<Image> {
    if size < 8 || periods == 0 {
        return Err(Error::validation("sector star needs size >= 8 and at least one period"));
    }
    let c = (size as f64 - 1.0) / 2.0;
    Ok(Image::from_fn(size, size, |x, y| {
        let theta = (y as f64 - c).atan2(x as f64 - c);
        0.5 + 0.5 * (periods as f64 * theta).cos()
    }))
}

/// Contrast against frequency (line pairs per pixel), ascending in
/// frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct MtfCurve {
    pub points: Vec<(f64, f64)>,
}

impl MtfCurve {
    /// First frequency where contrast falls below 0.3, linearly
    /// interpolated from `(0, 1)` onward; the top measured frequency if it
    /// never does.
    pub fn mtf30(&self) -> f64 {
        let mut prev = (0.0, 1.0);
        for &(f, c) in &self.points {
            if c < MTF30_LEVEL {
                let t = (prev.1 - MTF30_LEVEL) / (prev.1 - c);
                return prev.0 + t * (f - prev.0);
            }
            prev = (f, c);
        }
        prev.0
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("frequency,contrast\n");
        for (f, c) in &self.points {
            out.push_str(&format!("{f},{c}\n"));
        }
        out
    }
}

/// Fit `a + b cos nθ + c sin nθ` on each one-pixel ring of a sector star
/// with `periods` line pairs per turn; contrast is `√(b² + c²) / a`
/// relative to the target's modulation of 1. Rings whose frequency
/// `n / (2πr)` exceeds Nyquist are skipped.
pub fn measure_mtf(img: &Image, periods: usize) -> Result<MtfCurve> {
    if periods == 0 {
        return Err(Error::validation("periods must be positive"));
    }
    let (w, h) = (img.width(), img.height());
    let (cx, cy) = ((w as f64 - 1.0) / 2.0, (h as f64 - 1.0) / 2.0);
    let r_max = (w.min(h) / 2).saturating_sub(1);
    let n = periods as f64;
    let r_min = (n / PI).ceil() as usize;
    // Normal equations per ring over basis [1, cos, sin].
    let rings = (r_max + 1).saturating_sub(r_min);
    let mut ata = vec![[0.0f64; 6]; rings];
    let mut atb = vec![[0.0f64; 3]; rings];
    for y in 0..h {
        for x in 0..w {
            let (dx, dy) = (x as f64 - cx, y as f64 - cy);
            let r = (dx * dx + dy * dy).sqrt().round() as usize;
            if r < r_min || r > r_max {
                continue;
            }
            let t = dy.atan2(dx) * n;
            let b = [1.0, t.cos(), t.sin()];
            let v = img.get(x, y);
            let (m, rhs) = (&mut ata[r - r_min], &mut atb[r - r_min]);
            let mut k = 0;
            for i in 0..3 {
                for j in i..3 {
                    m[k] += b[i] * b[j];
                    k += 1;
                }
                rhs[i] += b[i] * v;
            }
        }
    }
    let mut points = Vec::new();
    let mut any_contrast = false;
    for (i, (m, rhs)) in ata.iter().zip(&atb).enumerate() {
        let a = nalgebra::Matrix3::new(m[0], m[1], m[2], m[1], m[3], m[4], m[2], m[4], m[5]);
        let Some(sol) = a.cholesky().map(|c| c.solve(&nalgebra::Vector3::new(rhs[0], rhs[1], rhs[2]))) else {
            continue;
        };
        if !(sol[0].abs() > 1e-12) {
            continue;
        }
        let amp = sol[1].hypot(sol[2]);
        any_contrast |= amp > 1e-9 * sol[0].abs();
        let r = (r_min + i) as f64;
        points.push((n / (2.0 * PI * r), amp / sol[0].abs()));
    }
    if points.is_empty() {
        return Err(Error::validation("image too small for the sector star rings"));
    }
    if !any_contrast {
        return Err(Error::validation("image has no contrast"));
    }
    points.reverse();
    Ok(MtfCurve { points })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image::Kernel2D;

    #[test]
    fn ideal_star_has_unit_contrast() {
        let star = sector_star(128, DEFAULT_SPOKES).unwrap();
        let m = measure_mtf(&star, DEFAULT_SPOKES).unwrap();
        assert!(m.points.windows(2).all(|p| p[0].0 < p[1].0));
        assert!(m.points.iter().all(|&(f, c)| f <= 0.5 && (c - 1.0).abs() < 1e-9));
        assert!(m.mtf30() >= 0.45);
    }

    #[test]
    fn blur_lowers_contrast() {
        let star = sector_star(128, DEFAULT_SPOKES).unwrap();
        let k = Kernel2D::centered(3, 3, vec![1.0; 9]).unwrap().normalized().unwrap();
        let raw = measure_mtf(&star, DEFAULT_SPOKES).unwrap();
        let blurred = measure_mtf(&k.convolve_circular(&star), DEFAULT_SPOKES).unwrap();
        for (a, b) in blurred.points.iter().zip(&raw.points) {
            assert!(a.1 <= b.1 + 0.02);
        }
        assert!(blurred.mtf30() < raw.mtf30());
    }

    #[test]
    fn constant_image_rejected() {
        let flat = Image::from_fn(64, 64, |_, _| 0.5);
        assert!(measure_mtf(&flat, DEFAULT_SPOKES).is_err());
    }

    #[test]
    fn mtf30_interpolates() {
        let c = MtfCurve { points: vec![(0.1, 0.5), (0.2, 0.1)] };
        assert!((c.mtf30() - 0.15).abs() < 1e-12);
        let flat = MtfCurve { points: vec![(0.1, 0.9), (0.4, 0.8)] };
        assert_eq!(flat.mtf30(), 0.4);
    }
}
