//! Scene synthesis under the pure-pixel and linear-mixing models.

use rand::Rng as _;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::rng;

use super::{AbundanceMap, HsiCube, LabelMap, Spectrum, WavelengthGrid};

fn library_grid(library: &[Spectrum]) -> Result<WavelengthGrid> {
    let first = library.first().ok_or_else(|| Error::validation("empty spectrum library"))?;
    if library.iter().any(|s| s.grid() != first.grid()) {
        return Err(Error::GridMismatch);
    }
    Ok(*first.grid())
}

/// `H(x, y, λ) = α(x, y) · S_{L(x, y)}(λ)`.
pub fn synthesize_pure_scene(labels: &LabelMap, library: &[Spectrum], alpha: &[f64]) -> Result<HsiCube> {
    let grid = library_grid(library)?;
    if labels.classes() != library.len() {
        return Err(Error::dim(format!(
            "label map has {} classes, library has {} spectra",
            labels.classes(),
            library.len()
        )));
    }
    if alpha.len() != labels.labels().len() {
        return Err(Error::dim("alpha map size differs from label map"));
    }
    if let Some(p) = alpha.iter().position(|a| !(*a > 0.0) || !a.is_finite()) {
        return Err(Error::validation(format!("alpha must be positive and finite (pixel {p})")));
    }
    let mut data = Vec::with_capacity(alpha.len() * grid.bands());
    for (&l, &a) in labels.labels().iter().zip(alpha) {
        let s = library
            .get(l as usize)
            .ok_or_else(|| Error::validation(format!("label {l} has no library spectrum")))?;
        data.extend(s.values().iter().map(|v| a * v));
    }
    HsiCube::new(labels.width(), labels.height(), grid, data)
}

/// `H(x, y, λ) = Σ_k a_k(x, y) · s_k(λ)`.
pub fn synthesize_mixed_scene(abund: &AbundanceMap, library: &[Spectrum]) -> Result<HsiCube> {
    let grid = library_grid(library)?;
    if abund.classes() != library.len() {
        return Err(Error::dim(format!(
            "abundance map has {} classes, library has {} spectra",
            abund.classes(),
            library.len()
        )));
    }
    let b = grid.bands();
    let n = abund.width() * abund.height();
    let mut data = vec![0.0; n * b];
    for p in 0..n {
        let px = &mut data[p * b..(p + 1) * b];
        for (a, s) in abund.pixel(p).iter().zip(library) {
            for (acc, v) in px.iter_mut().zip(s.values()) {
                *acc += a * v;
            }
        }
    }
    HsiCube::new(abund.width(), abund.height(), grid, data)
}

/// Piecewise-constant label map: a Voronoi partition with at least `2k`
/// sites, site `i` assigned class `i mod k` so every class appears.
pub fn random_label_map(width: usize, height: usize, classes: usize, seed: u64) -> Result<LabelMap> {
    if classes == 0 || width == 0 || height == 0 {
        return Err(Error::validation("label map needs positive size and class count"));
    }
    let mut r = rng::stream(seed, 1);
    let sites: Vec<(f64, f64)> = (0..(2 * classes).max(4))
        .map(|_| (r.random_range(0.0..width as f64), r.random_range(0.0..height as f64)))
        .collect();
    let mut labels = Vec::with_capacity(width * height);
    for y in 0..height {
        for x in 0..width {
            let (px, py) = (x as f64 + 0.5, y as f64 + 0.5);
            let nearest = sites
                .iter()
                .enumerate()
                .min_by(|a, b| {
                    let da = (a.1 .0 - px).powi(2) + (a.1 .1 - py).powi(2);
                    let db = (b.1 .0 - px).powi(2) + (b.1 .1 - py).powi(2);
                    da.total_cmp(&db)
                })
                .map(|(i, _)| i)
                .unwrap_or(0);
            labels.push((nearest % classes) as u16);
        }
    }
    LabelMap::new(width, height, labels, LabelMap::default_names(classes))
}

/// Per-pixel brightness in `[lo, hi)`.
pub fn random_alpha(pixels: usize, lo: f64, hi: f64, seed: u64) -> Vec<f64> {
    let mut r = rng::stream(seed, 2);
    (0..pixels).map(|_| r.random_range(lo..hi)).collect()
}

/// Random abundances on the simplex: a dominant class from `labels` keeps
/// `purity` of the mass, the rest is spread at random.
pub fn random_abundances(labels: &LabelMap, purity: f64, seed: u64) -> Result<AbundanceMap> {
    if !(0.0..=1.0).contains(&purity) {
        return Err(Error::validation("purity must lie in [0, 1]"));
    }
    let k = labels.classes();
    let mut r = rng::stream(seed, 3);
    let mut data = Vec::with_capacity(labels.labels().len() * k);
    for &l in labels.labels() {
        let mut w: Vec<f64> = (0..k).map(|_| r.random::<f64>()).collect();
        let s: f64 = w.iter().sum();
        w.iter_mut().for_each(|v| *v *= (1.0 - purity) / s);
        w[l as usize] += purity;
        // Guard against the sum creeping above one through rounding.
        let total: f64 = w.iter().sum();
        if total > 1.0 {
            w.iter_mut().for_each(|v| *v /= total);
        }
        data.extend(w);
    }
    AbundanceMap::new(labels.width(), labels.height(), k, data)
}

/// Every value times `1 + sigma * N(0, 1)`, clipped at zero. Breaks the
/// exact low rank of synthetic scenes the way sensor texture would.
pub fn multiplicative_noise(cube: &HsiCube, sigma: f64, seed: u64) -> Result<HsiCube> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::validation(format!("noise sigma {sigma} must be finite and >= 0")));
    }
    if sigma == 0.0 {
        return Ok(cube.clone());
    }
    let n = Normal::new(0.0, sigma).expect("sigma checked");
    let mut r = rng::stream(seed, 9);
    let data = cube.data().iter().map(|v| (v * (1.0 + n.sample(&mut r))).max(0.0)).collect();
    HsiCube::new(cube.width(), cube.height(), *cube.grid(), data)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(b: usize) -> WavelengthGrid {
        WavelengthGrid::new(600.0, 900.0, b).unwrap()
    }

    #[test]
    fn pure_identity_and_scaling() {
        let lib = vec![Spectrum::new(grid(3), vec![1.0, 2.0, 3.0]).unwrap()];
        let lm = LabelMap::new(1, 1, vec![0], LabelMap::default_names(1)).unwrap();
        assert_eq!(synthesize_pure_scene(&lm, &lib, &[1.0]).unwrap().data(), &[1.0, 2.0, 3.0]);
        assert_eq!(synthesize_pure_scene(&lm, &lib, &[2.5]).unwrap().data(), &[2.5, 5.0, 7.5]);
    }

    #[test]
    fn pure_basis() {
        let lib = vec![
            Spectrum::new(grid(2), vec![1.0, 0.0]).unwrap(),
            Spectrum::new(grid(2), vec![0.0, 1.0]).unwrap(),
        ];
        let lm = LabelMap::new(2, 1, vec![0, 1], LabelMap::default_names(2)).unwrap();
        let cube = synthesize_pure_scene(&lm, &lib, &[1.0, 1.0]).unwrap();
        assert_eq!(cube.pixel(0, 0), &[1.0, 0.0]);
        assert_eq!(cube.pixel(1, 0), &[0.0, 1.0]);
    }

    #[test]
    fn pure_errors() {
        let lib = vec![Spectrum::ones(grid(2))];
        let lm2 = LabelMap::new(1, 1, vec![1], LabelMap::default_names(2)).unwrap();
        assert!(synthesize_pure_scene(&lm2, &lib, &[1.0]).is_err());
        let lm = LabelMap::new(1, 1, vec![0], LabelMap::default_names(1)).unwrap();
        assert!(synthesize_pure_scene(&lm, &lib, &[0.0]).is_err());
        let mixed = vec![Spectrum::ones(grid(2)), Spectrum::ones(grid(3))];
        let lm3 = LabelMap::new(1, 1, vec![0], LabelMap::default_names(2)).unwrap();
        assert!(matches!(synthesize_pure_scene(&lm3, &mixed, &[1.0]), Err(Error::GridMismatch)));
    }

    #[test]
    fn mixed_cases() {
        let lib = vec![
            Spectrum::new(grid(2), vec![2.0, 0.0]).unwrap(),
            Spectrum::new(grid(2), vec![0.0, 2.0]).unwrap(),
        ];
        let one_hot = AbundanceMap::new(1, 1, 2, vec![1.0, 0.0]).unwrap();
        assert_eq!(synthesize_mixed_scene(&one_hot, &lib).unwrap().data(), &[2.0, 0.0]);
        let half = AbundanceMap::new(1, 1, 2, vec![0.5, 0.5]).unwrap();
        assert_eq!(synthesize_mixed_scene(&half, &lib).unwrap().data(), &[1.0, 1.0]);
        let wrong_k = AbundanceMap::new(1, 1, 3, vec![0.2, 0.2, 0.2]).unwrap();
        assert!(synthesize_mixed_scene(&wrong_k, &lib).is_err());
    }

    #[test]
    fn random_maps_cover_all_classes() {
        let lm = random_label_map(32, 32, 5, 7).unwrap();
        assert!(lm.counts().iter().all(|&c| c > 0), "{:?}", lm.counts());
        assert_eq!(lm, random_label_map(32, 32, 5, 7).unwrap());
        let ab = random_abundances(&lm, 0.7, 1).unwrap();
        assert_eq!(ab.dominant_labels(), lm.labels());
    }

    #[test]
    fn multiplicative_noise_scales_spread() {
        let g = grid(4);
        let cube = HsiCube::new(100, 100, g, vec![2.0; 40_000]).unwrap();
        assert_eq!(multiplicative_noise(&cube, 0.0, 1).unwrap(), cube);
        let noisy = multiplicative_noise(&cube, 0.01, 1).unwrap();
        let n = noisy.data().len() as f64;
        let mean = noisy.data().iter().sum::<f64>() / n;
        let sd = (noisy.data().iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
        assert!((mean - 2.0).abs() < 1e-3 && (sd / 0.02 - 1.0).abs() < 0.05, "{mean} {sd}");
        assert!(multiplicative_noise(&cube, -1.0, 1).is_err());
    }
}
