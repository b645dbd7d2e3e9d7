use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hsi::{HsiCube, IlluminantAndResponse, LabelMap};
use crate::image::Image;
use crate::learn::{argmax, MlpModel, Model, SpectralFilterBank};
use crate::optics::{
    add_sensor_noise, apply_coded_blur, project, single_band_profile, CodedApertureModel, MeasurementSet, NoiseModel,
};
use crate::rng;

/// Floor relative to the brightest sum-image pixel below which a pixel is
/// too dark to normalize.
pub const DEFAULT_FLOOR_FRACTION: f64 = 1e-6;

/// Sum-normalized features `I_k = Ĩ_k / I_sum`, pixel-major. Invalid
/// (dark) pixels hold NaN and are flagged in `valid`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureImageSet {
    pub width: usize,
    pub height: usize,
    pub filters: usize,
    /// `features[p * filters + k]`.
    pub features: Vec<f64>,
    pub valid: Vec<bool>,
    pub images_captured: usize,
}

impl FeatureImageSet {
    pub fn pixels(&self) -> usize {
        self.width * self.height
    }

    pub fn pixel(&self, p: usize) -> &[f64] {
        &self.features[p * self.filters..(p + 1) * self.filters]
    }

    /// Feature plane `k`; invalid pixels are written as 0 for display only.
    pub fn plane(&self, k: usize) -> Image {
        let data = (0..self.pixels()).map(|p| if self.valid[p] { self.features[p * self.filters + k] } else { 0.0 }).collect();
        Image::from_vec(self.width, self.height, data).expect("plane size")
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|&&v| v).count()
    }
}

/// Divide each feature image by the sum image. `floor` defaults to
/// `1e-6 · max(I_sum)`; pixels with `I_sum < floor` or `I_sum <= 0` are
/// marked invalid.
pub fn normalize_features(ms: &MeasurementSet, floor: Option<f64>) -> FeatureImageSet {
    normalize_planes(&ms.sum_image, &ms.filter_images, floor, ms.images_captured)
}

fn normalize_planes(sum: &Image, planes: &[Image], floor: Option<f64>, images_captured: usize) -> FeatureImageSet {
    let floor = floor.unwrap_or(DEFAULT_FLOOR_FRACTION * sum.max());
    let q = planes.len();
    let n = sum.len();
    let mut features = vec![f64::NAN; n * q];
    let mut valid = vec![false; n];
    for p in 0..n {
        let s = sum.data()[p];
        if s > 0.0 && s >= floor {
            valid[p] = true;
            for (k, img) in planes.iter().enumerate() {
                features[p * q + k] = img.data()[p] / s;
            }
        }
    }
    FeatureImageSet { width: sum.width(), height: sum.height(), filters: q, features, valid, images_captured }
}

/// What turns a pixel's feature vector into class scores.
#[derive(Debug, Clone, PartialEq)]
pub enum Classifier {
    /// Bank learned as SVM hyperplanes: scores are `features + offsets`.
    Offsets(Vec<f64>),
    /// Network whose first layer the optics evaluated.
    MlpTail(MlpModel),
    /// Single feature: class 1 when `feature > threshold`, else class 0.
    Threshold(f64),
}

impl Classifier {
    /// The classifier that consumes a bank extracted from `model`.
    pub fn for_model(model: &Model, bank: &SpectralFilterBank) -> Self {
        match model {
            Model::Svm(_) => Classifier::Offsets(bank.offsets().to_vec()),
            Model::Mlp(m) => Classifier::MlpTail(m.clone()),
        }
    }

    pub fn inputs(&self) -> usize {
        match self {
            Classifier::Offsets(o) => o.len(),
            Classifier::MlpTail(m) => m.filters(),
            Classifier::Threshold(_) => 1,
        }
    }

    pub fn classes(&self) -> usize {
        match self {
            Classifier::Offsets(o) => o.len(),
            Classifier::MlpTail(m) => m.classes(),
            Classifier::Threshold(_) => 2,
        }
    }

    pub fn scores(&self, f: &[f64]) -> Vec<f64> {
        match self {
            Classifier::Offsets(o) => f.iter().zip(o).map(|(a, b)| a + b).collect(),
            Classifier::MlpTail(m) => m.tail_logits(f),
            Classifier::Threshold(t) => vec![t - f[0], f[0] - t],
        }
    }
}

/// Reserved label for pixels that could not be classified.
pub const UNKNOWN: u16 = u16::MAX;

/// Per-pixel class scores (pixel-major, NaN on invalid pixels).
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMap {
    pub width: usize,
    pub height: usize,
    pub classes: usize,
    pub scores: Vec<f64>,
}

impl ScoreMap {
    pub fn pixel(&self, p: usize) -> &[f64] {
        &self.scores[p * self.classes..(p + 1) * self.classes]
    }

    /// Score plane of one class; invalid pixels written as 0.
    pub fn plane(&self, k: usize) -> Image {
        let data = (0..self.width * self.height)
            .map(|p| {
                let v = self.scores[p * self.classes + k];
                if v.is_finite() {
                    v
                } else {
                    0.0
                }
            })
            .collect();
        Image::from_vec(self.width, self.height, data).expect("plane size")
    }
}

/// Argmax labels (ties to the lowest class), [`UNKNOWN`] where invalid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PredictedLabelMap {
    pub width: usize,
    pub height: usize,
    pub classes: usize,
    pub labels: Vec<u16>,
}

impl PredictedLabelMap {
    /// As a label map with an extra trailing class named `unknown`.
    pub fn to_label_map(&self, names: Option<&[String]>) -> Result<LabelMap> {
        let mut class_names: Vec<String> =
            names.map(<[String]>::to_vec).unwrap_or_else(|| LabelMap::default_names(self.classes));
        if class_names.len() != self.classes {
            return Err(Error::dim("class names do not match class count"));
        }
        class_names.push("unknown".to_string());
        let unknown = self.classes as u16;
        let labels = self.labels.iter().map(|&l| if l == UNKNOWN { unknown } else { l }).collect();
        LabelMap::new(self.width, self.height, labels, class_names)
    }

    /// Inverse of [`to_label_map`](Self::to_label_map) when the last class
    /// is `unknown`; otherwise every label is kept.
    pub fn from_label_map(map: &LabelMap) -> Self {
        let names = map.class_names();
        let has_unknown = names.last().is_some_and(|n| n == "unknown");
        let classes = if has_unknown { names.len() - 1 } else { names.len() };
        let labels = map
            .labels()
            .iter()
            .map(|&l| if has_unknown && l as usize == classes { UNKNOWN } else { l })
            .collect();
        Self { width: map.width(), height: map.height(), classes, labels }
    }
}

pub fn classify_pixels(features: &FeatureImageSet, classifier: &Classifier) -> Result<(ScoreMap, PredictedLabelMap)> {
    if classifier.inputs() != features.filters {
        return Err(Error::dim(format!(
            "classifier takes {} features, measurement has {}",
            classifier.inputs(),
            features.filters
        )));
    }
    let k = classifier.classes();
    let per_pixel: Vec<(Vec<f64>, u16)> = (0..features.pixels())
        .into_par_iter()
        .map(|p| {
            if features.valid[p] {
                let s = classifier.scores(features.pixel(p));
                let l = argmax(&s) as u16;
                (s, l)
            } else {
                (vec![f64::NAN; k], UNKNOWN)
            }
        })
        .collect();
    let mut scores = Vec::with_capacity(features.pixels() * k);
    let mut labels = Vec::with_capacity(features.pixels());
    for (s, l) in per_pixel {
        scores.extend(s);
        labels.push(l);
    }
    let (width, height) = (features.width, features.height);
    Ok((ScoreMap { width, height, classes: k, scores }, PredictedLabelMap { width, height, classes: k, labels }))
}

/// Spectrum as the optics weighs it, `h · c · Δλ`, divided by its sum;
/// `None` when the sum is not positive.
pub fn weighted_normalized_spectrum(px: &[f64], ir: &IlluminantAndResponse, dl: f64) -> Option<Vec<f64>> {
    let w: Vec<f64> = px.iter().zip(ir.response().values()).map(|(h, c)| h * c * dl).collect();
    let s: f64 = w.iter().sum();
    (s > 0.0).then(|| w.into_iter().map(|v| v / s).collect())
}

/// Purely digital reference: the full classifier applied to every
/// pixel's normalized spectrum.
pub fn classify_digital(cube: &HsiCube, ir: &IlluminantAndResponse, model: &Model) -> Result<PredictedLabelMap> {
    if cube.grid() != ir.grid() {
        return Err(Error::GridMismatch);
    }
    if model.bands() != cube.bands() {
        return Err(Error::dim("model and cube band counts differ"));
    }
    let dl = cube.grid().delta();
    let labels = (0..cube.pixels())
        .into_par_iter()
        .map(|p| match weighted_normalized_spectrum(cube.pixel_at(p), ir, dl) {
            Some(x) => argmax(&model.scores(&x)) as u16,
            None => UNKNOWN,
        })
        .collect();
    Ok(PredictedLabelMap { width: cube.width(), height: cube.height(), classes: model.classes(), labels })
}

/// Baseline: capture one image per band (one-band SLM profile) with the
/// photon budget split across all `B` frames, assemble the cube estimate,
/// then project onto the bank digitally and normalize.
pub fn full_scan_then_project(
    cube: &HsiCube,
    ap: &CodedApertureModel,
    ir: &IlluminantAndResponse,
    bank: &SpectralFilterBank,
    noise: Option<&NoiseModel>,
) -> Result<FeatureImageSet> {
    if bank.grid() != cube.grid() {
        return Err(Error::GridMismatch);
    }
    let cube_hat = apply_coded_blur(cube, ap)?;
    let bands = cube.bands();
    let clean_sum_max = project(&cube_hat, &vec![1.0; bands], ir)?.max();
    let scale = noise.map(|n| n.photon_scale(clean_sum_max, bands));
    let planes: Vec<Image> = (0..bands)
        .into_par_iter()
        .map(|b| -> Result<Image> {
            let s = single_band_profile(&cube_hat, b)?;
            let clean = project(&cube_hat, s.values(), ir)?;
            match (noise, scale) {
                (Some(n), Some(k)) => add_sensor_noise(&clean, k, n.read_sigma, &mut rng::stream(n.seed, b as u64)),
                _ => Ok(clean),
            }
        })
        .collect::<Result<_>>()?;
    let n = cube.pixels();
    let sum = Image::from_vec(cube.width(), cube.height(), (0..n).map(|p| planes.iter().map(|i| i.data()[p]).sum()).collect())?;
    let features: Vec<Image> = bank
        .filters()
        .iter()
        .map(|d| {
            let data = (0..n).map(|p| planes.iter().zip(d).map(|(img, w)| img.data()[p] * w).sum()).collect();
            Image::from_vec(cube.width(), cube.height(), data)
        })
        .collect::<Result<_>>()?;
    Ok(normalize_planes(&sum, &features, None, bands))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optics::SlmEncoding;

    fn ms(sum: Vec<f64>, feats: Vec<Vec<f64>>) -> MeasurementSet {
        let n = sum.len();
        MeasurementSet {
            sum_image: Image::from_vec(n, 1, sum).unwrap(),
            filter_images: feats.into_iter().map(|f| Image::from_vec(n, 1, f).unwrap()).collect(),
            filter_ids: vec![],
            gains: vec![],
            images_captured: 0,
            noise: None,
            bank_id: "t".into(),
            encoding: SlmEncoding::Ideal,
        }
    }

    #[test]
    fn normalization_cases() {
        let f = normalize_features(&ms(vec![2.0, 0.0], vec![vec![1.0, 1.0]]), None);
        assert_eq!(f.pixel(0), &[0.5]);
        assert!(!f.valid[1]);
        assert!(f.pixel(1)[0].is_nan());
        let m = ms(vec![2.0, 5.0], vec![vec![1.0, -3.0], vec![0.25, 7.0]]);
        let a = normalize_features(&m, None);
        let b = normalize_features(&m.scaled(3.0), None);
        for (x, y) in a.features.iter().zip(&b.features) {
            assert!((x - y).abs() <= 1e-15 * x.abs());
        }
    }

    #[test]
    fn threshold_classifier() {
        let f = normalize_features(&ms(vec![1.0, 1.0, 0.0], vec![vec![-1.0, 1.0, 1.0]]), None);
        let (_, pred) = classify_pixels(&f, &Classifier::Threshold(0.0)).unwrap();
        assert_eq!(pred.labels, vec![0, 1, UNKNOWN]);
        assert!(classify_pixels(&f, &Classifier::Offsets(vec![0.0, 0.0])).is_err());
    }

    #[test]
    fn ties_go_to_lowest_class() {
        let f = normalize_features(&ms(vec![1.0], vec![vec![0.3], vec![0.3]]), None);
        let (_, pred) = classify_pixels(&f, &Classifier::Offsets(vec![0.0, 0.0])).unwrap();
        assert_eq!(pred.labels, vec![0]);
    }

    #[test]
    fn unknown_round_trips_through_label_map() {
        let p = PredictedLabelMap { width: 3, height: 1, classes: 2, labels: vec![1, UNKNOWN, 0] };
        let map = p.to_label_map(None).unwrap();
        assert_eq!(map.labels(), &[1, 2, 0]);
        assert_eq!(PredictedLabelMap::from_label_map(&map), p);
    }
}
