//! Metrics and end-to-end pipeline checks.

use rand::Rng as _;

use specbench::eval::{
    classify_pixels, confusion_and_accuracy, full_scan_then_project, normalize_features, roc_curve, Classifier,
    PredictedLabelMap,
};
use specbench::hsi::synth::{random_alpha, random_label_map, synthesize_pure_scene};
use specbench::hsi::{IlluminantAndResponse, LabelMap, Spectrum, WavelengthGrid};
use specbench::learn::{extract_filters, split_dataset, train_svm, LabeledSpectra, Model, SvmConfig};
use specbench::optics::{acquire_measurements, CodedApertureModel, NoiseModel, SlmEncoding};
use specbench::rng;

#[test]
fn independent_scores_give_chance_auc() {
    let mut r = rng::seeded(51);
    let scores: Vec<f64> = (0..10_000).map(|_| r.random::<f64>()).collect();
    let truth: Vec<bool> = (0..10_000).map(|_| r.random_bool(0.5)).collect();
    let auc = roc_curve(&scores, &truth).unwrap().auc;
    assert!((auc - 0.5).abs() <= 0.05, "{auc}");
}

#[test]
fn random_predictions_give_chance_accuracy() {
    let mut r = rng::seeded(52);
    let (w, h, k) = (1000, 100, 5u16);
    let truth = LabelMap::new(w, h, (0..w * h).map(|_| r.random_range(0..k)).collect(), LabelMap::default_names(5)).unwrap();
    let pred = PredictedLabelMap { width: w, height: h, classes: 5, labels: (0..w * h).map(|_| r.random_range(0..k)).collect() };
    let acc = confusion_and_accuracy(&pred, &truth).unwrap().overall_accuracy;
    assert!((acc - 0.2).abs() <= 0.01, "{acc}");
}

fn two_class_scene(grid: WavelengthGrid, seed: u64) -> (specbench::hsi::HsiCube, Vec<Spectrum>) {
    let lib: Vec<Spectrum> = (0..2).map(|i| specbench::hsi::library::random_smooth_spectrum(grid, 3, 60 + i).unwrap()).collect();
    let labels = random_label_map(16, 16, 2, seed).unwrap();
    (synthesize_pure_scene(&labels, &lib, &random_alpha(256, 0.5, 1.0, seed)).unwrap(), lib)
}

#[test]
fn noiseless_scan_equals_optical_projection() {
    let grid = WavelengthGrid::new(600.0, 900.0, 32).unwrap();
    let (cube, lib) = two_class_scene(grid, 1);
    let bank = specbench::learn::matched_filter(&lib[0], &lib[1]).unwrap();
    let ap = CodedApertureModel::identity(grid);
    let ir = IlluminantAndResponse::flat(grid);
    let optical = normalize_features(&acquire_measurements(&cube, &ap, &ir, &bank, None, SlmEncoding::Ideal).unwrap(), None);
    let scan = full_scan_then_project(&cube, &ap, &ir, &bank, None).unwrap();
    for (a, b) in optical.features.iter().zip(&scan.features) {
        assert!((a - b).abs() < 1e-6);
    }
}

#[test]
fn scan_features_are_noisier() {
    let grid = WavelengthGrid::new(600.0, 900.0, 32).unwrap();
    let (cube, lib) = two_class_scene(grid, 2);
    let bank = specbench::learn::matched_filter(&lib[0], &lib[1]).unwrap();
    let ap = CodedApertureModel::identity(grid);
    let ir = IlluminantAndResponse::flat(grid);
    let clean = normalize_features(&acquire_measurements(&cube, &ap, &ir, &bank, None, SlmEncoding::Ideal).unwrap(), None);
    let (mut opt_var, mut scan_var) = (0.0, 0.0);
    for seed in 0..100 {
        let noise = NoiseModel::new(1e4, 0.0, seed).unwrap();
        let o = normalize_features(&acquire_measurements(&cube, &ap, &ir, &bank, Some(&noise), SlmEncoding::Ideal).unwrap(), None);
        let s = full_scan_then_project(&cube, &ap, &ir, &bank, Some(&noise)).unwrap();
        for p in 0..clean.pixels() {
            opt_var += (o.pixel(p)[0] - clean.pixel(p)[0]).powi(2);
            scan_var += (s.pixel(p)[0] - clean.pixel(p)[0]).powi(2);
        }
    }
    assert!(scan_var > opt_var, "scan {scan_var} optical {opt_var}");
}

#[test]
fn five_class_svm_is_exact_on_separable_library() {
    // Each class peaks in its own fifth of the band range.
    let grid = WavelengthGrid::new(600.0, 900.0, 20).unwrap();
    let lib: Vec<Spectrum> = (0..5)
        .map(|k| Spectrum::new(grid, (0..20).map(|b| if b / 4 == k { 1.0 } else { 0.1 }).collect()).unwrap())
        .collect();
    let labels = random_label_map(30, 30, 5, 7).unwrap();
    let cube = synthesize_pure_scene(&labels, &lib, &random_alpha(900, 0.5, 2.0, 7)).unwrap();
    let ds = split_dataset(&LabeledSpectra::from_cube(&cube, &labels, &[]).unwrap(), [0.2, 0.05, 0.75], 7).unwrap();
    let svm = train_svm(&ds, &SvmConfig { reg: 1e-4, epochs: 100, seed: 7 }).unwrap();
    let model = Model::Svm(svm);
    let bank = extract_filters(&model, grid).unwrap();
    let ir = IlluminantAndResponse::flat(grid);
    let ms = acquire_measurements(&cube, &CodedApertureModel::identity(grid), &ir, &bank, None, SlmEncoding::Ideal).unwrap();
    let (_, pred) = classify_pixels(&normalize_features(&ms, None), &Classifier::for_model(&model, &bank)).unwrap();
    let report = confusion_and_accuracy(&pred, &labels).unwrap();
    assert_eq!(report.overall_accuracy, 1.0);
}
