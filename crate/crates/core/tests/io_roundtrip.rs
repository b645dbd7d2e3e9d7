//! On-disk formats survive a write/read cycle.

use rand::Rng as _;

use specbench::hsi::io::{load_cube, load_labels, save_cube, save_labels};
use specbench::hsi::library::material_library;
use specbench::hsi::synth::{random_abundances, random_label_map, synthesize_mixed_scene};
use specbench::hsi::{resample_spectrum, HsiCube, IlluminantAndResponse, Spectrum, WavelengthGrid};
use specbench::kv::KvDoc;
use specbench::learn::{FilterSource, SpectralFilterBank};
use specbench::optics::{acquire_measurements, coded_mask, decode_pbm, encode_pbm, CodedApertureModel, MeasurementSet, NoiseModel, SlmEncoding};
use specbench::rng;

#[test]
fn cube_and_labels() {
    let dir = tempfile::tempdir().unwrap();
    let grid = WavelengthGrid::default_nir();
    let labels = random_label_map(12, 9, 5, 3).unwrap();
    let cube = synthesize_mixed_scene(&random_abundances(&labels, 0.7, 3).unwrap(), &material_library(grid).unwrap()).unwrap();
    save_cube(&cube, dir.path().join("c.hsc")).unwrap();
    save_labels(&labels, dir.path().join("l.lbl")).unwrap();
    let back = load_cube(dir.path().join("c.hsc")).unwrap();
    // Stored as f32.
    assert_eq!(back, cube.quantized_f32());
    assert_eq!(load_labels(dir.path().join("l.lbl")).unwrap(), labels);
}

#[test]
fn mask_bank_and_measurements() {
    let dir = tempfile::tempdir().unwrap();
    let mask = coded_mask(16, 4).unwrap();
    assert_eq!(decode_pbm(&encode_pbm(&mask)).unwrap(), mask);

    let grid = WavelengthGrid::new(600.0, 900.0, 8).unwrap();
    let mut r = rng::seeded(5);
    let filters: Vec<Vec<f64>> = (0..2).map(|_| (0..8).map(|_| r.random_range(-1.0..1.0)).collect()).collect();
    let bank = SpectralFilterBank::new(grid, filters, vec![0.25, -0.5], FilterSource::External).unwrap();
    bank.save_csv(dir.path().join("bank.csv")).unwrap();
    let loaded = SpectralFilterBank::load_csv(dir.path().join("bank.csv")).unwrap();
    assert_eq!(loaded.len(), 2);
    for (a, b) in loaded.filters().iter().flatten().zip(bank.filters().iter().flatten()) {
        assert!((a - b).abs() < 1e-12);
    }

    let cube = HsiCube::new(4, 3, grid, (0..96).map(|_| r.random::<f64>()).collect()).unwrap();
    let noise = NoiseModel::new(500.0, 1.0, 9).unwrap();
    let ms = acquire_measurements(&cube, &CodedApertureModel::identity(grid), &IlluminantAndResponse::flat(grid), &bank, Some(&noise), SlmEncoding::default_binary()).unwrap();
    let path = dir.path().join("m.hsc");
    ms.save(&path).unwrap();
    let back = MeasurementSet::load(&path).unwrap();
    assert_eq!(back.images_captured, ms.images_captured);
    assert_eq!(back.encoding, ms.encoding);
    for (a, b) in back.filter_images.iter().zip(&ms.filter_images) {
        for (x, y) in a.data().iter().zip(b.data()) {
            assert!((x - y).abs() <= 1e-6 * y.abs().max(1.0));
        }
    }
}

#[test]
fn kv_text_round_trip() {
    let mut d = KvDoc::new();
    d.set("alpha", 1.5);
    d.set("name", "a b");
    assert_eq!(KvDoc::parse(&d.to_text()).unwrap(), d);
}

#[test]
fn resampling_matches_pointwise_interpolation() {
    let src = WavelengthGrid::new(400.0, 2500.0, 220).unwrap();
    let dst = WavelengthGrid::default_nir();
    let mut r = rng::seeded(6);
    let s = Spectrum::new(src, (0..220).map(|_| r.random::<f64>()).collect()).unwrap();
    let out = resample_spectrum(&s, &dst).unwrap();
    for (i, &l) in dst.centers().iter().enumerate() {
        let pos = (l - src.lambda_min()) / src.delta();
        let lo = pos.floor() as usize;
        let t = pos - lo as f64;
        let want = if t == 0.0 { s.values()[lo] } else { (1.0 - t) * s.values()[lo] + t * s.values()[lo + 1] };
        assert!((out.values()[i] - want).abs() < 1e-9);
    }
}
