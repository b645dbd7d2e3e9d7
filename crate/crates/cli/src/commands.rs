use std::path::{Path, PathBuf};

use specbench::calibration::{
    estimate_psf, mtf_experiment, pinhole_image, run_calibration, sector_star, wiener_deconvolve, CalibrationConfig,
    DEFAULT_SUPPORT_FRACTION,
};
use specbench::eval::{
    classify_pixels, confusion_and_accuracy, full_scan_then_project, normalize_features, roc_from_maps, Roc,
    sweep_filter_count, Classifier, FeatureImageSet, PredictedLabelMap, ScoreMap, DEFAULT_KNEE_MARGIN,
};
use specbench::hsi::io::{
    import_raw_bsq, load_cube, load_labels, load_stack, save_cube, save_labels, save_stack, PlaneStack, RawDtype,
    RawLayout,
};
use specbench::hsi::library::{material_spectrum, random_smooth_spectrum, MATERIAL_NAMES};
use specbench::hsi::synth::{multiplicative_noise, random_abundances, random_alpha, random_label_map, synthesize_mixed_scene, synthesize_pure_scene};
use specbench::hsi::{IlluminantAndResponse, LabelMap, Spectrum, WavelengthGrid};
use specbench::image::{Image, Kernel2D};
use specbench::kv::{self, KvDoc};
use specbench::learn::{
    default_reg_grid, extract_filters, load_model, matched_filter, save_model, split_dataset, svm_hyperparameter_search,
    train_mlp, train_svm, FilterSource, LabeledSpectra, MlpConfig, Model, Optimizer, SpectralFilterBank, Split,
    SvmConfig,
};
use specbench::optics::{
    acquire_measurements, apply_coded_blur, build_aperture_model, default_mask, load_pbm, AcquisitionPlan, ApertureGeometry,
    CodedApertureModel, MeasurementSet, NoiseModel, SlmEncoding,
};
use specbench::{Error, Result};

use crate::config::{beside, parse_size, Run};
use crate::{
    CalibrateArgs, CaptureArgs, ClassifyArgs, Cli, Command, DataArgs, EvaluateArgs, ExtractArgs, GridArgs,
    ImportRawArgs, MlpArgs, MtfArgs, OpticsArgs, PlanArgs, RocArgs, ScanArgs, SweepArgs, SynthArgs, TrainKind,
};

pub fn run(cli: Cli) -> Result<()> {
    let mut run = Run::new(cli.config.as_deref())?;
    if let Some(n) = run.optional::<usize>("threads", cli.threads)? {
        if n == 0 {
            return Err(Error::Config("--threads must be positive".into()));
        }
        // Fails only if a pool already exists, which cannot happen here.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match cli.command {
        Command::Synth(a) => synth(&mut run, a),
        Command::ImportRaw(a) => import_raw(&mut run, a),
        Command::Capture(a) => capture(&mut run, a),
        Command::Scan(a) => scan(&mut run, a),
        Command::Train { kind } => train(&mut run, kind),
        Command::Extract(a) => extract(&mut run, a),
        Command::Plan(a) => plan(&mut run, a),
        Command::Classify(a) => classify(&mut run, a),
        Command::Evaluate(a) => evaluate(&mut run, a),
        Command::Roc(a) => roc(&mut run, a),
        Command::Sweep(a) => sweep(&mut run, a),
        Command::Calibrate(a) => calibrate(&mut run, a),
        Command::Mtf(a) => mtf(&mut run, a),
    }
}

fn grid(run: &mut Run, g: GridArgs) -> Result<WavelengthGrid> {
    let d = WavelengthGrid::default_nir();
    WavelengthGrid::new(
        run.value("wl_min", g.wl_min, d.lambda_min())?,
        run.value("wl_max", g.wl_max, d.lambda_max())?,
        run.value("bands", g.bands, d.bands())?,
    )
}

fn aperture(run: &mut Run, flag: Option<String>, grid: WavelengthGrid) -> Result<CodedApertureModel> {
    let which = run.value("aperture", flag, "default".to_string())?;
    named_aperture(&which, grid)
}

fn named_aperture(which: &str, grid: WavelengthGrid) -> Result<CodedApertureModel> {
    let mask = match which {
        "identity" => return Ok(CodedApertureModel::identity(grid)),
        "default" => default_mask(),
        path => {
            crate::config::require_file(Path::new(path))?;
            load_pbm(path)?
        }
    };
    build_aperture_model(&mask, ApertureGeometry::matched_to(&grid), grid)
}

fn slm(run: &mut Run, flag: Option<String>) -> Result<SlmEncoding> {
    match run.value("slm", flag, "binary".to_string())?.as_str() {
        "binary" => Ok(SlmEncoding::default_binary()),
        other => other.parse(),
    }
}

fn noise(run: &mut Run, o: &OpticsArgs) -> Result<Option<NoiseModel>> {
    let seed = run.value("seed", o.seed, 0)?;
    match run.optional("noise_photons", o.noise_photons)? {
        Some(peak) => Ok(Some(NoiseModel::new(peak, run.value("read_sigma", o.read_sigma, 0.0)?, seed)?)),
        None => Ok(None),
    }
}

fn fractions(run: &mut Run, flag: Option<String>) -> Result<[f64; 3]> {
    let f: Vec<f64> = run.list("split", flag, "0.2,0.05,0.75")?;
    f.try_into().map_err(|_| Error::Config("--split takes three fractions".into()))
}

/// Loads cube and labels, and splits the labeled pixels.
fn dataset(run: &mut Run, d: DataArgs) -> Result<(LabeledSpectra, WavelengthGrid, LabelMap)> {
    let data = run.input("data", d.data)?;
    let labels = run.input("labels", d.labels)?;
    let skip: Vec<usize> = run.list("skip", d.skip, "")?;
    let split = fractions(run, d.split)?;
    let seed = run.value("seed", d.seed, 0)?;
    let mut cube = load_cube(data)?;
    if let Some(which) = run.optional("aperture", d.aperture)? {
        cube = apply_coded_blur(&cube, &named_aperture(&which, *cube.grid())?)?;
    }
    let labels = load_labels(labels)?;
    let ds = split_dataset(&LabeledSpectra::from_cube(&cube, &labels, &skip)?, split, seed)?;
    Ok((ds, *cube.grid(), labels))
}

fn mlp_config(run: &mut Run, m: MlpArgs, q: usize, seed: u64) -> Result<MlpConfig> {
    let d = MlpConfig::default();
    let optimizer = match run.value("optimizer", m.optimizer, d.optimizer.to_string())?.as_str() {
        "adam" => Optimizer::Adam,
        "sgd" => Optimizer::Sgd,
        other => return Err(Error::Config(format!("unknown optimizer {other:?} (expected adam or sgd)"))),
    };
    Ok(MlpConfig {
        q,
        hidden: run.list("hidden", m.hidden, &kv::join(&d.hidden))?,
        dropout: run.value("dropout", m.dropout, d.dropout)?,
        lr: run.value("lr", m.lr, d.lr)?,
        epochs: run.value("epochs", m.epochs, d.epochs)?,
        batch: run.value("batch", m.batch, d.batch)?,
        optimizer,
        seed,
    })
}

fn grid_kv(doc: &mut KvDoc, g: &WavelengthGrid) {
    doc.set("wl_min", g.lambda_min());
    doc.set("wl_max", g.lambda_max());
    doc.set("bands", g.bands());
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text)?;
    Ok(())
}

fn with_ext(p: &Path, ext: &str) -> PathBuf {
    p.with_extension(ext)
}

fn synth(run: &mut Run, a: SynthArgs) -> Result<()> {
    let classes = run.value("classes", a.classes, MATERIAL_NAMES.len())?;
    let (w, h) = parse_size(&run.value("size", a.size, "64x64".to_string())?)?;
    let seed = run.value("seed", a.seed, 0)?;
    let mixed = run.value("mixed", a.mixed.then_some(true), false)?;
    let grid = grid(run, a.grid)?;
    let out = run.output("out", a.out, "scene")?;
    if classes == 0 || classes > u16::MAX as usize {
        return Err(Error::Config(format!("--classes {classes} out of range")));
    }
    // Reference materials first, then random smooth spectra.
    let library = (0..classes)
        .map(|k| {
            if k < MATERIAL_NAMES.len() {
                material_spectrum(grid, k)
            } else {
                random_smooth_spectrum(grid, 3, seed.wrapping_add(k as u64))
            }
        })
        .collect::<Result<Vec<Spectrum>>>()?;
    let names: Vec<String> = (0..classes)
        .map(|k| MATERIAL_NAMES.get(k).map_or_else(|| format!("class{k}"), |n| n.to_string()))
        .collect();
    let raw = random_label_map(w, h, classes, seed)?;
    let labels = LabelMap::new(w, h, raw.labels().to_vec(), names)?;
    let cube = if mixed {
        let purity = run.value("purity", a.purity, 0.8)?;
        synthesize_mixed_scene(&random_abundances(&labels, purity, seed)?, &library)?
    } else {
        let lo = run.value("alpha_min", a.alpha_min, 0.5)?;
        let hi = run.value("alpha_max", a.alpha_max, 1.5)?;
        if !(lo > 0.0 && lo <= hi) {
            return Err(Error::Config(format!("alpha range [{lo}, {hi}] must be positive and ordered")));
        }
        synthesize_pure_scene(&labels, &library, &random_alpha(w * h, lo, hi, seed))?
    };
    let cube = multiplicative_noise(&cube, run.value("noise", a.noise, 0.0)?, seed)?;
    save_cube(&cube, with_ext(&out, "hsc"))?;
    save_labels(&labels, with_ext(&out, "lbl"))?;
    run.write_beside(&out)?;
    println!("wrote {} and {}", with_ext(&out, "hsc").display(), with_ext(&out, "lbl").display());
    Ok(())
}

fn import_raw(run: &mut Run, a: ImportRawArgs) -> Result<()> {
    let path = run.input("raw_bsq", a.raw_bsq)?;
    let dtype: RawDtype = run.required::<String>("dtype", a.dtype)?.parse()?;
    let layout = RawLayout {
        width: run.required("width", a.width)?,
        height: run.required("height", a.height)?,
        bands: run.required("bands", a.bands)?,
        dtype,
        lambda_min: run.required("wl_min", a.wl_min)?,
        lambda_max: run.required("wl_max", a.wl_max)?,
    };
    let gt = run.optional_input("gt_raw", a.gt_raw)?;
    let out = run.output("out", a.out, "imported.hsc")?;
    let cube = import_raw_bsq(&path, &layout)?;
    save_cube(&cube, &out)?;
    if let Some(gt) = gt {
        let bytes = std::fs::read(gt)?;
        let n = layout.width * layout.height;
        if bytes.len() != 2 * n {
            return Err(Error::Truncated { expected: 2 * n, found: bytes.len() });
        }
        let labels: Vec<u16> = bytes.chunks_exact(2).map(|c| u16::from_le_bytes([c[0], c[1]])).collect();
        let k = labels.iter().copied().max().unwrap_or(0) as usize + 1;
        save_labels(&LabelMap::new(layout.width, layout.height, labels, LabelMap::default_names(k))?, with_ext(&out, "lbl"))?;
    }
    run.write_beside(&out)?;
    println!("imported {}x{}x{} cube to {}", layout.width, layout.height, layout.bands, out.display());
    Ok(())
}

fn capture(run: &mut Run, a: CaptureArgs) -> Result<()> {
    let cube_path = run.input("cube", a.cube)?;
    let bank_path = run.input("bank", a.bank)?;
    let encoding = slm(run, a.slm)?;
    let noise = noise(run, &a.optics)?;
    let out = run.output("out", a.out, "measurements.hsc")?;
    let cube = load_cube(cube_path)?;
    let bank = SpectralFilterBank::load_csv(bank_path)?;
    let ap = aperture(run, a.optics.aperture, *cube.grid())?;
    let ir = IlluminantAndResponse::flat(*cube.grid());
    let ms = acquire_measurements(&cube, &ap, &ir, &bank, noise.as_ref(), encoding)?;
    ms.save(&out)?;
    run.write_beside(&out)?;
    println!("images_captured={}", ms.images_captured);
    Ok(())
}

/// Feature planes followed by a validity plane (1 valid, 0 dark), plus a
/// `<out>.meta` sidecar.
fn save_features(f: &FeatureImageSet, out: &Path) -> Result<()> {
    let mut planes: Vec<Image> = (0..f.filters).map(|k| f.plane(k)).collect();
    planes.push(Image::from_vec(f.width, f.height, f.valid.iter().map(|&v| f64::from(u8::from(v))).collect())?);
    save_stack(&PlaneStack::from_images(&planes)?, out)?;
    let mut meta = KvDoc::new();
    meta.set("filters", f.filters);
    meta.set("images_captured", f.images_captured);
    write_text(&beside(out, "meta"), &meta.to_text())
}

fn load_features(path: &Path) -> Result<FeatureImageSet> {
    let stack = load_stack(path)?;
    let meta_path = beside(path, "meta");
    crate::config::require_file(&meta_path)?;
    let meta = KvDoc::parse(&std::fs::read_to_string(meta_path)?)?;
    let q: usize = meta.parsed("filters")?;
    if stack.planes() != q + 1 {
        return Err(Error::Dimension(format!("{} planes for {q} features", stack.planes())));
    }
    let n = stack.width * stack.height;
    let valid: Vec<bool> = stack.plane(q).data().iter().map(|&v| v > 0.5).collect();
    let planes: Vec<Image> = (0..q).map(|k| stack.plane(k)).collect();
    let mut features = vec![f64::NAN; n * q];
    for p in (0..n).filter(|&p| valid[p]) {
        for (k, img) in planes.iter().enumerate() {
            features[p * q + k] = img.data()[p];
        }
    }
    Ok(FeatureImageSet {
        width: stack.width,
        height: stack.height,
        filters: q,
        features,
        valid,
        images_captured: meta.parsed("images_captured")?,
    })
}

fn scan(run: &mut Run, a: ScanArgs) -> Result<()> {
    let cube_path = run.input("cube", a.cube)?;
    let bank_path = run.input("bank", a.bank)?;
    let noise = noise(run, &a.optics)?;
    let out = run.output("out", a.out, "features.hsc")?;
    let cube = load_cube(cube_path)?;
    let bank = SpectralFilterBank::load_csv(bank_path)?;
    let ap = aperture(run, a.optics.aperture, *cube.grid())?;
    let f = full_scan_then_project(&cube, &ap, &IlluminantAndResponse::flat(*cube.grid()), &bank, noise.as_ref())?;
    save_features(&f, &out)?;
    run.write_beside(&out)?;
    println!("images_captured={}", f.images_captured);
    Ok(())
}

fn save_trained(run: &Run, model: &Model, grid: &WavelengthGrid, extra: KvDoc, out: &Path) -> Result<SpectralFilterBank> {
    let mut extra = extra;
    grid_kv(&mut extra, grid);
    save_model(model, &extra, out)?;
    // Weights are stored as f32; the bank must match what `--model` loads.
    let (stored, _) = load_model(out)?;
    let bank = extract_filters(&stored, *grid)?;
    bank.save_csv(with_ext(out, "bank.csv"))?;
    run.write_beside(out)?;
    Ok(bank)
}

fn train(run: &mut Run, kind: TrainKind) -> Result<()> {
    match kind {
        TrainKind::Svm { data, reg, epochs, search, folds, out } => {
            let (ds, grid, _) = dataset(run, data)?;
            let d = SvmConfig::default();
            let cfg = SvmConfig {
                reg: run.value("reg", reg, d.reg)?,
                epochs: run.value("epochs", epochs, d.epochs)?,
                seed: run.value("seed", None, d.seed)?,
            };
            let search = run.value("search", search.then_some(true), false)?;
            let out = run.output("out", out, "svm.model")?;
            let mut extra = KvDoc::new();
            let model = if search {
                let folds = run.value("folds", folds, 5)?;
                let r = svm_hyperparameter_search(&ds, &default_reg_grid(), folds, &cfg)?;
                extra.set("best_reg", r.best_reg);
                r.model
            } else {
                train_svm(&ds, &cfg)?
            };
            let test = ds.subset(Split::Test);
            let acc = model.accuracy(&test);
            extra.set("test_accuracy", acc);
            let bank = save_trained(run, &Model::Svm(model), &grid, extra, &out)?;
            println!("filters={} test_accuracy={acc:.4}", bank.len());
        }
        TrainKind::Mlp { data, q, mlp, out } => {
            let (ds, grid, _) = dataset(run, data)?;
            let q = run.value("q", q, MlpConfig::default().q)?;
            let seed = run.value("seed", None, 0)?;
            let cfg = mlp_config(run, mlp, q, seed)?;
            let out = run.output("out", out, "mlp.model")?;
            let t = train_mlp(&ds, &cfg)?;
            let acc = t.model.accuracy(&ds.subset(Split::Test));
            let mut extra = KvDoc::new();
            extra.set("best_epoch", t.best_epoch);
            extra.set("test_accuracy", acc);
            let bank = save_trained(run, &Model::Mlp(t.model), &grid, extra, &out)?;
            println!("filters={} test_accuracy={acc:.4}", bank.len());
        }
        TrainKind::Matched { data, out } => {
            let (ds, grid, labels) = dataset(run, data)?;
            let out = run.output("out", out, "matched.bank.csv")?;
            if labels.classes() != 2 {
                return Err(Error::Validation(format!("matched filter needs 2 classes, label map has {}", labels.classes())));
            }
            let train = ds.subset(Split::Train);
            let means = class_means(&train, grid)?;
            let probe = matched_filter(&means[1], &means[0])?;
            // Midpoint between the class-mean responses; class 1 lies above.
            let d = probe.filter(0);
            let r: Vec<f64> = means.iter().map(|m| d.iter().zip(m.values()).map(|(a, b)| a * b).sum()).collect();
            let threshold = 0.5 * (r[0] + r[1]);
            let bank = SpectralFilterBank::new(grid, vec![d.to_vec()], vec![-threshold], FilterSource::Matched)?;
            bank.save_csv(&out)?;
            run.write_beside(&out)?;
            println!("threshold={threshold}");
        }
    }
    Ok(())
}

/// Mean row of each class; every class must be present.
fn class_means(ds: &LabeledSpectra, grid: WavelengthGrid) -> Result<Vec<Spectrum>> {
    (0..ds.classes())
        .map(|c| {
            let rows: Vec<&[f64]> = (0..ds.len()).filter(|&i| ds.label(i) == c).map(|i| ds.row(i)).collect();
            if rows.is_empty() {
                return Err(Error::Validation(format!("class {c} has no training pixels")));
            }
            let mean = (0..ds.bands()).map(|b| rows.iter().map(|r| r[b]).sum::<f64>() / rows.len() as f64).collect();
            Spectrum::new(grid, mean)
        })
        .collect()
}

fn model_grid(extra: &KvDoc) -> Result<WavelengthGrid> {
    WavelengthGrid::new(extra.parsed("wl_min")?, extra.parsed("wl_max")?, extra.parsed("bands")?)
}

fn extract(run: &mut Run, a: ExtractArgs) -> Result<()> {
    let model = run.input("model", a.model)?;
    let out = run.output("out", a.out, "bank.csv")?;
    let (model, extra) = load_model(model)?;
    let bank = extract_filters(&model, model_grid(&extra)?)?;
    bank.save_csv(&out)?;
    run.write_beside(&out)?;
    println!("filters={}", bank.len());
    Ok(())
}

fn plan(run: &mut Run, a: PlanArgs) -> Result<()> {
    let bank = SpectralFilterBank::load_csv(run.input("bank", a.bank)?)?;
    let p = AcquisitionPlan::for_bank(&bank, slm(run, a.slm)?);
    println!("filters={} signed={} dc_frame={} images={}", p.filters, p.signed, p.dc_frame, p.images());
    Ok(())
}

fn score_stack(s: &ScoreMap) -> Result<PlaneStack> {
    PlaneStack::from_images(&(0..s.classes).map(|k| s.plane(k)).collect::<Vec<_>>())
}

fn load_scores(path: &Path) -> Result<ScoreMap> {
    let stack = load_stack(path)?;
    let (n, k) = (stack.width * stack.height, stack.planes());
    let mut scores = vec![0.0; n * k];
    for (c, chunk) in stack.values.chunks_exact(n).enumerate() {
        for (p, &v) in chunk.iter().enumerate() {
            scores[p * k + c] = v as f64;
        }
    }
    Ok(ScoreMap { width: stack.width, height: stack.height, classes: k, scores })
}

/// ROC of `class` against all other classes.
fn one_vs_rest(scores: &ScoreMap, class: usize, truth: &LabelMap) -> Result<Roc> {
    if class >= scores.classes || class >= truth.classes() {
        return Err(Error::Config(format!("--class {class} out of range")));
    }
    let n = scores.width * scores.height;
    let pos: Vec<f64> = (0..n).map(|p| scores.pixel(p)[class]).collect();
    let binary = ScoreMap {
        width: scores.width,
        height: scores.height,
        classes: 2,
        scores: pos.iter().flat_map(|&v| [-v, v]).collect(),
    };
    let labels = truth.labels().iter().map(|&l| u16::from(l as usize == class)).collect();
    let truth = LabelMap::new(truth.width(), truth.height(), labels, vec!["rest".into(), "class".into()])?;
    roc_from_maps(&binary, 1, &truth)
}

fn classify(run: &mut Run, a: ClassifyArgs) -> Result<()> {
    let measurements = run.optional_input("measurements", a.measurements)?;
    let features_path = run.optional_input("features", a.features)?;
    let model = run.optional_input("model", a.model)?;
    let bank = run.optional_input("bank", a.bank)?;
    let threshold = run.optional("threshold", a.threshold)?;
    let floor = run.optional("floor", a.floor)?;
    let names_from = run.optional_input("names_from", a.names_from)?;
    let out = run.output("out", a.out, "pred.lbl")?;
    let features = match (measurements, features_path) {
        (Some(m), None) => normalize_features(&MeasurementSet::load(m)?, floor),
        (None, Some(f)) => load_features(&f)?,
        _ => return Err(Error::Config("give exactly one of --measurements or --features".into())),
    };
    let classifier = match (model, bank) {
        (Some(m), None) => {
            let (model, extra) = load_model(m)?;
            Classifier::for_model(&model, &extract_filters(&model, model_grid(&extra)?)?)
        }
        (None, Some(b)) => {
            let bank = SpectralFilterBank::load_csv(b)?;
            match (bank.len(), threshold) {
                (1, t) => Classifier::Threshold(t.unwrap_or(-bank.offsets()[0])),
                (_, None) => Classifier::Offsets(bank.offsets().to_vec()),
                (_, Some(_)) => return Err(Error::Config("--threshold needs a single-filter bank".into())),
            }
        }
        _ => return Err(Error::Config("give exactly one of --model or --bank".into())),
    };
    let (scores, pred) = classify_pixels(&features, &classifier)?;
    let names = match names_from {
        Some(p) => Some(load_labels(p)?.class_names().to_vec()),
        None => None,
    };
    save_labels(&pred.to_label_map(names.as_deref())?, &out)?;
    save_stack(&score_stack(&scores)?, with_ext(&out, "scores.hsc"))?;
    run.write_beside(&out)?;
    println!("classified {} of {} pixels", features.valid_count(), features.pixels());
    Ok(())
}

fn evaluate(run: &mut Run, a: EvaluateArgs) -> Result<()> {
    let pred = PredictedLabelMap::from_label_map(&load_labels(run.input("pred", a.pred)?)?);
    let truth = load_labels(run.input("truth", a.truth)?)?;
    let scores = run.optional_input("scores", a.scores)?;
    let class = run.value("class", a.class, 0)?;
    let images = run.optional("images_captured", a.images_captured)?;
    let out = run.output("out", a.out, "report.kv")?;
    let mut report = confusion_and_accuracy(&pred, &truth)?;
    report.images_captured = images;
    if let Some(s) = scores {
        report.roc = Some(one_vs_rest(&load_scores(&s)?, class, &truth)?);
    }
    write_text(&out, &report.to_kv().to_text())?;
    write_text(&with_ext(&out, "confusion.csv"), &report.confusion_csv())?;
    write_text(&with_ext(&out, "normalized.csv"), &report.normalized_csv())?;
    if let Some(r) = &report.roc {
        write_text(&with_ext(&out, "roc.csv"), &r.to_csv())?;
    }
    run.write_beside(&out)?;
    println!("overall_accuracy={:.4}", report.overall_accuracy);
    Ok(())
}

fn roc(run: &mut Run, a: RocArgs) -> Result<()> {
    let scores = load_scores(&run.input("scores", a.scores)?)?;
    let truth = load_labels(run.input("truth", a.truth)?)?;
    let class = run.value("class", a.class, 0)?;
    let out = run.output("out", a.out, "roc.csv")?;
    let r = one_vs_rest(&scores, class, &truth)?;
    write_text(&out, &r.to_csv())?;
    run.write_beside(&out)?;
    println!("auc={:.4}", r.auc);
    Ok(())
}

fn sweep(run: &mut Run, a: SweepArgs) -> Result<()> {
    let (ds, _, _) = dataset(run, a.data)?;
    let qs: Vec<usize> = run.list("q", a.q, "1,3,5,10,20")?;
    let margin = run.value("margin", a.margin, DEFAULT_KNEE_MARGIN)?;
    let seed = run.value("seed", None, 0)?;
    let cfg = mlp_config(run, a.mlp, 0, seed)?;
    let out = run.output("out", a.out, "sweep.csv")?;
    let r = sweep_filter_count(&ds, &qs, &cfg, margin)?;
    write_text(&out, &r.to_csv())?;
    let mut summary = KvDoc::new();
    summary.set("knee", r.knee.map_or_else(|| "none".to_string(), |k| k.to_string()));
    summary.set("margin", margin);
    write_text(&with_ext(&out, "kv"), &summary.to_text())?;
    run.write_beside(&out)?;
    match r.knee {
        Some(k) => println!("knee={k}"),
        None => println!("knee=none"),
    }
    Ok(())
}

fn kernel_image(k: &Kernel2D) -> Result<Image> {
    Image::from_vec(k.width(), k.height(), k.data().to_vec())
}

fn calibrate(run: &mut Run, a: CalibrateArgs) -> Result<()> {
    let grid = grid(run, a.grid)?;
    let ap = aperture(run, a.aperture, grid)?;
    let d = CalibrationConfig::default();
    let cfg = CalibrationConfig {
        noise_fraction: run.value("noise_fraction", a.noise_fraction, d.noise_fraction)?,
        seed: run.value("seed", a.seed, d.seed)?,
        spectral_nsr: run.value("spectral_nsr", a.spectral_nsr, d.spectral_nsr)?,
        wiener_nsr: run.value("wiener_nsr", a.wiener_nsr, d.wiener_nsr)?,
        star_size: run.value("star_size", a.star_size, d.star_size)?,
        spokes: run.value("spokes", a.spokes, d.spokes)?,
        ..d
    };
    let out = run.output("out", a.out, "calibration")?;
    let r = run_calibration(&ap, &IlluminantAndResponse::flat(grid), &cfg)?;
    write_text(&with_ext(&out, "kv"), &r.to_kv().to_text())?;
    write_text(&with_ext(&out, "mtf_raw.csv"), &r.mtf_raw.to_csv())?;
    write_text(&with_ext(&out, "mtf_deconvolved.csv"), &r.mtf_deconvolved.to_csv())?;
    std::fs::write(with_ext(&out, "psf.pgm"), kernel_image(&r.psf_estimate)?.to_pgm())?;
    run.write_beside(&out)?;
    println!(
        "code={} slope_nm={:.4} intercept_nm={:.2} mtf30_raw={:.4} mtf30_deconvolved={:.4}",
        r.estimated_code.to_bits(),
        r.mapping.slope,
        r.mapping.intercept,
        r.mtf30_raw,
        r.mtf30_deconvolved
    );
    Ok(())
}

fn mtf(run: &mut Run, a: MtfArgs) -> Result<()> {
    let grid = grid(run, a.grid)?;
    let ap = aperture(run, a.aperture, grid)?;
    let band = run.value("band", a.band, grid.bands() / 2)?;
    if band >= grid.bands() {
        return Err(Error::Config(format!("--band {band} outside {} bands", grid.bands())));
    }
    let d = CalibrationConfig::default();
    let cfg = CalibrationConfig {
        wiener_nsr: run.value("wiener_nsr", a.wiener_nsr, d.wiener_nsr)?,
        star_size: run.value("star_size", a.star_size, d.star_size)?,
        spokes: run.value("spokes", a.spokes, d.spokes)?,
        ..d
    };
    let out = run.output("out", a.out, "mtf")?;
    // The PSF as a pinhole calibration would recover it.
    let truth = ap.psf(band);
    let (w, h) = (3 * truth.width().max(8), 3 * truth.height().max(8));
    let psf = estimate_psf(&pinhole_image(truth, w, h, w / 2, h / 2)?, DEFAULT_SUPPORT_FRACTION)?;
    let (raw, deconvolved) = mtf_experiment(&psf, &cfg)?;
    let star = sector_star(cfg.star_size, cfg.spokes)?;
    let blurred = psf.convolve_circular(&star);
    let restored = wiener_deconvolve(&blurred, &psf, cfg.wiener_nsr)?;
    std::fs::write(with_ext(&out, "star.pgm"), star.to_pgm())?;
    std::fs::write(with_ext(&out, "blurred.pgm"), blurred.to_pgm())?;
    std::fs::write(with_ext(&out, "deconvolved.pgm"), restored.to_pgm())?;
    write_text(&with_ext(&out, "raw.csv"), &raw.to_csv())?;
    write_text(&with_ext(&out, "deconvolved.csv"), &deconvolved.to_csv())?;
    run.write_beside(&out)?;
    println!("mtf30_raw={:.4} mtf30_deconvolved={:.4}", raw.mtf30(), deconvolved.mtf30());
    Ok(())
}
