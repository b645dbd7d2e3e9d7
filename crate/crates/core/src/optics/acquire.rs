//! Measurement plan and simulated acquisition of filter-bank features.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::hsi::io::{self, PlaneStack};
use crate::hsi::{HsiCube, IlluminantAndResponse, Spectrum};
use crate::image::Image;
use crate::kv::{self, KvDoc};
use crate::learn::SpectralFilterBank;
use crate::rng;

use super::capture::{add_sensor_noise, project};
use super::slm::{encode_filter_to_slm, SlmEncoding};
use super::{apply_coded_blur, CodedApertureModel, NoiseModel};

/// Frames needed to measure a bank.
///
/// Signed banks take a positive and a negative frame per filter; the DC band
/// cancels in their difference. Non-negative banks take one frame per
/// filter and, when the SLM has a DC band, one DC-only frame to subtract.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AcquisitionPlan {
    pub filters: usize,
    pub signed: bool,
    pub dc_frame: bool,
}

impl AcquisitionPlan {
    pub fn new(filters: usize, signed: bool, encoding: SlmEncoding) -> Self {
        let dc_frame = filters > 0 && !signed && encoding.dc_rows() > 0;
        Self { filters, signed, dc_frame }
    }

    pub fn for_bank(bank: &SpectralFilterBank, encoding: SlmEncoding) -> Self {
        Self::new(bank.len(), !bank.is_nonnegative(), encoding)
    }

    /// Sum image, plus one or two frames per filter, plus the DC frame.
    pub fn images(&self) -> usize {
        1 + self.filters * if self.signed { 2 } else { 1 } + usize::from(self.dc_frame)
    }
}

/// Sum image and reconstructed signed feature images `Ĩ_k = d_k · Ĥ`
/// (offsets not applied, not yet normalized).
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSet {
    pub sum_image: Image,
    pub filter_images: Vec<Image>,
    pub filter_ids: Vec<String>,
    /// `m_k = max |d_k|` per filter.
    pub gains: Vec<f64>,
    pub images_captured: usize,
    pub noise: Option<NoiseModel>,
    pub bank_id: String,
    pub encoding: SlmEncoding,
}

impl MeasurementSet {
    pub fn width(&self) -> usize {
        self.sum_image.width()
    }

    pub fn height(&self) -> usize {
        self.sum_image.height()
    }

    pub fn filters(&self) -> usize {
        self.filter_images.len()
    }

    /// Multiply every image by `k`; models a brighter or darker scene.
    pub fn scaled(&self, k: f64) -> Self {
        Self {
            sum_image: self.sum_image.scaled(k),
            filter_images: self.filter_images.iter().map(|i| i.scaled(k)).collect(),
            ..self.clone()
        }
    }

    pub fn to_stack(&self) -> Result<PlaneStack> {
        let mut planes = Vec::with_capacity(self.filters() + 1);
        planes.push(self.sum_image.clone());
        planes.extend(self.filter_images.iter().cloned());
        PlaneStack::from_images(&planes)
    }

    pub fn sidecar(&self) -> KvDoc {
        let mut doc = KvDoc::new();
        doc.set("bank_id", &self.bank_id);
        doc.set("filters", self.filters());
        doc.set("filter_ids", kv::join(&self.filter_ids));
        doc.set("gains", kv::join(&self.gains));
        doc.set("images_captured", self.images_captured);
        doc.set("encoding", self.encoding);
        if let Some(n) = &self.noise {
            doc.set("noise_peak_photons", n.peak_photons);
            doc.set("noise_read_sigma", n.read_sigma);
            doc.set("seed", n.seed);
        }
        doc
    }

    pub fn from_parts(stack: &PlaneStack, sidecar: &KvDoc) -> Result<Self> {
        let q: usize = sidecar.parsed("filters")?;
        if stack.planes() != q.saturating_add(1) {
            return Err(Error::dim(format!("{} planes for {q} filters", stack.planes())));
        }
        let filter_ids: Vec<String> = if q == 0 { Vec::new() } else { sidecar.list("filter_ids")? };
        let gains: Vec<f64> = if q == 0 { Vec::new() } else { sidecar.list("gains")? };
        if filter_ids.len() != q || gains.len() != q {
            return Err(Error::parse("measurement sidecar", "filter_ids/gains length differs from filters"));
        }
        let noise = match sidecar.get("noise_peak_photons") {
            None => None,
            Some(_) => Some(NoiseModel::new(
                sidecar.parsed("noise_peak_photons")?,
                sidecar.parsed("noise_read_sigma")?,
                sidecar.parsed("seed")?,
            )?),
        };
        Ok(Self {
            sum_image: stack.plane(0),
            filter_images: (1..=q).map(|i| stack.plane(i)).collect(),
            filter_ids,
            gains,
            images_captured: sidecar.parsed("images_captured")?,
            noise,
            bank_id: sidecar.require("bank_id")?.to_string(),
            encoding: sidecar.parsed("encoding")?,
        })
    }

    /// Writes `<path>` (HSC1) and `<path>.meta` (key=value).
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        io::save_stack(&self.to_stack()?, path)?;
        std::fs::write(sidecar_path(path), self.sidecar().to_text())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let stack = io::load_stack(path)?;
        let doc = KvDoc::parse(&std::fs::read_to_string(sidecar_path(path))?)?;
        Self::from_parts(&stack, &doc)
    }
}

/// `<path>.meta`
pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta");
    s.into()
}

/// SLM transmittance profiles for one filter and the factor that turns
/// `(I⁺ − I⁻)` or `(I⁺ − I_dc)` back into `d · Ĥ`.
struct FilterProfiles {
    positive: Vec<f64>,
    negative: Vec<f64>,
    factor: f64,
    gain: f64,
}

fn filter_profiles(d: &[f64], encoding: SlmEncoding) -> Result<FilterProfiles> {
    match encoding {
        SlmEncoding::Ideal => {
            let gain = d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let part = |sign: f64| -> Vec<f64> {
                d.iter().map(|&v| if gain == 0.0 { 0.0 } else { (sign * v).max(0.0) / gain }).collect()
            };
            Ok(FilterProfiles { positive: part(1.0), negative: part(-1.0), factor: gain, gain })
        }
        SlmEncoding::ColumnHeight { rows, dc_rows } => {
            let p = encode_filter_to_slm(d, rows, dc_rows)?;
            Ok(FilterProfiles {
                positive: p.transmittance_pos(),
                negative: p.transmittance_neg(),
                factor: p.gain() * rows as f64 / (rows - dc_rows) as f64,
                gain: p.gain(),
            })
        }
    }
}

/// Worst-case per-pixel error of a reconstructed feature from SLM
/// quantization: `m · I_sum / (2 (R − dc_rows))` for a filter of gain `m`.
pub fn quantization_bound(gain: f64, sum_value: f64, encoding: SlmEncoding) -> f64 {
    gain * sum_value * encoding.quantization_step() / 2.0
}

/// Simulate the full plan: blur the cube through the aperture, capture the
/// sum image and every SLM frame, and reconstruct one signed feature image
/// per filter. With noise, the photon budget is shared across all frames
/// and frame `i` draws from stream `i` of the seed.
pub fn acquire_measurements(
    cube: &HsiCube,
    ap: &CodedApertureModel,
    ir: &IlluminantAndResponse,
    bank: &SpectralFilterBank,
    noise: Option<&NoiseModel>,
    encoding: SlmEncoding,
) -> Result<MeasurementSet> {
    if bank.grid() != cube.grid() {
        return Err(Error::GridMismatch);
    }
    encoding.validate()?;
    if let Some(n) = noise {
        n.validate()?;
    }
    let cube_hat = apply_coded_blur(cube, ap)?;
    let plan = AcquisitionPlan::for_bank(bank, encoding);
    let bands = cube.bands();

    let clean_sum = project(&cube_hat, &vec![1.0; bands], ir)?;
    let scale = noise.map(|n| n.photon_scale(clean_sum.max(), plan.images()));
    let mut frame = 0u64;
    let mut capture = |clean: Image| -> Result<Image> {
        let out = match (noise, scale) {
            (Some(n), Some(s)) => add_sensor_noise(&clean, s, n.read_sigma, &mut rng::stream(n.seed, frame))?,
            _ => clean,
        };
        frame += 1;
        Ok(out)
    };

    let sum_image = capture(clean_sum)?;
    let dc_image = match (plan.dc_frame, encoding) {
        (true, SlmEncoding::ColumnHeight { rows, dc_rows }) => {
            let t = dc_rows as f64 / rows as f64;
            Some(capture(project(&cube_hat, &vec![t; bands], ir)?)?)
        }
        _ => None,
    };

    let mut filter_images = Vec::with_capacity(bank.len());
    let mut gains = Vec::with_capacity(bank.len());
    for d in bank.filters() {
        let p = filter_profiles(d, encoding)?;
        let pos = capture(project(&cube_hat, &p.positive, ir)?)?;
        let reference = if plan.signed {
            Some(capture(project(&cube_hat, &p.negative, ir)?)?)
        } else {
            dc_image.clone()
        };
        let data = match reference {
            Some(r) => pos.data().iter().zip(r.data()).map(|(a, b)| p.factor * (a - b)).collect(),
            None => pos.data().iter().map(|a| p.factor * a).collect(),
        };
        filter_images.push(Image::from_vec(cube.width(), cube.height(), data)?);
        gains.push(p.gain);
    }
    debug_assert_eq!(frame as usize, plan.images());

    Ok(MeasurementSet {
        sum_image,
        filter_images,
        filter_ids: bank.filter_ids(),
        gains,
        images_captured: plan.images(),
        noise: noise.copied(),
        bank_id: bank.id().to_string(),
        encoding,
    })
}

/// Transmittance profile that opens a single band.
pub fn single_band_profile(cube: &HsiCube, band: usize) -> Result<Spectrum> {
    let mut v = vec![0.0; cube.bands()];
    *v.get_mut(band).ok_or_else(|| Error::dim(format!("band {band} out of range")))? = 1.0;
    Spectrum::new(*cube.grid(), v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hsi::WavelengthGrid;
    use crate::learn::FilterSource;
    use rand::Rng as _;

    fn bank(grid: WavelengthGrid, q: usize, signed: bool, seed: u64) -> SpectralFilterBank {
        let mut r = rng::seeded(seed);
        let lo = if signed { -1.0 } else { 0.0 };
        let f = (0..q).map(|_| (0..grid.bands()).map(|_| r.random_range(lo..1.0)).collect()).collect();
        SpectralFilterBank::new(grid, f, vec![0.0; q], FilterSource::External).unwrap()
    }

    fn random_cube(w: usize, h: usize, grid: WavelengthGrid, seed: u64) -> HsiCube {
        let mut r = rng::seeded(seed);
        HsiCube::new(w, h, grid, (0..w * h * grid.bands()).map(|_| r.random::<f64>()).collect()).unwrap()
    }

    fn direct(cube: &HsiCube, d: &[f64], ir: &IlluminantAndResponse) -> Vec<f64> {
        let dl = cube.grid().delta();
        (0..cube.pixels())
            .map(|p| {
                let px = cube.pixel_at(p);
                (0..px.len()).map(|b| px[b] * d[b] * ir.response().values()[b] * dl).sum()
            })
            .collect()
    }

    #[test]
    fn plan_counts() {
        let ideal = SlmEncoding::Ideal;
        let binary = SlmEncoding::default_binary();
        for (q, n) in [(0, 1), (3, 7), (5, 11), (10, 21)] {
            assert_eq!(AcquisitionPlan::new(q, true, ideal).images(), n);
            assert_eq!(AcquisitionPlan::new(q, true, binary).images(), n);
        }
        assert_eq!(AcquisitionPlan::new(4, false, ideal).images(), 5);
        assert_eq!(AcquisitionPlan::new(4, false, binary).images(), 6);
        assert_eq!(AcquisitionPlan::new(0, false, binary).images(), 1);
    }

    #[test]
    fn ideal_features_match_direct_projection() {
        let grid = WavelengthGrid::new(600.0, 700.0, 8).unwrap();
        let cube = random_cube(3, 2, grid, 1);
        let ir = IlluminantAndResponse::flat(grid);
        let ap = CodedApertureModel::identity(grid);
        for signed in [true, false] {
            let b = bank(grid, 3, signed, 2);
            let ms = acquire_measurements(&cube, &ap, &ir, &b, None, SlmEncoding::Ideal).unwrap();
            for (k, img) in ms.filter_images.iter().enumerate() {
                for (a, e) in img.data().iter().zip(direct(&cube, b.filter(k), &ir)) {
                    assert!((a - e).abs() <= 1e-12 * e.abs().max(1.0));
                }
            }
        }
    }

    #[test]
    fn binary_features_within_quantization_bound() {
        let grid = WavelengthGrid::new(600.0, 700.0, 16).unwrap();
        let cube = random_cube(4, 4, grid, 3);
        let ir = IlluminantAndResponse::flat(grid);
        let ap = CodedApertureModel::identity(grid);
        let enc = SlmEncoding::ColumnHeight { rows: 64, dc_rows: 4 };
        for signed in [true, false] {
            let b = bank(grid, 4, signed, 5);
            let ms = acquire_measurements(&cube, &ap, &ir, &b, None, enc).unwrap();
            for (k, img) in ms.filter_images.iter().enumerate() {
                for (p, (a, e)) in img.data().iter().zip(direct(&cube, b.filter(k), &ir)).enumerate() {
                    let bound = quantization_bound(ms.gains[k], ms.sum_image.data()[p], enc);
                    assert!((a - e).abs() <= bound + 1e-12, "{a} vs {e} bound {bound}");
                }
            }
        }
    }

    #[test]
    fn noisy_acquisition_is_deterministic() {
        let grid = WavelengthGrid::new(600.0, 700.0, 6).unwrap();
        let cube = random_cube(4, 3, grid, 9);
        let ir = IlluminantAndResponse::flat(grid);
        let ap = CodedApertureModel::identity(grid);
        let b = bank(grid, 2, true, 4);
        let n = NoiseModel::new(500.0, 1.0, 77).unwrap();
        let enc = SlmEncoding::default_binary();
        let a = acquire_measurements(&cube, &ap, &ir, &b, Some(&n), enc).unwrap();
        assert_eq!(a, acquire_measurements(&cube, &ap, &ir, &b, Some(&n), enc).unwrap());
        let other = NoiseModel { seed: 78, ..n };
        assert_ne!(a, acquire_measurements(&cube, &ap, &ir, &b, Some(&other), enc).unwrap());
    }

    #[test]
    fn measurement_set_file_round_trip() {
        let grid = WavelengthGrid::new(600.0, 700.0, 5).unwrap();
        let cube = random_cube(3, 3, grid, 2);
        let ir = IlluminantAndResponse::flat(grid);
        let b = bank(grid, 2, true, 1);
        let n = NoiseModel::new(1e4, 0.5, 3).unwrap();
        let ap = CodedApertureModel::identity(grid);
        let ms = acquire_measurements(&cube, &ap, &ir, &b, Some(&n), SlmEncoding::Ideal).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.hsc");
        ms.save(&path).unwrap();
        let back = MeasurementSet::load(&path).unwrap();
        assert_eq!(back.images_captured, 5);
        assert_eq!(back.filter_ids, ms.filter_ids);
        assert_eq!(back.gains, ms.gains);
        assert_eq!(back.noise, ms.noise);
        assert_eq!(back.encoding, ms.encoding);
        for (x, y) in back.filter_images[1].data().iter().zip(ms.filter_images[1].data()) {
            assert_eq!(*x, *y as f32 as f64);
        }
    }
}
