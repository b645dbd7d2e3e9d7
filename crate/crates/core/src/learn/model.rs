//! Trained classifiers, filter extraction, and the model file format.
//!
//! A model file is a key=value text header, one blank line, then
//! little-endian `f32` blobs in the order the `blobs` key declares
//! (`name:d1xd2,...`).

use std::path::Path;

use crate::error::{Error, Result};
use crate::hsi::WavelengthGrid;
use crate::kv::{self, KvDoc};

use super::filters::{FilterSource, SpectralFilterBank};
use super::mlp::{Dense, MlpModel};
use super::svm::SvmModel;

const MAGIC: &str = "specbench-model=1";
/// Upper bound on declared blob elements; keeps hostile headers from
/// requesting huge allocations.
const MAX_ELEMENTS: usize = 1 << 28;

#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Svm(SvmModel),
    Mlp(MlpModel),
}

impl Model {
    pub fn kind(&self) -> &'static str {
        match self {
            Model::Svm(_) => "svm",
            Model::Mlp(_) => "mlp",
        }
    }

    pub fn bands(&self) -> usize {
        match self {
            Model::Svm(m) => m.bands(),
            Model::Mlp(m) => m.bands(),
        }
    }

    pub fn classes(&self) -> usize {
        match self {
            Model::Svm(m) => m.classes(),
            Model::Mlp(m) => m.classes(),
        }
    }

    /// Class scores of a (sum-normalized) spectrum.
    pub fn scores(&self, x: &[f64]) -> Vec<f64> {
        match self {
            Model::Svm(m) => m.scores(x),
            Model::Mlp(m) => m.logits(x),
        }
    }
}

/// SVM: one filter per class (rows of `W`, offsets `c`). Network: the
/// first-layer rows (with the input gain folded in), offsets `b₁`.
pub fn extract_filters(model: &Model, grid: WavelengthGrid) -> Result<SpectralFilterBank> {
    if model.bands() != grid.bands() {
        return Err(Error::dim(format!("model has {} bands, grid {}", model.bands(), grid.bands())));
    }
    match model {
        Model::Svm(m) => SpectralFilterBank::new(grid, m.w.clone(), m.c.clone(), FilterSource::Svm),
        Model::Mlp(m) => {
            SpectralFilterBank::new(grid, m.filter_rows(), m.layers[0].b.clone(), FilterSource::Mlp)
        }
    }
}

fn push_blob(header: &mut Vec<String>, bytes: &mut Vec<u8>, name: &str, dims: &[usize], values: impl Iterator<Item = f64>) {
    header.push(format!("{name}:{}", dims.iter().map(usize::to_string).collect::<Vec<_>>().join("x")));
    for v in values {
        bytes.extend_from_slice(&(v as f32).to_le_bytes());
    }
}

/// Serialize with `extra` keys (hyperparameters, seed, grid) merged into
/// the header. Weights are stored as `f32`.
pub fn encode_model(model: &Model, extra: &KvDoc) -> Vec<u8> {
    let mut doc = KvDoc::new();
    doc.merge(extra);
    doc.set("type", model.kind());
    let mut blobs = Vec::new();
    let mut body = Vec::new();
    match model {
        Model::Svm(m) => {
            doc.set("classes", m.classes());
            doc.set("bands", m.bands());
            doc.set("reg", m.reg);
            push_blob(&mut blobs, &mut body, "w", &[m.classes(), m.bands()], m.w.iter().flatten().copied());
            push_blob(&mut blobs, &mut body, "c", &[m.classes()], m.c.iter().copied());
        }
        Model::Mlp(m) => {
            doc.set("sizes", kv::join(&m.sizes()));
            doc.set("input_gain", m.input_gain);
            doc.set("dropout", m.dropout);
            for (i, l) in m.layers.iter().enumerate() {
                push_blob(&mut blobs, &mut body, &format!("w{i}"), &[l.n_out, l.n_in], l.w.iter().copied());
                push_blob(&mut blobs, &mut body, &format!("b{i}"), &[l.n_out], l.b.iter().copied());
            }
        }
    }
    doc.set("blobs", blobs.join(","));
    let mut out = format!("{MAGIC}\n{}\n", doc.to_text()).into_bytes();
    out.extend(body);
    out
}

struct Blob {
    name: String,
    dims: Vec<usize>,
    values: Vec<f64>,
}

fn parse_blobs(spec: &str, body: &[u8]) -> Result<Vec<Blob>> {
    let bad = |d: &str| Error::parse("model blobs", d.to_string());
    let mut blobs = Vec::new();
    let mut at = 0usize;
    for item in spec.split(',').filter(|s| !s.is_empty()) {
        let (name, dims) = item.split_once(':').ok_or_else(|| bad(item))?;
        let dims: Vec<usize> = dims.split('x').map(|d| d.parse().map_err(|_| bad(item))).collect::<Result<_>>()?;
        let n = dims
            .iter()
            .try_fold(1usize, |a, &d| a.checked_mul(d))
            .filter(|&n| n <= MAX_ELEMENTS)
            .ok_or_else(|| bad("blob too large"))?;
        let end = n.checked_mul(4).and_then(|b| b.checked_add(at)).ok_or_else(|| bad("blob too large"))?;
        if end > body.len() {
            return Err(Error::Truncated { expected: end, found: body.len() });
        }
        let values: Vec<f64> =
            body[at..end].chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")) as f64).collect();
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index: i });
        }
        blobs.push(Blob { name: name.to_string(), dims, values });
        at = end;
    }
    if at != body.len() {
        return Err(bad(&format!("{} trailing bytes", body.len() - at)));
    }
    Ok(blobs)
}

fn take(blobs: &mut Vec<Blob>, name: &str, dims: &[usize]) -> Result<Vec<f64>> {
    let i = blobs
        .iter()
        .position(|b| b.name == name)
        .ok_or_else(|| Error::parse("model blobs", format!("missing blob {name}")))?;
    let b = blobs.remove(i);
    if b.dims != dims {
        return Err(Error::dim(format!("blob {name} has shape {:?}, expected {dims:?}", b.dims)));
    }
    Ok(b.values)
}

/// Inverse of [`encode_model`]; returns the model and the full header.
pub fn decode_model(bytes: &[u8]) -> Result<(Model, KvDoc)> {
    let split = bytes
        .windows(2)
        .position(|w| w == b"\n\n")
        .ok_or_else(|| Error::parse("model header", "missing blank line after header"))?;
    let header = std::str::from_utf8(&bytes[..split]).map_err(|_| Error::parse("model header", "not UTF-8"))?;
    let header = header.strip_prefix(MAGIC).ok_or(Error::BadMagic {
        expected: MAGIC,
        found: bytes[..bytes.len().min(MAGIC.len())].to_vec(),
    })?;
    let doc = KvDoc::parse(header)?;
    let mut blobs = parse_blobs(doc.require("blobs")?, &bytes[split + 2..])?;
    let model = match doc.require("type")? {
        "svm" => {
            let (k, b): (usize, usize) = (doc.parsed("classes")?, doc.parsed("bands")?);
            let w = take(&mut blobs, "w", &[k, b])?;
            let c = take(&mut blobs, "c", &[k])?;
            Model::Svm(SvmModel {
                w: if b == 0 { vec![Vec::new(); k] } else { w.chunks(b).map(<[f64]>::to_vec).collect() },
                c,
                reg: doc.parsed("reg")?,
                history: Vec::new(),
            })
        }
        "mlp" => {
            let sizes: Vec<usize> = doc.list("sizes")?;
            if sizes.len() < 3 {
                return Err(Error::parse("model header", "network needs at least three layer sizes"));
            }
            let mut layers = Vec::with_capacity(sizes.len() - 1);
            for (i, w) in sizes.windows(2).enumerate() {
                layers.push(Dense {
                    n_in: w[0],
                    n_out: w[1],
                    w: take(&mut blobs, &format!("w{i}"), &[w[1], w[0]])?,
                    b: take(&mut blobs, &format!("b{i}"), &[w[1]])?,
                });
            }
            let m = MlpModel { input_gain: doc.parsed("input_gain")?, layers, dropout: doc.parsed("dropout")? };
            m.validate()?;
            Model::Mlp(m)
        }
        other => return Err(Error::parse("model type", other.to_string())),
    };
    if let Some(b) = blobs.first() {
        return Err(Error::parse("model blobs", format!("unexpected blob {}", b.name)));
    }
    Ok((model, doc))
}

pub fn save_model(model: &Model, extra: &KvDoc, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, encode_model(model, extra))?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<(Model, KvDoc)> {
    decode_model(&std::fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    fn f32ish(v: f64) -> f64 {
        v as f32 as f64
    }

    #[test]
    fn svm_round_trip() {
        let m = SvmModel { w: vec![vec![0.5, -1.25], vec![3.0, 0.0]], c: vec![0.25, -0.5], reg: 1e-3, history: vec![] };
        let mut extra = KvDoc::new();
        extra.set("seed", 7);
        let (back, doc) = decode_model(&encode_model(&Model::Svm(m.clone()), &extra)).unwrap();
        assert_eq!(back, Model::Svm(m));
        assert_eq!(doc.get("seed"), Some("7"));
    }

    #[test]
    fn mlp_round_trip_is_f32_exact() {
        let mut m = MlpModel::random(&[4, 2, 3, 2], 0.1, &mut rng::seeded(1)).unwrap();
        m.input_gain = 12.5;
        let (back, _) = decode_model(&encode_model(&Model::Mlp(m.clone()), &KvDoc::new())).unwrap();
        let Model::Mlp(back) = back else { panic!("wrong kind") };
        assert_eq!(back.input_gain, 12.5);
        for (a, b) in back.parameters().iter().zip(m.parameters()) {
            assert_eq!(*a, f32ish(b));
        }
    }

    #[test]
    fn extract_shapes() {
        let grid = WavelengthGrid::new(600.0, 900.0, 2).unwrap();
        let svm = SvmModel { w: vec![vec![1.0, 2.0]; 5], c: vec![0.5; 5], reg: 0.0, history: vec![] };
        let bank = extract_filters(&Model::Svm(svm), grid).unwrap();
        assert_eq!(bank.len(), 5);
        assert_eq!(bank.offsets(), &[0.5; 5]);
        let mut mlp = MlpModel::random(&[2, 3, 4, 2], 0.0, &mut rng::seeded(2)).unwrap();
        mlp.input_gain = 2.0;
        let bank = extract_filters(&Model::Mlp(mlp.clone()), grid).unwrap();
        assert_eq!(bank.len(), 3);
        assert_eq!(bank.filter(1)[0], 2.0 * mlp.layers[0].w[2]);
    }

    #[test]
    fn decode_rejects_garbage() {
        assert!(decode_model(b"").is_err());
        assert!(decode_model(b"nope\n\n").is_err());
        let m = SvmModel { w: vec![vec![1.0]; 2], c: vec![0.0; 2], reg: 0.0, history: vec![] };
        let bytes = encode_model(&Model::Svm(m), &KvDoc::new());
        assert!(decode_model(&bytes[..bytes.len() - 1]).is_err());
        let mut longer = bytes.clone();
        longer.push(0);
        assert!(decode_model(&longer).is_err());
        let huge = format!("{MAGIC}\ntype=svm\nclasses=1\nbands=1\nreg=0\nblobs=w:99999999x99999999\n\n");
        assert!(decode_model(huge.as_bytes()).is_err());
    }
}
