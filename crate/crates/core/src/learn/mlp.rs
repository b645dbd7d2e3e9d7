//! Fully connected network `B → Q → h₁ → … → K` whose first layer is the
//! spectral filter bank. Rectifier and dropout follow every linear layer
//! except the output; training minimizes softmax cross-entropy.

use rand::seq::SliceRandom;
use rand::Rng as _;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng::{self, Rng};

use super::dataset::{LabeledSpectra, Split};
use super::pca::pca_init;
use super::svm::argmax;

/// Row-major `n_out x n_in` weights and `n_out` biases.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub n_in: usize,
    pub n_out: usize,
    pub w: Vec<f64>,
    pub b: Vec<f64>,
}

impl Dense {
    pub fn zeros(n_in: usize, n_out: usize) -> Self {
        Self { n_in, n_out, w: vec![0.0; n_in * n_out], b: vec![0.0; n_out] }
    }

    pub fn row(&self, o: usize) -> &[f64] {
        &self.w[o * self.n_in..(o + 1) * self.n_in]
    }

    fn forward(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend((0..self.n_out).map(|o| self.row(o).iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + self.b[o]));
    }

    fn add_scaled(&mut self, other: &Dense, k: f64) {
        self.w.iter_mut().zip(&other.w).for_each(|(a, b)| *a += k * b);
        self.b.iter_mut().zip(&other.b).for_each(|(a, b)| *a += k * b);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    /// Inputs are multiplied by this before the first layer; the effective
    /// filter bank is `input_gain · W₁`.
    pub input_gain: f64,
    pub layers: Vec<Dense>,
    /// Training-time dropout rate after each hidden layer.
    pub dropout: f64,
}

fn relu(v: f64) -> f64 {
    v.max(0.0)
}

/// Mean softmax cross-entropy contribution of one sample and `p − onehot`.
fn softmax_xent(logits: &[f64], label: usize) -> (f64, Vec<f64>) {
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|z| (z - m).exp()).collect();
    let s: f64 = exps.iter().sum();
    let loss = s.ln() + m - logits[label];
    let mut d: Vec<f64> = exps.iter().map(|e| e / s).collect();
    d[label] -= 1.0;
    (loss, d)
}

impl MlpModel {
    /// Layer widths `[B, Q, h₁, …, K]`.
    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![self.layers[0].n_in];
        s.extend(self.layers.iter().map(|l| l.n_out));
        s
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers.len() < 2 {
            return Err(Error::validation("network needs a filter layer and an output layer"));
        }
        for (i, l) in self.layers.iter().enumerate() {
            if l.w.len() != l.n_in * l.n_out || l.b.len() != l.n_out {
                return Err(Error::dim(format!("layer {i} storage does not match {}x{}", l.n_out, l.n_in)));
            }
            if i > 0 && self.layers[i - 1].n_out != l.n_in {
                return Err(Error::dim(format!("layer {i} input {} != previous output", l.n_in)));
            }
            if l.w.iter().chain(&l.b).any(|v| !v.is_finite()) {
                return Err(Error::validation(format!("layer {i} has non-finite parameters")));
            }
        }
        if !(0.0..1.0).contains(&self.dropout) || !self.input_gain.is_finite() {
            return Err(Error::validation("dropout must be in [0, 1) and input gain finite"));
        }
        Ok(())
    }

    pub fn bands(&self) -> usize {
        self.layers[0].n_in
    }

    pub fn filters(&self) -> usize {
        self.layers[0].n_out
    }

    pub fn classes(&self) -> usize {
        self.layers.last().expect("validated").n_out
    }

    /// Effective first-layer filters `input_gain · W₁` (rows).
    pub fn filter_rows(&self) -> Vec<Vec<f64>> {
        (0..self.filters()).map(|k| self.layers[0].row(k).iter().map(|w| w * self.input_gain).collect()).collect()
    }

    /// `input_gain · W₁ x`, i.e. what the optics computes (no bias).
    pub fn features(&self, x: &[f64]) -> Vec<f64> {
        let first = &self.layers[0];
        (0..first.n_out)
            .map(|k| self.input_gain * first.row(k).iter().zip(x).map(|(a, b)| a * b).sum::<f64>())
            .collect()
    }

    /// Logits from first-layer features: `relu(f + b₁)` then the remaining
    /// layers.
    pub fn tail_logits(&self, features: &[f64]) -> Vec<f64> {
        let mut a: Vec<f64> = features.iter().zip(&self.layers[0].b).map(|(f, b)| relu(f + b)).collect();
        let mut z = Vec::new();
        let last = self.layers.len() - 1;
        for (i, l) in self.layers.iter().enumerate().skip(1) {
            l.forward(&a, &mut z);
            if i < last {
                z.iter_mut().for_each(|v| *v = relu(*v));
            }
            std::mem::swap(&mut a, &mut z);
        }
        a
    }

    pub fn logits(&self, x: &[f64]) -> Vec<f64> {
        self.tail_logits(&self.features(x))
    }

    pub fn predict(&self, x: &[f64]) -> usize {
        argmax(&self.logits(x))
    }

    pub fn accuracy(&self, data: &LabeledSpectra) -> f64 {
        if data.is_empty() {
            return 0.0;
        }
        let hits: usize = (0..data.len()).into_par_iter().filter(|&i| self.predict(data.row(i)) == data.label(i)).count();
        hits as f64 / data.len() as f64
    }

    /// Mean cross-entropy without dropout.
    pub fn loss(&self, rows: &[&[f64]], labels: &[usize]) -> f64 {
        rows.iter().zip(labels).map(|(x, &l)| softmax_xent(&self.logits(x), l).0).sum::<f64>() / rows.len() as f64
    }

    /// Mean cross-entropy and its gradient with respect to every layer,
    /// without dropout.
    pub fn loss_and_gradient(&self, rows: &[&[f64]], labels: &[usize]) -> (f64, Vec<Dense>) {
        self.batch_gradient(rows, labels, None)
    }

    /// `masks[i]` holds the dropout multipliers of sample `i`, hidden
    /// layers concatenated.
    fn sample_gradient(&self, x: &[f64], label: usize, mask: Option<&[f64]>, grads: &mut [Dense]) -> f64 {
        let last = self.layers.len() - 1;
        let mut acts: Vec<Vec<f64>> = Vec::with_capacity(self.layers.len() + 1);
        let mut pre: Vec<Vec<f64>> = Vec::with_capacity(self.layers.len());
        acts.push(x.to_vec());
        let mut offset = 0;
        for (i, l) in self.layers.iter().enumerate() {
            let z = if i == 0 {
                let f = self.features(x);
                f.iter().zip(&l.b).map(|(f, b)| f + b).collect()
            } else {
                let mut z = Vec::new();
                l.forward(&acts[i], &mut z);
                z
            };
            if i < last {
                let a: Vec<f64> = z
                    .iter()
                    .enumerate()
                    .map(|(j, &v)| relu(v) * mask.map_or(1.0, |m| m[offset + j]))
                    .collect();
                offset += l.n_out;
                acts.push(a);
            } else {
                acts.push(z.clone());
            }
            pre.push(z);
        }
        let (loss, mut dz) = softmax_xent(&acts[last + 1], label);
        offset = mask.map_or(0, <[f64]>::len);
        for i in (0..=last).rev() {
            let l = &self.layers[i];
            let g = &mut grads[i];
            let a = &acts[i];
            // The first layer sees `g · x`.
            let scale = if i == 0 { self.input_gain } else { 1.0 };
            for o in 0..l.n_out {
                let d = dz[o];
                if d == 0.0 {
                    continue;
                }
                g.b[o] += d;
                let ds = d * scale;
                g.w[o * l.n_in..(o + 1) * l.n_in].iter_mut().zip(a).for_each(|(gw, av)| *gw += ds * av);
            }
            if i == 0 {
                break;
            }
            offset = offset.saturating_sub(l.n_in);
            let prev = &pre[i - 1];
            dz = (0..l.n_in)
                .map(|j| {
                    if prev[j] <= 0.0 {
                        return 0.0;
                    }
                    let back: f64 = (0..l.n_out).map(|o| l.w[o * l.n_in + j] * dz[o]).sum();
                    back * mask.map_or(1.0, |m| m[offset + j])
                })
                .collect();
        }
        loss
    }

    fn zero_grads(&self) -> Vec<Dense> {
        self.layers.iter().map(|l| Dense::zeros(l.n_in, l.n_out)).collect()
    }

    fn batch_gradient(&self, rows: &[&[f64]], labels: &[usize], masks: Option<&[Vec<f64>]>) -> (f64, Vec<Dense>) {
        // Fixed chunking and in-order reduction keep results independent
        // of the thread count.
        const CHUNK: usize = 32;
        let parts: Vec<(f64, Vec<Dense>)> = (0..rows.len().div_ceil(CHUNK))
            .into_par_iter()
            .map(|c| {
                let mut g = self.zero_grads();
                let mut loss = 0.0;
                for i in c * CHUNK..((c + 1) * CHUNK).min(rows.len()) {
                    loss += self.sample_gradient(rows[i], labels[i], masks.map(|m| m[i].as_slice()), &mut g);
                }
                (loss, g)
            })
            .collect();
        let mut total = self.zero_grads();
        let mut loss = 0.0;
        let inv = 1.0 / rows.len() as f64;
        for (l, g) in parts {
            loss += l;
            for (t, gi) in total.iter_mut().zip(&g) {
                t.add_scaled(gi, inv);
            }
        }
        (loss * inv, total)
    }

    /// All weights then biases, layer by layer.
    pub fn parameters(&self) -> Vec<f64> {
        self.layers.iter().flat_map(|l| l.w.iter().chain(&l.b).copied()).collect()
    }

    pub fn set_parameters(&mut self, p: &[f64]) {
        let mut at = 0;
        for l in &mut self.layers {
            let nw = l.w.len();
            l.w.copy_from_slice(&p[at..at + nw]);
            at += nw;
            let nb = l.b.len();
            l.b.copy_from_slice(&p[at..at + nb]);
            at += nb;
        }
    }

    /// He-uniform weights and zero biases for the given widths.
    pub fn random(sizes: &[usize], dropout: f64, rng: &mut Rng) -> Result<Self> {
        if sizes.len() < 3 || sizes.contains(&0) {
            return Err(Error::validation(format!("bad layer sizes {sizes:?}")));
        }
        let layers = sizes
            .windows(2)
            .map(|w| {
                let mut l = Dense::zeros(w[0], w[1]);
                let a = (6.0 / w[0] as f64).sqrt();
                l.w.iter_mut().for_each(|v| *v = rng.random_range(-a..a));
                l
            })
            .collect();
        let m = Self { input_gain: 1.0, layers, dropout };
        m.validate()?;
        Ok(m)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Optimizer {
    Sgd,
    Adam,
}

impl std::str::FromStr for Optimizer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sgd" => Ok(Optimizer::Sgd),
            "adam" => Ok(Optimizer::Adam),
            _ => Err(Error::parse("optimizer", s.to_string())),
        }
    }
}

impl std::fmt::Display for Optimizer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Optimizer::Sgd => "sgd",
            Optimizer::Adam => "adam",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpConfig {
    pub q: usize,
    pub hidden: Vec<usize>,
    pub dropout: f64,
    pub lr: f64,
    pub epochs: usize,
    pub batch: usize,
    pub optimizer: Optimizer,
    pub seed: u64,
}

impl Default for MlpConfig {
    fn default() -> Self {
        Self {
            q: 5,
            hidden: vec![64, 32, 16],
            dropout: 0.1,
            lr: 1e-3,
            epochs: 60,
            batch: 256,
            optimizer: Optimizer::Adam,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpTraining {
    /// Checkpoint with the best validation accuracy (earliest on ties).
    pub model: MlpModel,
    pub best_epoch: usize,
    pub val_accuracy: Vec<f64>,
    pub train_loss: Vec<f64>,
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    const B1: f64 = 0.9;
    const B2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn step(&mut self, p: &mut [f64], g: &[f64], lr: f64) {
        self.t += 1;
        let c1 = 1.0 - Self::B1.powi(self.t);
        let c2 = 1.0 - Self::B2.powi(self.t);
        for i in 0..p.len() {
            self.m[i] = Self::B1 * self.m[i] + (1.0 - Self::B1) * g[i];
            self.v[i] = Self::B2 * self.v[i] + (1.0 - Self::B2) * g[i] * g[i];
            p[i] -= lr * (self.m[i] / c1) / ((self.v[i] / c2).sqrt() + Self::EPS);
        }
    }
}

/// PCA-initialized network: `W₁` rows are the top-`Q` principal
/// directions, each scaled so that with the input gain `g = 1/√λ₁` its
/// feature has unit variance on the training split. `b₁` lifts every
/// training feature to `>= 0`, so the first rectifier starts out as the
/// identity and discards nothing. Later layers are He-uniform.
pub fn init_mlp(train: &LabeledSpectra, cfg: &MlpConfig, rng: &mut Rng) -> Result<MlpModel> {
    let pca = pca_init(train, cfg.q)?;
    let mut sizes = vec![train.bands(), cfg.q];
    sizes.extend(&cfg.hidden);
    sizes.push(train.classes());
    let mut model = MlpModel::random(&sizes, cfg.dropout, rng)?;
    model.input_gain = 1.0 / pca.eigenvalues[0].sqrt();
    let first = &mut model.layers[0];
    for (k, row) in pca.components.iter().enumerate() {
        let whiten = (pca.eigenvalues[0] / pca.eigenvalues[k]).sqrt();
        for (w, u) in first.w[k * first.n_in..(k + 1) * first.n_in].iter_mut().zip(row) {
            *w = u * whiten;
        }
    }
    let mut lowest = vec![f64::INFINITY; cfg.q];
    for i in 0..train.len() {
        for (l, f) in lowest.iter_mut().zip(model.features(train.row(i))) {
            *l = l.min(f);
        }
    }
    for (b, l) in model.layers[0].b.iter_mut().zip(lowest) {
        *b = -l;
    }
    Ok(model)
}

/// Mini-batch training on the train split with checkpoint selection on
/// the validation split (the train split when validation is empty).
pub fn train_mlp(data: &LabeledSpectra, cfg: &MlpConfig) -> Result<MlpTraining> {
    if cfg.epochs == 0 || cfg.batch == 0 || !(cfg.lr > 0.0) {
        return Err(Error::validation("epochs, batch and learning rate must be positive"));
    }
    if !(0.0..1.0).contains(&cfg.dropout) {
        return Err(Error::validation("dropout must be in [0, 1)"));
    }
    let train = data.subset(Split::Train);
    if train.present_classes() < 2 {
        return Err(Error::validation("network training split needs at least two classes"));
    }
    let val = {
        let v = data.subset(Split::Val);
        if v.is_empty() {
            train.clone()
        } else {
            v
        }
    };
    let mut r = rng::seeded(cfg.seed);
    let mut model = init_mlp(&train, cfg, &mut r)?;
    let hidden_units: usize = model.layers[..model.layers.len() - 1].iter().map(|l| l.n_out).sum();
    let keep = 1.0 - cfg.dropout;
    let n_params = model.parameters().len();
    let mut adam = Adam { m: vec![0.0; n_params], v: vec![0.0; n_params], t: 0 };

    let mut best = (model.clone(), 0usize, f64::NEG_INFINITY);
    let mut val_accuracy = Vec::with_capacity(cfg.epochs);
    let mut train_loss = Vec::with_capacity(cfg.epochs);
    let mut order: Vec<usize> = (0..train.len()).collect();
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut r);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(cfg.batch) {
            let rows: Vec<&[f64]> = batch.iter().map(|&i| train.row(i)).collect();
            let labels: Vec<usize> = batch.iter().map(|&i| train.label(i)).collect();
            let masks: Option<Vec<Vec<f64>>> = (cfg.dropout > 0.0).then(|| {
                batch
                    .iter()
                    .map(|_| (0..hidden_units).map(|_| if r.random::<f64>() < keep { 1.0 / keep } else { 0.0 }).collect())
                    .collect()
            });
            let (loss, grads) = model.batch_gradient(&rows, &labels, masks.as_deref());
            if !loss.is_finite() {
                return Err(Error::Diverged { epoch });
            }
            epoch_loss += loss * batch.len() as f64;
            let g: Vec<f64> = grads.iter().flat_map(|l| l.w.iter().chain(&l.b).copied()).collect();
            let mut p = model.parameters();
            match cfg.optimizer {
                Optimizer::Sgd => p.iter_mut().zip(&g).for_each(|(a, b)| *a -= cfg.lr * b),
                Optimizer::Adam => adam.step(&mut p, &g, cfg.lr),
            }
            if p.iter().any(|v| !v.is_finite()) {
                return Err(Error::Diverged { epoch });
            }
            model.set_parameters(&p);
        }
        train_loss.push(epoch_loss / train.len() as f64);
        let acc = model.accuracy(&val);
        val_accuracy.push(acc);
        if acc > best.2 {
            best = (model.clone(), epoch, acc);
        }
    }
    Ok(MlpTraining { model: best.0, best_epoch: best.1, val_accuracy, train_loss })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(seed: u64) -> MlpModel {
        let mut r = rng::seeded(seed);
        let mut m = MlpModel::random(&[6, 3, 4, 2], 0.0, &mut r).unwrap();
        m.layers.iter_mut().for_each(|l| l.b.iter_mut().for_each(|b| *b = r.random_range(-0.5..0.5)));
        m.input_gain = 1.7;
        m
    }

    #[test]
    fn zero_output_layer_gives_log_k() {
        let mut m = tiny(1);
        let last = m.layers.last_mut().unwrap();
        last.w.iter_mut().for_each(|v| *v = 0.0);
        last.b.iter_mut().for_each(|v| *v = 0.0);
        let x = [0.1, 0.5, 0.2, 0.9, 0.3, 0.0];
        assert_eq!(m.loss(&[&x], &[1]), (2.0f64).ln());
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let m = tiny(3);
        let mut r = rng::seeded(9);
        let xs: Vec<Vec<f64>> = (0..5).map(|_| (0..6).map(|_| r.random::<f64>()).collect()).collect();
        let rows: Vec<&[f64]> = xs.iter().map(Vec::as_slice).collect();
        let labels = [0, 1, 1, 0, 1];
        let (_, grads) = m.loss_and_gradient(&rows, &labels);
        let analytic: Vec<f64> = grads.iter().flat_map(|l| l.w.iter().chain(&l.b).copied()).collect();
        let p0 = m.parameters();
        let h = 1e-5;
        for i in 0..p0.len() {
            let mut mp = m.clone();
            let mut p = p0.clone();
            p[i] += h;
            mp.set_parameters(&p);
            let up = mp.loss(&rows, &labels);
            p[i] -= 2.0 * h;
            mp.set_parameters(&p);
            let down = mp.loss(&rows, &labels);
            let numeric = (up - down) / (2.0 * h);
            let rel = (analytic[i] - numeric).abs() / (analytic[i].abs() + numeric.abs()).max(1e-6);
            assert!(rel < 1e-4, "param {i}: {} vs {numeric}", analytic[i]);
        }
    }

    #[test]
    fn tail_composition_matches_full_logits() {
        let m = tiny(4);
        let x = [0.3, 0.1, 0.7, 0.2, 0.4, 0.9];
        let full = m.logits(&x);
        let split = m.tail_logits(&m.features(&x));
        for (a, b) in full.iter().zip(&split) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn separable_two_class_reaches_full_validation_accuracy() {
        let mut r = rng::seeded(2);
        let b = 12;
        let mut rows = Vec::new();
        let mut y = Vec::new();
        for i in 0..1200 {
            let c = i % 2;
            let row: Vec<f64> = (0..b)
                .map(|j| {
                    let base = if (j < b / 2) == (c == 0) { 2.0 } else { 1.0 };
                    base + 0.1 * r.random::<f64>()
                })
                .collect();
            let s: f64 = row.iter().sum();
            rows.push(row.into_iter().map(|v| v / s).collect::<Vec<_>>());
            y.push(c);
        }
        let data = LabeledSpectra::from_rows(&rows, y, 2).unwrap();
        let data = super::super::dataset::split_dataset(&data, [0.5, 0.25, 0.25], 1).unwrap();
        let cfg = MlpConfig { q: 2, seed: 3, ..MlpConfig::default() };
        let t = train_mlp(&data, &cfg).unwrap();
        assert_eq!(t.val_accuracy[t.best_epoch], 1.0, "{:?}", t.val_accuracy);
    }

    #[test]
    fn training_is_deterministic() {
        let rows: Vec<Vec<f64>> = (0..60).map(|i| (0..5).map(|j| ((i * 5 + j) as f64 * 0.77).sin().abs() + 0.1).collect()).collect();
        let y: Vec<usize> = (0..60).map(|i| i % 3).collect();
        let data = LabeledSpectra::from_rows(&rows, y, 3).unwrap();
        let cfg = MlpConfig { q: 3, epochs: 5, batch: 16, hidden: vec![8, 4], ..MlpConfig::default() };
        assert_eq!(train_mlp(&data, &cfg).unwrap(), train_mlp(&data, &cfg).unwrap());
    }
}
