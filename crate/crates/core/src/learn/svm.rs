//! One-vs-all linear SVM trained by averaged stochastic sub-gradient
//! descent on `(1/N) Σ max(0, 1 − ỹ (w·x + c)) + λ ‖w‖²`.

use rand::seq::SliceRandom;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng;

use super::dataset::{LabeledSpectra, Split};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvmConfig {
    /// `λ` of the objective.
    pub reg: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for SvmConfig {
    fn default() -> Self {
        Self { reg: 1e-3, epochs: 40, seed: 0 }
    }
}

/// `K` hyperplanes; class scores are `W x + c`.
#[derive(Debug, Clone, PartialEq)]
pub struct SvmModel {
    pub w: Vec<Vec<f64>>,
    pub c: Vec<f64>,
    pub reg: f64,
    /// Best objective seen after each epoch, per class (non-increasing).
    pub history: Vec<Vec<f64>>,
}

impl SvmModel {
    pub fn classes(&self) -> usize {
        self.w.len()
    }

    pub fn bands(&self) -> usize {
        self.w.first().map_or(0, Vec::len)
    }

    pub fn scores(&self, x: &[f64]) -> Vec<f64> {
        self.w.iter().zip(&self.c).map(|(w, c)| dot(w, x) + c).collect()
    }

    pub fn predict(&self, x: &[f64]) -> usize {
        argmax(&self.scores(x))
    }

    pub fn accuracy(&self, data: &LabeledSpectra) -> f64 {
        if data.is_empty() {
            return 0.0;
        }
        let hits = (0..data.len()).filter(|&i| self.predict(data.row(i)) == data.label(i)).count();
        hits as f64 / data.len() as f64
    }

    /// Multiply every hyperplane and intercept by `k`.
    pub fn scaled(&self, k: f64) -> Self {
        Self {
            w: self.w.iter().map(|r| r.iter().map(|v| v * k).collect()).collect(),
            c: self.c.iter().map(|v| v * k).collect(),
            ..self.clone()
        }
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Binary objective `(1/N) Σ hinge + λ ‖w‖²` for targets `±1`.
pub fn svm_objective(rows: &[&[f64]], targets: &[f64], w: &[f64], c: f64, reg: f64) -> f64 {
    let hinge: f64 = rows.iter().zip(targets).map(|(x, t)| (1.0 - t * (dot(w, x) + c)).max(0.0)).sum();
    hinge / rows.len() as f64 + reg * dot(w, w)
}

fn train_binary(rows: &[&[f64]], targets: &[f64], orders: &[Vec<usize>], reg: f64) -> (Vec<f64>, f64, Vec<f64>) {
    let b = rows[0].len();
    let mean_sq = rows.iter().map(|x| dot(x, x)).sum::<f64>() / rows.len() as f64;
    // Unit intercept feature included so `c` moves on the same scale as `w`.
    let eta0 = 1.0 / (mean_sq + 1.0);
    let (mut w, mut c) = (vec![0.0; b], 0.0);
    let (mut best_w, mut best_c) = (w.clone(), c);
    let mut best = svm_objective(rows, targets, &w, c, reg);
    let mut history = Vec::with_capacity(orders.len());
    let mut t = 0.0;
    for order in orders {
        let (mut avg_w, mut avg_c) = (vec![0.0; b], 0.0);
        for (n, &i) in order.iter().enumerate() {
            t += 1.0;
            let eta = eta0 / (1.0 + reg * eta0 * t);
            let (x, y) = (rows[i], targets[i]);
            let margin = y * (dot(&w, x) + c);
            let shrink = 1.0 - 2.0 * reg * eta;
            w.iter_mut().for_each(|v| *v *= shrink);
            if margin < 1.0 {
                w.iter_mut().zip(x).for_each(|(v, xi)| *v += eta * y * xi);
                c += eta * y;
            }
            let k = 1.0 / (n + 1) as f64;
            avg_w.iter_mut().zip(&w).for_each(|(a, v)| *a += (v - *a) * k);
            avg_c += (c - avg_c) * k;
        }
        for (cw, cc) in [(&avg_w, avg_c), (&w, c)] {
            let obj = svm_objective(rows, targets, cw, cc, reg);
            if obj < best {
                best = obj;
                best_w.clone_from(cw);
                best_c = cc;
            }
        }
        history.push(best);
    }
    (best_w, best_c, history)
}

/// One-vs-all training on the train split. Every class problem sees the
/// same seeded visiting order, so relabeling classes permutes the rows of
/// `W` exactly.
pub fn train_svm(data: &LabeledSpectra, cfg: &SvmConfig) -> Result<SvmModel> {
    if !(cfg.reg >= 0.0) || !cfg.reg.is_finite() {
        return Err(Error::validation("SVM regularization must be non-negative"));
    }
    if cfg.epochs == 0 {
        return Err(Error::validation("SVM needs at least one epoch"));
    }
    let idx = data.indices(Split::Train);
    let train = data.select(&idx);
    if train.present_classes() < 2 {
        return Err(Error::validation("SVM training split needs at least two classes"));
    }
    let rows: Vec<&[f64]> = (0..train.len()).map(|i| train.row(i)).collect();
    let mut r = rng::seeded(cfg.seed);
    let orders: Vec<Vec<usize>> = (0..cfg.epochs)
        .map(|_| {
            let mut o: Vec<usize> = (0..rows.len()).collect();
            o.shuffle(&mut r);
            o
        })
        .collect();
    let per_class: Vec<_> = (0..data.classes())
        .into_par_iter()
        .map(|k| {
            let targets: Vec<f64> = train.labels().iter().map(|&l| if l == k { 1.0 } else { -1.0 }).collect();
            train_binary(&rows, &targets, &orders, cfg.reg)
        })
        .collect();
    let mut model = SvmModel { w: Vec::new(), c: Vec::new(), reg: cfg.reg, history: Vec::new() };
    for (w, c, h) in per_class {
        model.w.push(w);
        model.c.push(c);
        model.history.push(h);
    }
    Ok(model)
}

/// `n` points spaced evenly in log10 between `10^lo` and `10^hi`.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![10f64.powf(lo)],
        _ => (0..n).map(|i| 10f64.powf(lo + (hi - lo) * i as f64 / (n - 1) as f64)).collect(),
    }
}

/// Default search grid: six points from `1e-5` to `1`.
pub fn default_reg_grid() -> Vec<f64> {
    log_grid(-5.0, 0.0, 6)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    pub best_reg: f64,
    pub model: SvmModel,
    /// `(λ, mean fold accuracy)` per grid point, in grid order.
    pub scores: Vec<(f64, f64)>,
}

/// Stratified k-fold assignment of the rows of `data`.
fn fold_ids(data: &LabeledSpectra, folds: usize, seed: u64) -> Vec<usize> {
    let mut ids = vec![0; data.len()];
    let mut r = rng::stream(seed, 1);
    for class in 0..data.classes() {
        let mut idx: Vec<usize> = (0..data.len()).filter(|&i| data.label(i) == class).collect();
        idx.shuffle(&mut r);
        for (j, i) in idx.into_iter().enumerate() {
            ids[i] = j % folds;
        }
    }
    ids
}

/// Grid search over `λ` by k-fold cross-validation on the train split;
/// ties go to the larger `λ`. The returned model is refit on the whole
/// train split.
pub fn svm_hyperparameter_search(
    data: &LabeledSpectra,
    grid: &[f64],
    folds: usize,
    cfg: &SvmConfig,
) -> Result<SearchResult> {
    if grid.is_empty() {
        return Err(Error::validation("empty regularization grid"));
    }
    let train = data.subset(Split::Train);
    if folds < 2 || folds > train.len() {
        return Err(Error::validation(format!("{folds} folds for {} training samples", train.len())));
    }
    let ids = fold_ids(&train, folds, cfg.seed);
    let scores: Vec<(f64, f64)> = grid
        .par_iter()
        .map(|&reg| -> Result<(f64, f64)> {
            let mut acc = 0.0;
            for f in 0..folds {
                let fit: Vec<usize> = (0..train.len()).filter(|&i| ids[i] != f).collect();
                let held: Vec<usize> = (0..train.len()).filter(|&i| ids[i] == f).collect();
                let model = train_svm(&train.select(&fit), &SvmConfig { reg, ..*cfg })?;
                acc += model.accuracy(&train.select(&held));
            }
            Ok((reg, acc / folds as f64))
        })
        .collect::<Result<_>>()?;
    let mut best = scores[0];
    for &s in &scores[1..] {
        if s.1 > best.1 || (s.1 == best.1 && s.0 > best.0) {
            best = s;
        }
    }
    let model = train_svm(&train, &SvmConfig { reg: best.0, ..*cfg })?;
    Ok(SearchResult { best_reg: best.0, model, scores })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line_data() -> LabeledSpectra {
        LabeledSpectra::from_rows(&[vec![-1.0], vec![1.0]], vec![0, 1], 2).unwrap()
    }

    #[test]
    fn zero_model_objective_is_one() {
        let x = [vec![0.3, -2.0], vec![5.0, 1.0], vec![0.0, 0.0]];
        let rows: Vec<&[f64]> = x.iter().map(Vec::as_slice).collect();
        assert_eq!(svm_objective(&rows, &[1.0, -1.0, 1.0], &[0.0, 0.0], 0.0, 0.7), 1.0);
    }

    #[test]
    fn one_dimensional_separable() {
        let d = line_data();
        let m = train_svm(&d, &SvmConfig { reg: 1e-6, epochs: 2000, seed: 1 }).unwrap();
        assert_eq!(m.accuracy(&d), 1.0);
        let rows: Vec<&[f64]> = (0..2).map(|i| d.row(i)).collect();
        for k in 0..2 {
            let t: Vec<f64> = (0..2).map(|i| if i == k { 1.0 } else { -1.0 }).collect();
            let hinge = svm_objective(&rows, &t, &m.w[k], m.c[k], 0.0);
            assert!(hinge < 1e-3, "class {k} hinge {hinge}");
        }
        // Exhaustive oracle over (w, c): the separable optimum has hinge 0
        // with |w| = 1, c = 0 for small λ.
        let mut best = (f64::INFINITY, 0.0, 0.0);
        for i in -300..=300 {
            for j in -100..=100 {
                let (w, c) = (i as f64 / 100.0, j as f64 / 100.0);
                let o = svm_objective(&rows, &[-1.0, 1.0], &[w], c, 1e-6);
                if o < best.0 {
                    best = (o, w, c);
                }
            }
        }
        assert!((best.1 - 1.0).abs() < 1e-9 && best.2.abs() < 1e-9);
        assert!((m.w[1][0] - best.1).abs() < 0.05 && (m.c[1] - best.2).abs() < 0.05, "{:?} {:?}", m.w, m.c);
    }

    #[test]
    fn history_is_non_increasing() {
        let rows: Vec<Vec<f64>> = (0..40).map(|i| vec![(i % 7) as f64 / 7.0, (i % 5) as f64 / 5.0]).collect();
        let y: Vec<usize> = (0..40).map(|i| (i % 3 == 0) as usize).collect();
        let m = train_svm(&LabeledSpectra::from_rows(&rows, y, 2).unwrap(), &SvmConfig::default()).unwrap();
        for h in &m.history {
            assert!(h.windows(2).all(|w| w[1] <= w[0]));
        }
    }

    #[test]
    fn label_flip_swaps_rows() {
        let rows: Vec<Vec<f64>> = (0..30).map(|i| vec![(i as f64 * 0.37).sin(), (i as f64 * 0.91).cos()]).collect();
        let y: Vec<usize> = rows.iter().map(|r| (r[0] + r[1] > 0.0) as usize).collect();
        let flipped: Vec<usize> = y.iter().map(|l| 1 - l).collect();
        let cfg = SvmConfig { reg: 1e-2, epochs: 30, seed: 5 };
        let a = train_svm(&LabeledSpectra::from_rows(&rows, y, 2).unwrap(), &cfg).unwrap();
        let b = train_svm(&LabeledSpectra::from_rows(&rows, flipped, 2).unwrap(), &cfg).unwrap();
        for (u, v) in a.w[1].iter().zip(&b.w[0]) {
            assert!((u - v).abs() < 1e-6);
        }
        assert!((a.c[1] - b.c[0]).abs() < 1e-6);
    }

    #[test]
    fn single_class_is_rejected() {
        let d = LabeledSpectra::from_rows(&[vec![1.0], vec![2.0]], vec![0, 0], 2).unwrap();
        assert!(train_svm(&d, &SvmConfig::default()).is_err());
    }

    #[test]
    fn scaling_keeps_decisions() {
        let m = SvmModel { w: vec![vec![1.0, -2.0], vec![0.5, 0.5]], c: vec![0.1, -0.3], reg: 0.0, history: vec![] };
        for x in [[0.2, 0.9], [-1.0, 3.0], [4.0, 0.0]] {
            assert_eq!(m.predict(&x), m.scaled(7.5).predict(&x));
        }
    }

    #[test]
    fn grid_search_cases() {
        assert_eq!(default_reg_grid().len(), 6);
        assert!((default_reg_grid()[0] - 1e-5).abs() < 1e-18 && (default_reg_grid()[5] - 1.0).abs() < 1e-12);
        let rows: Vec<Vec<f64>> = (0..30).map(|i| vec![if i % 2 == 0 { -1.0 } else { 1.0 } * (1.0 + (i % 4) as f64)]).collect();
        let y: Vec<usize> = (0..30).map(|i| i % 2).collect();
        let d = LabeledSpectra::from_rows(&rows, y, 2).unwrap();
        let cfg = SvmConfig { epochs: 30, ..SvmConfig::default() };
        assert_eq!(svm_hyperparameter_search(&d, &[0.3], 3, &cfg).unwrap().best_reg, 0.3);
        let res = svm_hyperparameter_search(&d, &default_reg_grid(), 3, &cfg).unwrap();
        let top = res.scores.iter().map(|s| s.1).fold(0.0, f64::max);
        assert_eq!(top, 1.0);
        let largest_perfect = res.scores.iter().filter(|s| s.1 == 1.0).map(|s| s.0).fold(0.0, f64::max);
        assert_eq!(res.best_reg, largest_perfect);
        assert!(svm_hyperparameter_search(&d, &[], 3, &cfg).is_err());
        assert!(svm_hyperparameter_search(&d, &[0.1], 31, &cfg).is_err());
    }
}
