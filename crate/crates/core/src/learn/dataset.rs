use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::hsi::{HsiCube, LabelMap};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Split {
    Train,
    Val,
    Test,
    /// Left out when the fractions sum to less than one.
    Unused,
}

/// Spectra as rows of an `N x B` matrix, labels in `[0, K)`, and a split
/// tag per row.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSpectra {
    bands: usize,
    classes: usize,
    x: Vec<f64>,
    y: Vec<usize>,
    split: Vec<Split>,
}

impl LabeledSpectra {
    /// All rows start in the training split.
    pub fn new(bands: usize, classes: usize, x: Vec<f64>, y: Vec<usize>) -> Result<Self> {
        if bands == 0 || classes == 0 {
            return Err(Error::validation("dataset needs at least one band and one class"));
        }
        if x.len() != y.len() * bands {
            return Err(Error::dim(format!("{} values for {} rows of {bands} bands", x.len(), y.len())));
        }
        if let Some(i) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index: i });
        }
        if let Some(&l) = y.iter().find(|&&l| l >= classes) {
            return Err(Error::validation(format!("label {l} out of range for {classes} classes")));
        }
        let split = vec![Split::Train; y.len()];
        Ok(Self { bands, classes, x, y, split })
    }

    pub fn from_rows(rows: &[Vec<f64>], y: Vec<usize>, classes: usize) -> Result<Self> {
        let bands = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != bands) {
            return Err(Error::dim("rows differ in length"));
        }
        Self::new(bands, classes, rows.concat(), y)
    }

    /// Labeled pixels of a cube, each row divided by its sum. Pixels whose
    /// label is in `skip` or whose spectrum sums to zero are dropped.
    pub fn from_cube(cube: &HsiCube, labels: &LabelMap, skip: &[usize]) -> Result<Self> {
        if cube.width() != labels.width() || cube.height() != labels.height() {
            return Err(Error::dim("cube and label map differ in size"));
        }
        let mut x = Vec::new();
        let mut y = Vec::new();
        for (p, &l) in labels.labels().iter().enumerate() {
            let l = l as usize;
            if skip.contains(&l) {
                continue;
            }
            let px = cube.pixel_at(p);
            let s: f64 = px.iter().sum();
            if s > 0.0 {
                x.extend(px.iter().map(|v| v / s));
                y.push(l);
            }
        }
        Self::new(cube.bands(), labels.classes(), x, y)
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn bands(&self) -> usize {
        self.bands
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.bands..(i + 1) * self.bands]
    }

    pub fn label(&self, i: usize) -> usize {
        self.y[i]
    }

    pub fn labels(&self) -> &[usize] {
        &self.y
    }

    pub fn split_of(&self, i: usize) -> Split {
        self.split[i]
    }

    pub fn indices(&self, split: Split) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.split[i] == split).collect()
    }

    /// Rows of one split as a new dataset, all tagged train.
    pub fn subset(&self, split: Split) -> Self {
        self.select(&self.indices(split))
    }

    pub fn select(&self, idx: &[usize]) -> Self {
        let mut x = Vec::with_capacity(idx.len() * self.bands);
        for &i in idx {
            x.extend_from_slice(self.row(i));
        }
        Self {
            bands: self.bands,
            classes: self.classes,
            x,
            y: idx.iter().map(|&i| self.y[i]).collect(),
            split: vec![Split::Train; idx.len()],
        }
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut c = vec![0; self.classes];
        for &l in &self.y {
            c[l] += 1;
        }
        c
    }

    /// Classes that have at least one row.
    pub fn present_classes(&self) -> usize {
        self.class_counts().iter().filter(|&&c| c > 0).count()
    }
}

/// Deterministic stratified split. Each class is shuffled and cut by the
/// train/val/test fractions (rounded per class); every non-zero fraction
/// receives at least one row of every present class.
pub fn split_dataset(data: &LabeledSpectra, fractions: [f64; 3], seed: u64) -> Result<LabeledSpectra> {
    if fractions.iter().any(|f| !(0.0..=1.0).contains(f)) || fractions.iter().sum::<f64>() > 1.0 + 1e-9 {
        return Err(Error::validation(format!("split fractions {fractions:?} must be in [0, 1] and sum to at most 1")));
    }
    let needed = fractions.iter().filter(|&&f| f > 0.0).count();
    let mut out = data.clone();
    out.split.iter_mut().for_each(|s| *s = Split::Unused);
    let mut r = rng::seeded(seed);
    for class in 0..data.classes {
        let mut idx: Vec<usize> = (0..data.len()).filter(|&i| data.y[i] == class).collect();
        if idx.is_empty() {
            continue;
        }
        if idx.len() < needed {
            return Err(Error::validation(format!(
                "class {class} has {} samples, fewer than the {needed} non-empty splits",
                idx.len()
            )));
        }
        idx.shuffle(&mut r);
        let n = idx.len();
        let mut counts = fractions.map(|f| if f > 0.0 { ((f * n as f64).round() as usize).max(1) } else { 0 });
        // Trim overshoot from the largest share, never below one.
        while counts.iter().sum::<usize>() > n {
            let k = (0..3).max_by_key(|&k| counts[k]).expect("three splits");
            counts[k] -= 1;
        }
        let tags = [Split::Train, Split::Val, Split::Test];
        let mut at = 0;
        for (k, &c) in counts.iter().enumerate() {
            for &i in &idx[at..at + c] {
                out.split[i] = tags[k];
            }
            at += c;
        }
    }
    Ok(out)
}
