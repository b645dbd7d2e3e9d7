use crate::error::{Error, Result};
use crate::hsi::LabelMap;
use crate::kv::{self, KvDoc};

use super::features::{PredictedLabelMap, ScoreMap, UNKNOWN};

/// ROC points `(fpr, tpr)` from `(0, 0)` to `(1, 1)` and the trapezoid
/// area under them.
#[derive(Debug, Clone, PartialEq)]
pub struct Roc {
    pub points: Vec<(f64, f64)>,
    pub auc: f64,
}

impl Roc {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("fpr,tpr\n");
        for (f, t) in &self.points {
            out.push_str(&format!("{f},{t}\n"));
        }
        out
    }
}

/// Sweep the threshold over every distinct score, highest first; tied
/// scores move together.
pub fn roc_curve(scores: &[f64], positive: &[bool]) -> Result<Roc> {
    if scores.len() != positive.len() {
        return Err(Error::dim("scores and truth differ in length"));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::validation("ROC scores must be finite"));
    }
    let p = positive.iter().filter(|&&v| v).count();
    let n = positive.len() - p;
    if p == 0 || n == 0 {
        return Err(Error::validation("ROC needs both positive and negative samples"));
    }
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut points = vec![(0.0, 0.0)];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < idx.len() {
        let s = scores[idx[i]];
        while i < idx.len() && scores[idx[i]] == s {
            if positive[idx[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push((fp as f64 / n as f64, tp as f64 / p as f64));
    }
    let auc = points.windows(2).map(|w| (w[1].0 - w[0].0) * (w[1].1 + w[0].1) / 2.0).sum();
    Ok(Roc { points, auc })
}

/// ROC of one class's score plane against a binary truth map, skipping
/// pixels whose score is not finite (invalid).
pub fn roc_from_maps(scores: &ScoreMap, class: usize, truth: &LabelMap) -> Result<Roc> {
    if scores.width != truth.width() || scores.height != truth.height() {
        return Err(Error::dim("score map and truth differ in size"));
    }
    if truth.classes() != 2 {
        return Err(Error::validation("ROC needs binary truth"));
    }
    let (mut s, mut t) = (Vec::new(), Vec::new());
    for (p, &l) in truth.labels().iter().enumerate() {
        let v = scores.pixel(p)[class];
        if v.is_finite() {
            s.push(v);
            t.push(l as usize == class);
        }
    }
    roc_curve(&s, &t)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub classes: usize,
    /// `counts[truth][pred]`.
    pub counts: Vec<Vec<usize>>,
    pub overall_accuracy: f64,
    /// NaN for classes absent from the evaluated pixels.
    pub per_class_accuracy: Vec<f64>,
    pub evaluated: usize,
    pub unknown: usize,
    pub roc: Option<Roc>,
    pub images_captured: Option<usize>,
}

impl EvalReport {
    /// Rows divided by their sums (rows of zeros stay zero).
    pub fn normalized(&self) -> Vec<Vec<f64>> {
        self.counts
            .iter()
            .map(|r| {
                let s: usize = r.iter().sum();
                r.iter().map(|&c| if s == 0 { 0.0 } else { c as f64 / s as f64 }).collect()
            })
            .collect()
    }

    pub fn to_kv(&self) -> KvDoc {
        let mut d = KvDoc::new();
        d.set("classes", self.classes);
        d.set("evaluated_pixels", self.evaluated);
        d.set("unknown_pixels", self.unknown);
        d.set("overall_accuracy", self.overall_accuracy);
        d.set("per_class_accuracy", kv::join(&self.per_class_accuracy));
        if let Some(r) = &self.roc {
            d.set("auc", r.auc);
        }
        if let Some(n) = self.images_captured {
            d.set("images_captured", n);
        }
        d
    }

    pub fn confusion_csv(&self) -> String {
        matrix_csv(self.classes, |t, p| self.counts[t][p].to_string())
    }

    pub fn normalized_csv(&self) -> String {
        let m = self.normalized();
        matrix_csv(self.classes, |t, p| m[t][p].to_string())
    }
}

fn matrix_csv(k: usize, cell: impl Fn(usize, usize) -> String) -> String {
    let mut out = String::from("truth\\pred");
    for p in 0..k {
        out.push_str(&format!(",{p}"));
    }
    out.push('\n');
    for t in 0..k {
        out.push_str(&t.to_string());
        for p in 0..k {
            out.push(',');
            out.push_str(&cell(t, p));
        }
        out.push('\n');
    }
    out
}

/// Confusion counts (rows = truth) over pixels with a known prediction.
pub fn confusion_and_accuracy(pred: &PredictedLabelMap, truth: &LabelMap) -> Result<EvalReport> {
    if pred.width != truth.width() || pred.height != truth.height() {
        return Err(Error::dim("prediction and truth differ in size"));
    }
    let k = pred.classes.max(truth.classes());
    let mut counts = vec![vec![0usize; k]; k];
    let mut unknown = 0;
    for (&p, &t) in pred.labels.iter().zip(truth.labels()) {
        if p == UNKNOWN || p as usize >= pred.classes {
            unknown += 1;
        } else {
            counts[t as usize][p as usize] += 1;
        }
    }
    let evaluated = pred.labels.len() - unknown;
    if evaluated == 0 {
        return Err(Error::validation("no pixels with a known prediction"));
    }
    let trace: usize = (0..k).map(|i| counts[i][i]).sum();
    let per_class_accuracy = counts
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let s: usize = r.iter().sum();
            if s == 0 {
                f64::NAN
            } else {
                r[i] as f64 / s as f64
            }
        })
        .collect();
    Ok(EvalReport {
        classes: k,
        counts,
        overall_accuracy: trace as f64 / evaluated as f64,
        per_class_accuracy,
        evaluated,
        unknown,
        roc: None,
        images_captured: None,
    })
}
