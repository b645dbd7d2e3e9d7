use crate::error::{Error, Result};
use crate::learn::{train_mlp, LabeledSpectra, MlpConfig, Split};

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub q: usize,
    /// Test-split accuracy, or the training failure.
    pub outcome: std::result::Result<f64, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    /// Smallest `Q` within `margin` of the best accuracy.
    pub knee: Option<usize>,
    pub margin: f64,
}

impl SweepResult {
    pub fn accuracy(&self, q: usize) -> Option<f64> {
        self.rows.iter().find(|r| r.q == q).and_then(|r| r.outcome.as_ref().ok().copied())
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("q,test_accuracy,error\n");
        for r in &self.rows {
            match &r.outcome {
                Ok(a) => out.push_str(&format!("{},{a},\n", r.q)),
                Err(e) => out.push_str(&format!("{},,{}\n", r.q, e.replace([',', '\n'], " "))),
            }
        }
        out
    }
}

pub const DEFAULT_KNEE_MARGIN: f64 = 0.01;

/// Smallest `Q` whose accuracy is within `margin` of the maximum.
pub fn knee_point(points: &[(usize, f64)], margin: f64) -> Option<usize> {
    let best = points.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    points.iter().find(|p| p.1 >= best - margin).map(|p| p.0)
}

/// Train one network per filter count and record its test accuracy.
/// A failed training is recorded in its row and skipped by the knee.
pub fn sweep_filter_count(data: &LabeledSpectra, qs: &[usize], cfg: &MlpConfig, margin: f64) -> Result<SweepResult> {
    if qs.is_empty() || qs.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::validation("filter counts must be non-empty and strictly ascending"));
    }
    let test = {
        let t = data.subset(Split::Test);
        if t.is_empty() {
            data.subset(Split::Train)
        } else {
            t
        }
    };
    let rows: Vec<SweepRow> = qs
        .iter()
        .map(|&q| SweepRow {
            q,
            outcome: train_mlp(data, &MlpConfig { q, ..cfg.clone() })
                .map(|t| t.model.accuracy(&test))
                .map_err(|e| e.to_string()),
        })
        .collect();
    let ok: Vec<(usize, f64)> = rows.iter().filter_map(|r| r.outcome.as_ref().ok().map(|&a| (r.q, a))).collect();
    Ok(SweepResult { knee: knee_point(&ok, margin), rows, margin })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn knee_cases() {
        assert_eq!(knee_point(&[(3, 0.4)], 0.01), Some(3));
        assert_eq!(knee_point(&[(1, 0.5), (3, 0.88), (5, 0.905), (10, 0.91)], 0.01), Some(5));
        assert_eq!(knee_point(&[], 0.01), None);
    }

    #[test]
    fn failures_are_recorded() {
        let rows: Vec<Vec<f64>> = (0..20).map(|i| vec![1.0 + (i % 2) as f64, 1.0, 0.5 * (i % 3) as f64]).collect();
        let y = (0..20).map(|i| i % 2).collect();
        let d = LabeledSpectra::from_rows(&rows, y, 2).unwrap();
        let cfg = MlpConfig { epochs: 2, hidden: vec![4], ..MlpConfig::default() };
        // Q = 9 exceeds the band count, so that row fails.
        let r = sweep_filter_count(&d, &[1, 9], &cfg, DEFAULT_KNEE_MARGIN).unwrap();
        assert!(r.rows[0].outcome.is_ok());
        assert!(r.rows[1].outcome.is_err());
        assert_eq!(r.knee, Some(1));
        assert!(sweep_filter_count(&d, &[3, 1], &cfg, 0.01).is_err());
    }
}
