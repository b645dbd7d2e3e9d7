//! Column-height encoding of signed filters on a binary SLM.
//!
//! The modulator is driven as a binary device. Grayscale transmittance
//! for spectral column `j` comes from how many of its `R` rows are on; the
//! on rows grow outward from a band of `dc_rows` rows kept on in every
//! column, which suppresses diffraction at the cost of a constant offset
//! that a DC-only frame measures.

use crate::error::{Error, Result};

/// How filter profiles are realised on the modulator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlmEncoding {
    /// Exact grayscale transmittance; no quantization, no DC band.
    Ideal,
    /// Binary columns with `rows` rows and a `dc_rows` always-on band.
    ColumnHeight { rows: usize, dc_rows: usize },
}

impl SlmEncoding {
    pub const DEFAULT_ROWS: usize = 1080;
    pub const DEFAULT_DC_ROWS: usize = 16;

    pub fn default_binary() -> Self {
        SlmEncoding::ColumnHeight { rows: Self::DEFAULT_ROWS, dc_rows: Self::DEFAULT_DC_ROWS }
    }

    pub fn validate(&self) -> Result<()> {
        if let SlmEncoding::ColumnHeight { rows, dc_rows } = *self {
            if rows <= dc_rows {
                return Err(Error::Config(format!("SLM rows ({rows}) must exceed dc_rows ({dc_rows})")));
            }
        }
        Ok(())
    }

    pub fn dc_rows(&self) -> usize {
        match *self {
            SlmEncoding::Ideal => 0,
            SlmEncoding::ColumnHeight { dc_rows, .. } => dc_rows,
        }
    }

    /// Largest error of a decoded transmittance (half a quantization step).
    pub fn quantization_step(&self) -> f64 {
        match *self {
            SlmEncoding::Ideal => 0.0,
            SlmEncoding::ColumnHeight { rows, dc_rows } => 1.0 / (rows - dc_rows) as f64,
        }
    }
}

impl std::fmt::Display for SlmEncoding {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SlmEncoding::Ideal => write!(f, "ideal"),
            SlmEncoding::ColumnHeight { rows, dc_rows } => write!(f, "column-height:{rows}:{dc_rows}"),
        }
    }
}

impl std::str::FromStr for SlmEncoding {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "ideal" {
            return Ok(SlmEncoding::Ideal);
        }
        let parts: Vec<&str> = s.split(':').collect();
        match parts.as_slice() {
            ["column-height", r, d] => {
                let rows = r.parse().map_err(|_| Error::parse("SLM encoding", s.to_string()))?;
                let dc_rows = d.parse().map_err(|_| Error::parse("SLM encoding", s.to_string()))?;
                let e = SlmEncoding::ColumnHeight { rows, dc_rows };
                e.validate()?;
                Ok(e)
            }
            _ => Err(Error::parse("SLM encoding", s.to_string())),
        }
    }
}

/// Binary patterns for the positive and negative parts of one filter.
#[derive(Debug, Clone, PartialEq)]
pub struct SlmPatternPair {
    rows: usize,
    cols: usize,
    dc_rows: usize,
    /// Row-major `rows x cols`.
    positive: Vec<bool>,
    negative: Vec<bool>,
    heights_pos: Vec<usize>,
    heights_neg: Vec<usize>,
    /// `max |d|`; multiplies decoded values back to filter scale.
    gain: f64,
}

impl SlmPatternPair {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn dc_rows(&self) -> usize {
        self.dc_rows
    }

    pub fn positive(&self) -> &[bool] {
        &self.positive
    }

    pub fn negative(&self) -> &[bool] {
        &self.negative
    }

    pub fn column_heights_pos(&self) -> &[usize] {
        &self.heights_pos
    }

    pub fn column_heights_neg(&self) -> &[usize] {
        &self.heights_neg
    }

    pub fn gain(&self) -> f64 {
        self.gain
    }

    /// Physical transmittance per column: on rows (DC band included) / R.
    pub fn transmittance_pos(&self) -> Vec<f64> {
        column_transmittance(&self.positive, self.rows, self.cols)
    }

    pub fn transmittance_neg(&self) -> Vec<f64> {
        column_transmittance(&self.negative, self.rows, self.cols)
    }

    /// Transmittance of the DC-only pattern.
    pub fn transmittance_dc(&self) -> Vec<f64> {
        vec![self.dc_rows as f64 / self.rows as f64; self.cols]
    }
}

/// Fraction of on pixels in each column.
pub fn column_transmittance(pattern: &[bool], rows: usize, cols: usize) -> Vec<f64> {
    (0..cols)
        .map(|c| (0..rows).filter(|&r| pattern[r * cols + c]).count() as f64 / rows as f64)
        .collect()
}

/// Row order for stacking: alternately just below and just above the DC
/// band, moving outward.
fn fill_order(rows: usize, dc_rows: usize) -> impl Iterator<Item = usize> {
    let top = (rows - dc_rows) / 2;
    let below = top + dc_rows;
    (0..rows - dc_rows).map(move |t| if t % 2 == 0 { below + t / 2 } else { top - 1 - t / 2 })
}

fn paint(heights: &[usize], rows: usize, dc_rows: usize) -> Vec<bool> {
    let cols = heights.len();
    let mut pattern = vec![false; rows * cols];
    let top = (rows - dc_rows) / 2;
    for r in top..top + dc_rows {
        for c in 0..cols {
            pattern[r * cols + c] = true;
        }
    }
    let order: Vec<usize> = fill_order(rows, dc_rows).collect();
    for (c, &h) in heights.iter().enumerate() {
        for &r in &order[..h] {
            pattern[r * cols + c] = true;
        }
    }
    pattern
}

/// Split `d = m · (d⁺ − d⁻)` with `m = max |d|` and quantize each part to
/// column heights `round(d± · (R − dc_rows))`.
pub fn encode_filter_to_slm(d: &[f64], rows: usize, dc_rows: usize) -> Result<SlmPatternPair> {
    SlmEncoding::ColumnHeight { rows, dc_rows }.validate()?;
    if d.is_empty() {
        return Err(Error::validation("empty filter"));
    }
    if let Some(i) = d.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { index: i });
    }
    let gain = d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let levels = (rows - dc_rows) as f64;
    let quantize = |v: f64| -> usize {
        if gain == 0.0 {
            0
        } else {
            ((v / gain) * levels).round() as usize
        }
    };
    let heights_pos: Vec<usize> = d.iter().map(|&v| quantize(v.max(0.0))).collect();
    let heights_neg: Vec<usize> = d.iter().map(|&v| quantize((-v).max(0.0))).collect();
    Ok(SlmPatternPair {
        rows,
        cols: d.len(),
        dc_rows,
        positive: paint(&heights_pos, rows, dc_rows),
        negative: paint(&heights_neg, rows, dc_rows),
        heights_pos,
        heights_neg,
        gain,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_quantization() {
        let p = encode_filter_to_slm(&[1.0, 0.5, 0.0], 101, 1).unwrap();
        assert_eq!(p.column_heights_pos(), &[100, 50, 0]);
        assert_eq!(p.column_heights_neg(), &[0, 0, 0]);
        let t = p.transmittance_pos();
        assert_eq!(t, vec![101.0 / 101.0, 51.0 / 101.0, 1.0 / 101.0]);
        assert_eq!(p.transmittance_neg(), vec![1.0 / 101.0; 3]);
    }

    #[test]
    fn sign_split() {
        let p = encode_filter_to_slm(&[-1.0], 10, 2).unwrap();
        assert_eq!(p.column_heights_pos(), &[0]);
        assert_eq!(p.column_heights_neg(), &[8]);
        assert_eq!(p.transmittance_pos(), vec![0.2]);
        assert_eq!(p.transmittance_neg(), vec![1.0]);
    }

    #[test]
    fn dc_band_is_centred_and_always_on() {
        let p = encode_filter_to_slm(&[0.0, 0.0], 9, 3).unwrap();
        for r in 0..9 {
            let on = (3..6).contains(&r);
            assert_eq!(p.positive()[r * 2], on);
            assert_eq!(p.negative()[r * 2 + 1], on);
        }
        assert_eq!(p.gain(), 0.0);
    }

    #[test]
    fn stacking_stays_contiguous() {
        let p = encode_filter_to_slm(&[0.5, 1.0], 11, 1).unwrap();
        let on: Vec<usize> = (0..11).filter(|&r| p.positive()[r * 2]).collect();
        assert_eq!(on.len(), 6);
        assert!(on.windows(2).all(|w| w[1] == w[0] + 1), "{on:?}");
    }

    #[test]
    fn bad_geometry() {
        assert!(encode_filter_to_slm(&[1.0], 4, 4).is_err());
        assert!(encode_filter_to_slm(&[f64::NAN], 10, 0).is_err());
    }

    #[test]
    fn encoding_parse() {
        assert_eq!("ideal".parse::<SlmEncoding>().unwrap(), SlmEncoding::Ideal);
        assert_eq!(
            "column-height:1080:16".parse::<SlmEncoding>().unwrap(),
            SlmEncoding::ColumnHeight { rows: 1080, dc_rows: 16 }
        );
        assert!("column-height:4:4".parse::<SlmEncoding>().is_err());
        assert!("gray".parse::<SlmEncoding>().is_err());
    }
}
