use std::fmt;
use std::path::Path;

use crate::error::{Error, Result};
use crate::hsi::{Spectrum, WavelengthGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterSource {
    Svm,
    Mlp,
    Matched,
    External,
}

impl fmt::Display for FilterSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FilterSource::Svm => "svm",
            FilterSource::Mlp => "mlp",
            FilterSource::Matched => "matched",
            FilterSource::External => "external",
        })
    }
}

impl std::str::FromStr for FilterSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "svm" => FilterSource::Svm,
            "mlp" => FilterSource::Mlp,
            "matched" => FilterSource::Matched,
            "external" => FilterSource::External,
            other => return Err(Error::parse("filter source", other.to_string())),
        })
    }
}

/// Signed spectral filters `d_k(λ)` with offsets `β_k`; feature `k` of a
/// spectrum `x` is `d_k · x + β_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralFilterBank {
    grid: WavelengthGrid,
    filters: Vec<Vec<f64>>,
    offsets: Vec<f64>,
    source: FilterSource,
    id: String,
}

impl SpectralFilterBank {
    pub fn new(grid: WavelengthGrid, filters: Vec<Vec<f64>>, offsets: Vec<f64>, source: FilterSource) -> Result<Self> {
        if filters.is_empty() {
            return Err(Error::validation("filter bank needs at least one filter"));
        }
        if offsets.len() != filters.len() {
            return Err(Error::dim(format!("{} offsets for {} filters", offsets.len(), filters.len())));
        }
        for (k, f) in filters.iter().enumerate() {
            if f.len() != grid.bands() {
                return Err(Error::dim(format!("filter {k} has {} taps for {} bands", f.len(), grid.bands())));
            }
            if f.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite { index: k });
            }
        }
        if offsets.iter().any(|v| !v.is_finite()) {
            return Err(Error::validation("non-finite filter offset"));
        }
        let id = format!("{source}-q{}", filters.len());
        Ok(Self { grid, filters, offsets, source, id })
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    pub fn grid(&self) -> &WavelengthGrid {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.filters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.filters.is_empty()
    }

    pub fn filters(&self) -> &[Vec<f64>] {
        &self.filters
    }

    pub fn filter(&self, k: usize) -> &[f64] {
        &self.filters[k]
    }

    pub fn offsets(&self) -> &[f64] {
        &self.offsets
    }

    pub fn source(&self) -> FilterSource {
        self.source
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn filter_ids(&self) -> Vec<String> {
        (0..self.len()).map(|k| format!("{}#{k}", self.id)).collect()
    }

    /// True when no filter has a negative tap, so one SLM pattern per
    /// filter suffices.
    pub fn is_nonnegative(&self) -> bool {
        self.filters.iter().flatten().all(|v| *v >= 0.0)
    }

    /// `d_k · x` for every filter (offsets not added).
    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        self.filters.iter().map(|f| f.iter().zip(x).map(|(a, b)| a * b).sum()).collect()
    }

    /// One row per filter: offset first, then the taps. A header row names
    /// the band centres.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("offset");
        for c in self.grid.centers() {
            out.push_str(&format!(",{c}"));
        }
        out.push('\n');
        for (f, b) in self.filters.iter().zip(&self.offsets) {
            out.push_str(&b.to_string());
            for v in f {
                out.push_str(&format!(",{v}"));
            }
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        let header = lines.next().ok_or_else(|| Error::parse("filter bank CSV", "empty input"))?;
        let mut cols = header.split(',');
        if cols.next().map(str::trim) != Some("offset") {
            return Err(Error::parse("filter bank CSV", "header must start with 'offset'"));
        }
        let centers = cols
            .map(|c| c.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|_| Error::parse("filter bank CSV", "bad wavelength in header"))?;
        let grid = WavelengthGrid::from_centers(&centers, 1e-6)?;
        let (mut filters, mut offsets) = (Vec::new(), Vec::new());
        for (i, line) in lines.enumerate() {
            let vals = line
                .split(',')
                .map(|c| c.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|_| Error::parse("filter bank CSV", format!("bad number on row {}", i + 1)))?;
            if vals.len() != grid.bands() + 1 {
                return Err(Error::parse(
                    "filter bank CSV",
                    format!("row {} has {} columns, expected {}", i + 1, vals.len(), grid.bands() + 1),
                ));
            }
            offsets.push(vals[0]);
            filters.push(vals[1..].to_vec());
        }
        Self::new(grid, filters, offsets, FilterSource::External)
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }

    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_csv(&std::fs::read_to_string(path)?)
    }
}

/// Binary matched filter `d = s₁ − s₂`, offset zero.
pub fn matched_filter(s1: &Spectrum, s2: &Spectrum) -> Result<SpectralFilterBank> {
    if s1.grid() != s2.grid() {
        return Err(Error::GridMismatch);
    }
    let d = s1.values().iter().zip(s2.values()).map(|(a, b)| a - b).collect();
    SpectralFilterBank::new(*s1.grid(), vec![d], vec![0.0], FilterSource::Matched)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matched_filter_cases() {
        let g = WavelengthGrid::new(600.0, 900.0, 2).unwrap();
        let a = Spectrum::new(g, vec![1.0, 0.0]).unwrap();
        let b = Spectrum::new(g, vec![0.0, 1.0]).unwrap();
        assert_eq!(matched_filter(&a, &b).unwrap().filter(0), &[1.0, -1.0]);
        assert_eq!(matched_filter(&a, &a).unwrap().filter(0), &[0.0, 0.0]);
        let other = Spectrum::ones(WavelengthGrid::new(600.0, 800.0, 2).unwrap());
        assert!(matches!(matched_filter(&a, &other), Err(Error::GridMismatch)));
    }

    #[test]
    fn csv_round_trip() {
        let g = WavelengthGrid::new(600.0, 900.0, 4).unwrap();
        let bank = SpectralFilterBank::new(
            g,
            vec![vec![1.0, -0.5, 0.25, 0.0], vec![0.1, 0.2, 0.3, 1e-17]],
            vec![0.5, -2.0],
            FilterSource::External,
        )
        .unwrap();
        assert_eq!(SpectralFilterBank::from_csv(&bank.to_csv()).unwrap(), bank);
    }

    #[test]
    fn csv_errors() {
        assert!(SpectralFilterBank::from_csv("").is_err());
        assert!(SpectralFilterBank::from_csv("beta,600,900\n0,1,2\n").is_err());
        assert!(SpectralFilterBank::from_csv("offset,600,900\n0,1\n").is_err());
        assert!(SpectralFilterBank::from_csv("offset,600,900\n").is_err());
        assert!(SpectralFilterBank::from_csv("offset,600,900\n0,x,1\n").is_err());
    }
}
