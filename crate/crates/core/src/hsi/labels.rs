use crate::error::{Error, Result};

/// Per-pixel class labels in `[0, K)` with class names.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap {
    width: usize,
    height: usize,
    labels: Vec<u16>,
    class_names: Vec<String>,
}

impl LabelMap {
    pub fn new(width: usize, height: usize, labels: Vec<u16>, class_names: Vec<String>) -> Result<Self> {
        if labels.len() != width * height {
            return Err(Error::dim(format!(
                "label map {width}x{height} needs {} labels, got {}",
                width * height,
                labels.len()
            )));
        }
        if class_names.is_empty() || class_names.len() > u16::MAX as usize {
            return Err(Error::validation("label map needs between 1 and 65535 classes"));
        }
        let k = class_names.len();
        if let Some(p) = labels.iter().position(|&l| l as usize >= k) {
            return Err(Error::validation(format!("label {} at pixel {p} exceeds class count {k}", labels[p])));
        }
        Ok(Self { width, height, labels, class_names })
    }

    /// Names `class0..class{k-1}`.
    pub fn default_names(k: usize) -> Vec<String> {
        (0..k).map(|i| format!("class{i}")).collect()
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn labels(&self) -> &[u16] {
        &self.labels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> usize {
        self.labels[y * self.width + x] as usize
    }

    pub fn counts(&self) -> Vec<usize> {
        let mut c = vec![0; self.classes()];
        for &l in &self.labels {
            c[l as usize] += 1;
        }
        c
    }
}

/// Per-pixel material abundances `a_k(x, y)`; entries in `[0, 1]` with a
/// per-pixel sum of at most one.
#[derive(Debug, Clone, PartialEq)]
pub struct AbundanceMap {
    width: usize,
    height: usize,
    classes: usize,
    data: Vec<f64>,
}

impl AbundanceMap {
    pub fn new(width: usize, height: usize, classes: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != width * height * classes {
            return Err(Error::dim(format!(
                "abundance map {width}x{height}x{classes} needs {} values, got {}",
                width * height * classes,
                data.len()
            )));
        }
        if classes == 0 {
            return Err(Error::validation("abundance map needs at least one class"));
        }
        for (p, px) in data.chunks_exact(classes).enumerate() {
            if px.iter().any(|a| !a.is_finite() || *a < 0.0 || *a > 1.0) {
                return Err(Error::validation(format!("abundance out of [0, 1] at pixel {p}")));
            }
            if px.iter().sum::<f64>() > 1.0 + 1e-9 {
                return Err(Error::validation(format!("abundances at pixel {p} sum above one")));
            }
        }
        Ok(Self { width, height, classes, data })
    }

    /// One-hot abundances from a label map.
    pub fn one_hot(labels: &LabelMap) -> Self {
        let k = labels.classes();
        let mut data = vec![0.0; labels.labels().len() * k];
        for (p, &l) in labels.labels().iter().enumerate() {
            data[p * k + l as usize] = 1.0;
        }
        Self { width: labels.width(), height: labels.height(), classes: k, data }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn pixel(&self, p: usize) -> &[f64] {
        &self.data[p * self.classes..(p + 1) * self.classes]
    }

    /// Label of the largest abundance (lowest index on ties).
    pub fn dominant_labels(&self) -> Vec<u16> {
        self.data
            .chunks_exact(self.classes)
            .map(|px| {
                let mut best = 0;
                for (k, &a) in px.iter().enumerate() {
                    if a > px[best] {
                        best = k;
                    }
                }
                best as u16
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn label_validation() {
        let names = LabelMap::default_names(2);
        assert!(LabelMap::new(2, 1, vec![0, 1], names.clone()).is_ok());
        assert!(LabelMap::new(2, 1, vec![0, 2], names.clone()).is_err());
        assert!(LabelMap::new(3, 1, vec![0, 1], names).is_err());
    }

    #[test]
    fn abundance_validation() {
        assert!(AbundanceMap::new(1, 1, 2, vec![0.5, 0.5]).is_ok());
        assert!(AbundanceMap::new(1, 1, 2, vec![0.6, 0.5]).is_err());
        assert!(AbundanceMap::new(1, 1, 2, vec![-0.1, 0.5]).is_err());
        let lm = LabelMap::new(2, 1, vec![1, 0], LabelMap::default_names(3)).unwrap();
        let oh = AbundanceMap::one_hot(&lm);
        assert_eq!(oh.pixel(0), &[0.0, 1.0, 0.0]);
        assert_eq!(oh.dominant_labels(), vec![1, 0]);
    }
}
