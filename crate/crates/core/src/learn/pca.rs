use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

use super::dataset::LabeledSpectra;

/// Principal directions of mean-centred rows, largest variance first.
#[derive(Debug, Clone, PartialEq)]
pub struct Pca {
    /// `Q x B`, orthonormal rows; each row's largest-magnitude entry is
    /// positive.
    pub components: Vec<Vec<f64>>,
    /// All `B` covariance eigenvalues, descending.
    pub eigenvalues: Vec<f64>,
    pub mean: Vec<f64>,
}

impl Pca {
    /// Variance captured by the kept components.
    pub fn explained_variance(&self) -> f64 {
        self.eigenvalues[..self.components.len()].iter().sum()
    }
}

/// Eigenvalues below this fraction of the largest count as zero rank.
const RANK_TOL: f64 = 1e-10;

/// Top-`q` principal directions of all rows of `data` (covariance with
/// `1/N` normalization).
pub fn pca_init(data: &LabeledSpectra, q: usize) -> Result<Pca> {
    let (n, b) = (data.len(), data.bands());
    if q == 0 || q > b {
        return Err(Error::validation(format!("PCA needs 1 <= Q <= B, got Q={q}, B={b}")));
    }
    if n == 0 {
        return Err(Error::validation("PCA on empty data"));
    }
    let mut mean = vec![0.0; b];
    for i in 0..n {
        mean.iter_mut().zip(data.row(i)).for_each(|(m, v)| *m += v);
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let mut cov = DMatrix::<f64>::zeros(b, b);
    let mut centred = vec![0.0; b];
    for i in 0..n {
        centred.iter_mut().zip(data.row(i)).zip(&mean).for_each(|((c, v), m)| *c = v - m);
        for r in 0..b {
            let cr = centred[r];
            if cr == 0.0 {
                continue;
            }
            for c in r..b {
                cov[(r, c)] += cr * centred[c];
            }
        }
    }
    for r in 0..b {
        for c in r..b {
            let v = cov[(r, c)] / n as f64;
            cov[(r, c)] = v;
            cov[(c, r)] = v;
        }
    }
    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..b).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i].max(0.0)).collect();
    let rank = eigenvalues.iter().filter(|&&v| v > RANK_TOL * eigenvalues[0].max(f64::MIN_POSITIVE)).count();
    if q > rank {
        return Err(Error::validation(format!("Q={q} exceeds the data rank {rank}")));
    }
    let components = order[..q]
        .iter()
        .map(|&i| {
            let mut row: Vec<f64> = eig.eigenvectors.column(i).iter().copied().collect();
            let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
            row.iter_mut().for_each(|v| *v /= norm);
            let lead = row.iter().copied().fold(0.0f64, |a, v| if v.abs() > a.abs() { v } else { a });
            if lead < 0.0 {
                row.iter_mut().for_each(|v| *v = -*v);
            }
            row
        })
        .collect();
    Ok(Pca { components, eigenvalues, mean })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_one_line() {
        let dir = [2.0, -1.0, 2.0];
        let rows: Vec<Vec<f64>> = (0..9).map(|t| dir.iter().map(|d| d * (t as f64 - 3.0) + 1.0).collect()).collect();
        let d = LabeledSpectra::from_rows(&rows, vec![0; 9], 1).unwrap();
        let p = pca_init(&d, 1).unwrap();
        let expect = [2.0 / 3.0, -1.0 / 3.0, 2.0 / 3.0];
        for (a, e) in p.components[0].iter().zip(expect) {
            assert!((a - e).abs() < 1e-9, "{:?}", p.components);
        }
        assert!(pca_init(&d, 2).is_err());
    }

    #[test]
    fn full_basis_is_orthonormal() {
        let mut r = crate::rng::seeded(4);
        let rows: Vec<Vec<f64>> = (0..20).map(|_| (0..4).map(|_| rand::Rng::random::<f64>(&mut r)).collect()).collect();
        let d = LabeledSpectra::from_rows(&rows, vec![0; 20], 1).unwrap();
        let p = pca_init(&d, 4).unwrap();
        for a in 0..4 {
            for b in 0..4 {
                let dot: f64 = p.components[a].iter().zip(&p.components[b]).map(|(x, y)| x * y).sum();
                assert!((dot - if a == b { 1.0 } else { 0.0 }).abs() < 1e-9);
            }
        }
        assert!(p.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
    }
}
