//! Principal component projection of local descriptors.

use nalgebra::{DMatrix, SymmetricEigen};

use super::DescriptorSet;
use crate::error::{Error, Result};

const ORTHONORMAL_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct PcaModel {
    mean: Vec<f64>,
    /// `d_out x d_in`, row-major; rows are the principal directions.
    basis: Vec<f64>,
    d_in: usize,
    d_out: usize,
}

impl PcaModel {
    pub fn new(mean: Vec<f64>, basis: Vec<f64>, d_out: usize) -> Result<Self> {
        let d_in = mean.len();
        if d_in == 0 || d_out == 0 || d_out > d_in {
            return Err(Error::InvalidConfig(format!(
                "PCA dimensions d_in={d_in}, d_out={d_out} are invalid"
            )));
        }
        if basis.len() != d_in * d_out {
            return Err(Error::LengthMismatch {
                expected: d_in * d_out,
                actual: basis.len(),
            });
        }
        if mean.iter().chain(&basis).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("PCA model"));
        }
        let model = PcaModel {
            mean,
            basis,
            d_in,
            d_out,
        };
        for i in 0..d_out {
            for j in 0..d_out {
                let dot: f64 = model
                    .direction(i)
                    .iter()
                    .zip(model.direction(j))
                    .map(|(a, b)| a * b)
                    .sum();
                let target = if i == j { 1.0 } else { 0.0 };
                if (dot - target).abs() > ORTHONORMAL_TOL {
                    return Err(Error::InvalidConfig("PCA basis rows are not orthonormal".into()));
                }
            }
        }
        Ok(model)
    }

    /// Identity projection with zero mean.
    pub fn identity(dim: usize) -> Self {
        let mut basis = vec![0.0; dim * dim];
        for i in 0..dim {
            basis[i * dim + i] = 1.0;
        }
        PcaModel {
            mean: vec![0.0; dim],
            basis,
            d_in: dim,
            d_out: dim,
        }
    }

    pub fn d_in(&self) -> usize {
        self.d_in
    }

    pub fn d_out(&self) -> usize {
        self.d_out
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn basis(&self) -> &[f64] {
        &self.basis
    }

    pub fn direction(&self, i: usize) -> &[f64] {
        &self.basis[i * self.d_in..(i + 1) * self.d_in]
    }

    pub fn project_into(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        for i in 0..self.d_out {
            let dot = self
                .direction(i)
                .iter()
                .zip(x.iter().zip(&self.mean))
                .map(|(b, (v, m))| b * (v - m))
                .sum();
            out.push(dot);
        }
    }

    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.d_out);
        self.project_into(x, &mut out);
        out
    }

    pub fn apply(&self, set: &DescriptorSet) -> Result<DescriptorSet> {
        if set.dim() != self.d_in {
            return Err(Error::DimensionMismatch {
                expected: self.d_in,
                actual: set.dim(),
            });
        }
        let mut data = Vec::with_capacity(set.len() * self.d_out);
        let mut row = Vec::with_capacity(self.d_out);
        for x in set.rows() {
            self.project_into(x, &mut row);
            data.extend_from_slice(&row);
        }
        DescriptorSet::new(set.source_id(), self.d_out, data)
    }
}

/// Fits a PCA basis spanning the `d_out` directions of largest sample
/// variance. Eigenvectors are sign-normalized so that their largest-magnitude
/// coordinate is positive.
pub fn fit_pca(corpus: &[DescriptorSet], d_out: usize) -> Result<PcaModel> {
    let d_in = corpus
        .iter()
        .map(DescriptorSet::dim)
        .next()
        .ok_or(Error::InsufficientData {
            needed: d_out.max(1),
            available: 0,
        })?;
    if let Some(bad) = corpus.iter().find(|s| s.dim() != d_in) {
        return Err(Error::DimensionMismatch {
            expected: d_in,
            actual: bad.dim(),
        });
    }
    if d_out == 0 || d_out > d_in {
        return Err(Error::InvalidConfig(format!(
            "PCA output dimension {d_out} must be in 1..={d_in}"
        )));
    }
    let n: usize = corpus.iter().map(DescriptorSet::len).sum();
    if n < d_out || n == 0 {
        return Err(Error::InsufficientData {
            needed: d_out,
            available: n,
        });
    }

    let mut mean = vec![0.0; d_in];
    for x in corpus.iter().flat_map(DescriptorSet::rows) {
        for (m, v) in mean.iter_mut().zip(x) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }

    let mut cov = DMatrix::<f64>::zeros(d_in, d_in);
    let mut centered = vec![0.0; d_in];
    for x in corpus.iter().flat_map(DescriptorSet::rows) {
        for ((c, v), m) in centered.iter_mut().zip(x).zip(&mean) {
            *c = v - m;
        }
        for i in 0..d_in {
            for j in i..d_in {
                cov[(i, j)] += centered[i] * centered[j];
            }
        }
    }
    for i in 0..d_in {
        for j in i..d_in {
            let v = cov[(i, j)] / n as f64;
            cov[(i, j)] = v;
            cov[(j, i)] = v;
        }
    }

    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..d_in).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });

    let mut basis = Vec::with_capacity(d_out * d_in);
    for &col in order.iter().take(d_out) {
        let v = eig.eigenvectors.column(col);
        let mut pivot = 0;
        for i in 1..d_in {
            if v[i].abs() > v[pivot].abs() {
                pivot = i;
            }
        }
        let sign = if v[pivot] < 0.0 { -1.0 } else { 1.0 };
        let norm = v.norm();
        basis.extend(v.iter().map(|x| sign * x / norm));
    }
    PcaModel::new(mean, basis, d_out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn set(rows: &[Vec<f64>]) -> DescriptorSet {
        DescriptorSet::from_rows("t", rows).unwrap()
    }

    #[test]
    fn rank_one_line_recovers_direction() {
        let rows: Vec<Vec<f64>> = (-5..=5).map(|t| vec![t as f64, 2.0 * t as f64]).collect();
        let pca = fit_pca(&[set(&rows)], 1).unwrap();
        let s5 = 5f64.sqrt();
        let dir = pca.direction(0);
        // Sign is normalized so the largest coordinate is positive.
        assert_abs_diff_eq!(dir[0], 1.0 / s5, epsilon = 1e-9);
        assert_abs_diff_eq!(dir[1], 2.0 / s5, epsilon = 1e-9);
    }

    #[test]
    #[allow(clippy::needless_range_loop)]
    fn full_rank_projection_is_lossless() {
        let rows: Vec<Vec<f64>> = (0..40)
            .map(|i| {
                let t = i as f64;
                vec![(t * 0.7).sin(), (t * 1.3).cos(), (t * 0.2).sin() * 2.0]
            })
            .collect();
        let data = set(&rows);
        let pca = fit_pca(std::slice::from_ref(&data), 3).unwrap();
        for x in data.rows() {
            let y = pca.project(x);
            for j in 0..3 {
                let recon: f64 = (0..3).map(|i| pca.direction(i)[j] * y[i]).sum::<f64>() + pca.mean()[j];
                assert_abs_diff_eq!(recon, x[j], epsilon = 1e-6);
            }
        }
    }

    #[test]
    fn projecting_the_mean_gives_zero() {
        let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64, (i * i) as f64 * 0.1, 1.0]).collect();
        let pca = fit_pca(&[set(&rows)], 2).unwrap();
        for v in pca.project(pca.mean()) {
            assert_abs_diff_eq!(v, 0.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn identity_projection_is_noop() {
        let s = set(&[vec![1.0, -2.0], vec![3.5, 0.0]]);
        assert_eq!(PcaModel::identity(2).apply(&s).unwrap().as_slice(), s.as_slice());
    }

    #[test]
    fn error_paths() {
        let s = set(&[vec![1.0, 2.0]]);
        assert!(matches!(
            fit_pca(std::slice::from_ref(&s), 2),
            Err(Error::InsufficientData { .. })
        ));
        let other = set(&[vec![1.0, 2.0, 3.0]]);
        assert!(matches!(
            fit_pca(&[s.clone(), other.clone()], 1),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            PcaModel::identity(2).apply(&other),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
