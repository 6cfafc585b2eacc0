//! Fisher vector aggregation and its per-descriptor point-indexed
//! decomposition.
//!
//! Only the gradient with respect to the Gaussian means is kept:
//!
//! ```text
//! G_k = 1/N * sum_x gamma_x(k) * (x - mu_k) / (sigma_k * sqrt(w_k))
//! ```
//!
//! A point-indexed triplet `(r, gamma_x(r) / sqrt(w_r), (x - mu_r) / sigma_r)`
//! is the contribution of one descriptor to block `r` under hard assignment.

use super::{DescriptorSet, DiagonalGmm};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalization {
    Raw,
    /// Signed square root followed by unit L2 norm.
    PowerL2,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FisherVector {
    values: Vec<f64>,
    components: usize,
    dim: usize,
    normalization: Normalization,
}

impl FisherVector {
    pub fn from_raw(values: Vec<f64>, components: usize, dim: usize) -> Result<Self> {
        if values.len() != components * dim {
            return Err(Error::LengthMismatch {
                expected: components * dim,
                actual: values.len(),
            });
        }
        Ok(FisherVector {
            values,
            components,
            dim,
            normalization: Normalization::Raw,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn normalization(&self) -> Normalization {
        self.normalization
    }

    pub fn block(&self, k: usize) -> &[f64] {
        &self.values[k * self.dim..(k + 1) * self.dim]
    }

    /// Applies power and L2 normalization. An all-zero vector stays zero.
    pub fn power_l2(mut self) -> Self {
        if self.normalization == Normalization::PowerL2 {
            return self;
        }
        for v in &mut self.values {
            *v = v.signum() * v.abs().sqrt();
        }
        let norm = self.values.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            for v in &mut self.values {
                *v /= norm;
            }
        }
        self.normalization = Normalization::PowerL2;
        self
    }
}

/// Aggregates a descriptor set into a Fisher vector.
pub fn compute_fv(gmm: &DiagonalGmm, set: &DescriptorSet, normalize: bool) -> Result<FisherVector> {
    let (k, d) = (gmm.components(), gmm.dim());
    if set.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            actual: set.dim(),
        });
    }
    if set.is_empty() {
        return Err(Error::EmptySet(set.source_id().to_string()));
    }
    let scale = 1.0 / set.len() as f64;
    let inv_sqrt_w: Vec<f64> = gmm.weights().iter().map(|w| 1.0 / w.sqrt()).collect();
    let mut values = vec![0.0; k * d];
    let mut gamma = Vec::with_capacity(k);
    for x in set.rows() {
        gmm.posteriors_into(x, &mut gamma);
        for c in 0..k {
            if gamma[c] == 0.0 {
                continue;
            }
            let coef = gamma[c] * inv_sqrt_w[c] * scale;
            let block = &mut values[c * d..(c + 1) * d];
            for (((b, v), m), is) in block.iter_mut().zip(x).zip(gmm.mean(c)).zip(gmm.inv_std(c)) {
                *b += coef * (v - m) * is;
            }
        }
    }
    let fv = FisherVector::from_raw(values, k, d)?;
    Ok(if normalize { fv.power_l2() } else { fv })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointIndexedTriplet {
    /// Gaussian with the strongest soft assignment.
    pub gaussian: usize,
    /// gamma_x(r) / sqrt(w_r).
    pub coefficient: f64,
    /// (x - mu_r) / sigma_r.
    pub residual: Vec<f64>,
}

/// Index of the largest entry; ties go to the lowest index.
pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

pub fn point_index(gmm: &DiagonalGmm, x: &[f64]) -> Result<PointIndexedTriplet> {
    let gamma = gmm.posteriors(x)?;
    Ok(triplet_from_posteriors(gmm, x, &gamma))
}

pub(crate) fn triplet_from_posteriors(gmm: &DiagonalGmm, x: &[f64], gamma: &[f64]) -> PointIndexedTriplet {
    let r = argmax(gamma);
    let residual = x
        .iter()
        .zip(gmm.mean(r))
        .zip(gmm.inv_std(r))
        .map(|((v, m), is)| (v - m) * is)
        .collect();
    PointIndexedTriplet {
        gaussian: r,
        coefficient: gamma[r] / gmm.weights()[r].sqrt(),
        residual,
    }
}

/// Sums `(1/N) * coefficient * residual` into block `r` of each triplet.
pub fn reconstruct_hard_fv(
    triplets: &[PointIndexedTriplet],
    components: usize,
    dim: usize,
    count: usize,
) -> Result<FisherVector> {
    let mut values = vec![0.0; components * dim];
    let scale = if count == 0 { 0.0 } else { 1.0 / count as f64 };
    for t in triplets {
        if t.gaussian >= components {
            return Err(Error::IndexOutOfRange {
                index: t.gaussian,
                limit: components,
            });
        }
        if t.residual.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: t.residual.len(),
            });
        }
        let block = &mut values[t.gaussian * dim..(t.gaussian + 1) * dim];
        for (b, r) in block.iter_mut().zip(&t.residual) {
            *b += scale * t.coefficient * r;
        }
    }
    FisherVector::from_raw(values, components, dim)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn unit_gmm(dim: usize) -> DiagonalGmm {
        DiagonalGmm::new(vec![1.0], vec![0.0; dim], vec![1.0; dim]).unwrap()
    }

    #[test]
    fn zero_residual_gives_zero_fv() {
        let g = DiagonalGmm::new(vec![1.0], vec![2.0, -1.0], vec![0.5, 3.0]).unwrap();
        let set = DescriptorSet::from_rows("s", &[vec![2.0, -1.0], vec![2.0, -1.0]]).unwrap();
        let fv = compute_fv(&g, &set, false).unwrap();
        assert!(fv.values().iter().all(|&v| v == 0.0));
        // Normalizing an all-zero vector keeps it zero.
        let n = compute_fv(&g, &set, true).unwrap();
        assert!(n.values().iter().all(|&v| v == 0.0));
        assert_eq!(n.normalization(), Normalization::PowerL2);
    }

    #[test]
    fn unit_model_single_point_is_residual() {
        let set = DescriptorSet::from_rows("s", &[vec![1.5, -2.0]]).unwrap();
        let fv = compute_fv(&unit_gmm(2), &set, false).unwrap();
        assert_eq!(fv.values(), &[1.5, -2.0]);
    }

    #[test]
    fn normalized_fv_has_unit_norm() {
        let g = DiagonalGmm::new(vec![0.3, 0.7], vec![0.0, 0.0, 1.0, 1.0], vec![1.0, 2.0, 0.5, 1.0]).unwrap();
        let set = DescriptorSet::from_rows("s", &[vec![0.2, 3.0], vec![-1.0, 0.5]]).unwrap();
        let fv = compute_fv(&g, &set, true).unwrap();
        let norm: f64 = fv.values().iter().map(|v| v * v).sum::<f64>().sqrt();
        assert_abs_diff_eq!(norm, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn empty_set_is_an_error() {
        let set = DescriptorSet::empty("s", 2);
        assert!(matches!(compute_fv(&unit_gmm(2), &set, false), Err(Error::EmptySet(_))));
    }

    #[test]
    fn identity_triplet() {
        let t = point_index(&unit_gmm(2), &[1.0, 2.0]).unwrap();
        assert_eq!(t.gaussian, 0);
        assert_eq!(t.coefficient, 1.0);
        assert_eq!(t.residual, vec![1.0, 2.0]);
    }

    #[test]
    fn dominant_component_is_selected() {
        let g = DiagonalGmm::new(
            vec![0.25, 0.25, 0.5],
            vec![0.0, 0.0, 50.0, 50.0, -50.0, 50.0],
            vec![1.0; 6],
        )
        .unwrap();
        assert_eq!(point_index(&g, &[50.0, 50.0]).unwrap().gaussian, 1);
        assert_eq!(point_index(&g, &[-50.0, 50.0]).unwrap().gaussian, 2);
    }

    #[test]
    fn argmax_ties_go_low() {
        assert_eq!(argmax(&[0.5, 0.5]), 0);
        assert_eq!(argmax(&[0.1, 0.4, 0.4]), 1);
    }

    #[test]
    fn reconstruct_edge_cases() {
        let empty = reconstruct_hard_fv(&[], 3, 2, 5).unwrap();
        assert!(empty.values().iter().all(|&v| v == 0.0));
        let t = PointIndexedTriplet {
            gaussian: 0,
            coefficient: 1.0,
            residual: vec![4.0, -1.0],
        };
        let fv = reconstruct_hard_fv(std::slice::from_ref(&t), 2, 2, 1).unwrap();
        assert_eq!(fv.values(), &[4.0, -1.0, 0.0, 0.0]);
        let bad = PointIndexedTriplet { gaussian: 2, ..t };
        assert!(matches!(
            reconstruct_hard_fv(&[bad], 2, 2, 1),
            Err(Error::IndexOutOfRange { .. })
        ));
    }
}
