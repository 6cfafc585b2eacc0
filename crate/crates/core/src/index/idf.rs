use std::collections::BTreeMap;

use super::InvertedIndex;
use crate::error::{Error, Result};
use crate::io::round_f32;

/// Power applied to bucket weights in both the TF-IDF numerator and the
/// per-scene normalizer.
pub const WEIGHT_EXPONENT: i32 = 2;

/// Per-bucket weights and the per-scene sums `sum_l b_v[l] * w_l^2` they
/// induce. Unobserved buckets weigh 0.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct IdfWeights {
    weights: BTreeMap<u64, f64>,
    scene_norms: Vec<f64>,
}

impl IdfWeights {
    /// Weights keyed by filter bit position; norms are computed against
    /// `index`.
    pub fn new(index: &InvertedIndex, weights: BTreeMap<u64, f64>) -> Result<Self> {
        if weights.values().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::NonFinite("bucket weights must be finite and non-negative"));
        }
        let mut scene_norms = vec![0.0; index.scene_count()];
        for (bit, list) in index.postings() {
            let w2 = weights.get(&bit).copied().unwrap_or(0.0).powi(WEIGHT_EXPONENT);
            for &v in list {
                scene_norms[v as usize] += w2;
            }
        }
        Ok(IdfWeights { weights, scene_norms })
    }

    /// Weight 1 for every observed bucket.
    pub fn uniform(index: &InvertedIndex) -> Self {
        let weights = index.postings().map(|(bit, _)| (bit, 1.0)).collect();
        IdfWeights::new(index, weights).expect("unit weights are valid")
    }

    pub fn weight(&self, bit: u64) -> f64 {
        self.weights.get(&bit).copied().unwrap_or(0.0)
    }

    pub fn weights(&self) -> &BTreeMap<u64, f64> {
        &self.weights
    }

    /// `sum_l b_v[l] * w_l^2` for scene `ordinal`.
    pub fn scene_norm(&self, ordinal: u32) -> f64 {
        self.scene_norms[ordinal as usize]
    }

    pub(crate) fn scene_norms(&self) -> &[f64] {
        &self.scene_norms
    }
}

/// Smoothed IDF `ln((V + 1) / (df + 1)) + 1`, stored at f32 precision so the
/// weights survive the index file unchanged.
pub(crate) fn smoothed_idf(index: &InvertedIndex) -> IdfWeights {
    let v = index.scene_count() as f64;
    let weights = index
        .postings()
        .map(|(bit, list)| (bit, round_f32(((v + 1.0) / (list.len() as f64 + 1.0)).ln() + 1.0)))
        .collect();
    IdfWeights::new(index, weights).expect("smoothed idf is finite and positive")
}

/// IDF weights of a sealed index.
pub fn compute_idf(index: &InvertedIndex) -> IdfWeights {
    smoothed_idf(index)
}
