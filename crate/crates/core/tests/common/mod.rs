//! Shared fixtures and brute-force oracles for integration tests.
#![allow(dead_code, clippy::too_many_arguments, clippy::needless_range_loop)]

use scenebloom::embedding::{DescriptorSet, DiagonalGmm, GmmOptions};
use scenebloom::eval::{gen_synthetic, SyntheticDataset, SyntheticSpec};
use scenebloom::filter::FilterConfig;
use scenebloom::hashing::{BucketId, HashDomain, HashFamily};
use scenebloom::index::{InvertedIndex, Pipeline, ScoringConfig, ScoringMode};
use scenebloom::models::{train_models, Models, TrainingOptions};

pub fn small_dataset(scenes: usize, seed: u64) -> SyntheticDataset {
    gen_synthetic(&SyntheticSpec {
        scene_count: scenes,
        frames_per_scene: 6,
        descriptors_per_frame: 16,
        dim: 6,
        query_count: 10,
        noise_sigma: 0.1,
        seed,
        training_frames: 200,
        ..SyntheticSpec::default()
    })
    .unwrap()
}

/// Trains a model bundle with `K = M = components` and PCA to `pca_dim`.
pub fn models_for(
    data: &SyntheticDataset,
    pipeline: Pipeline,
    family: HashFamily,
    domain: HashDomain,
    components: usize,
    pca_dim: usize,
    bits: u8,
    seed: u64,
) -> Models {
    let functions = if domain == HashDomain::Gbh { components } else { 6 };
    let options = TrainingOptions {
        pipeline,
        pca_dim,
        gmm: GmmOptions {
            components,
            seed,
            max_iters: 30,
            tol: 1e-6,
        },
        family,
        domain,
        functions,
        bits,
        hash_seed: seed,
    };
    train_models(&data.training, &options).unwrap().models
}

pub fn partitioned(models: &Models) -> FilterConfig {
    let c = models.bank().config();
    FilterConfig::partitioned(c.functions, c.buckets())
}

/// Log-density of `x` under component `k`, written out directly.
pub fn log_density(gmm: &DiagonalGmm, k: usize, x: &[f64]) -> f64 {
    let mut s = gmm.weights()[k].ln();
    for j in 0..x.len() {
        let var = gmm.variance(k)[j];
        let diff = x[j] - gmm.mean(k)[j];
        s += -0.5 * (2.0 * std::f64::consts::PI * var).ln() - diff * diff / (2.0 * var);
    }
    s
}

/// Posteriors from explicit densities, normalized with a max shift.
pub fn oracle_posteriors(gmm: &DiagonalGmm, x: &[f64]) -> Vec<f64> {
    let logs: Vec<f64> = (0..gmm.components()).map(|k| log_density(gmm, k, x)).collect();
    let top = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = logs.iter().map(|l| (l - top).exp()).collect();
    let z: f64 = e.iter().sum();
    e.into_iter().map(|v| v / z).collect()
}

pub fn first_max(v: &[f64]) -> usize {
    let mut best = 0;
    for i in 1..v.len() {
        if v[i] > v[best] {
            best = i;
        }
    }
    best
}

/// Raw (unnormalized) mean-gradient Fisher vector, written out directly.
pub fn oracle_fv(gmm: &DiagonalGmm, x: &DescriptorSet) -> Vec<f64> {
    let (k, d) = (gmm.components(), gmm.dim());
    let n = x.len() as f64;
    let mut fv = vec![0.0; k * d];
    for row in x.rows() {
        let g = oracle_posteriors(gmm, row);
        for c in 0..k {
            for j in 0..d {
                let sigma = gmm.variance(c)[j].sqrt();
                fv[c * d + j] += g[c] * (row[j] - gmm.mean(c)[j]) / (sigma * gmm.weights()[c].sqrt()) / n;
            }
        }
    }
    fv
}

pub fn power_l2(mut v: Vec<f64>) -> Vec<f64> {
    for x in &mut v {
        *x = x.signum() * x.abs().sqrt();
    }
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    v
}

/// Filter bit positions probed by a descriptor set, recomputed from the
/// public model APIs.
pub fn oracle_probes(models: &Models, pipeline: Pipeline, filter: &FilterConfig, set: &DescriptorSet) -> Vec<u64> {
    let (pca, gmm, bank) = (models.pca(), models.gmm(), models.bank());
    let (k, d) = (gmm.components(), gmm.dim());
    let bit = |m: usize, b: BucketId| filter.bit_position(m, b).unwrap();
    if set.is_empty() {
        return Vec::new();
    }
    match pipeline {
        Pipeline::BfGd => {
            let projected: Vec<Vec<f64>> = set.rows().map(|r| pca.project(r)).collect();
            let fv = power_l2(oracle_fv(gmm, &DescriptorSet::from_rows("", &projected).unwrap()));
            (0..bank.len())
                .map(|m| {
                    let input = match bank.config().domain {
                        HashDomain::Vbh => &fv[..],
                        HashDomain::Gbh => &fv[m * d..(m + 1) * d],
                    };
                    bit(m, bank.hash(m, input).unwrap())
                })
                .collect()
        }
        Pipeline::BfPi => set
            .rows()
            .map(|r| {
                let y = pca.project(r);
                let g = oracle_posteriors(gmm, &y);
                let c = first_max(&g);
                assert!(c < k);
                let residual: Vec<f64> = (0..d)
                    .map(|j| (y[j] - gmm.mean(c)[j]) / gmm.variance(c)[j].sqrt())
                    .collect();
                bit(c, bank.hash(c, &residual).unwrap())
            })
            .collect(),
    }
}

/// Dense per-scene bit arrays built from oracle probes.
pub fn oracle_filters(
    models: &Models,
    pipeline: Pipeline,
    filter: &FilterConfig,
    scenes: &[scenebloom::index::Scene],
) -> Vec<Vec<bool>> {
    scenes
        .iter()
        .map(|s| {
            let mut bits = vec![false; filter.bit_budget() as usize];
            for frame in &s.frames {
                for b in oracle_probes(models, pipeline, filter, frame) {
                    bits[b as usize] = true;
                }
            }
            bits
        })
        .collect()
}

/// Smoothed IDF recomputed from dense filters, at f32 precision.
pub fn oracle_idf(filters: &[Vec<bool>]) -> Vec<f64> {
    let v = filters.len() as f64;
    (0..filters[0].len())
        .map(|l| {
            let df = filters.iter().filter(|f| f[l]).count();
            if df == 0 {
                0.0
            } else {
                f64::from((((v + 1.0) / (df as f64 + 1.0)).ln() + 1.0) as f32)
            }
        })
        .collect()
}

/// Linear scan over every scene's full bit array.
pub fn dense_scores(filters: &[Vec<bool>], weights: &[f64], scoring: &ScoringConfig, probes: &[u64]) -> Vec<f64> {
    filters
        .iter()
        .map(|f| match scoring.mode {
            ScoringMode::HashMatches => probes.iter().filter(|&&p| f[p as usize]).count() as f64,
            ScoringMode::TfIdf => {
                let num: f64 = probes
                    .iter()
                    .filter(|&&p| f[p as usize])
                    .map(|&p| weights[p as usize] * weights[p as usize])
                    .sum();
                let denom: f64 = (0..f.len()).filter(|&l| f[l]).map(|l| weights[l] * weights[l]).sum();
                if num == 0.0 {
                    0.0
                } else {
                    num / denom.powf(scoring.alpha)
                }
            }
        })
        .collect()
}

/// Scores from the inverted index for every scene (0 when not retrieved).
pub fn index_scores(result: &scenebloom::index::QueryResult, index: &InvertedIndex) -> Vec<f64> {
    let mut out = vec![0.0; index.scene_count()];
    for h in &result.hits {
        out[h.ordinal as usize] = h.score;
    }
    out
}

pub fn relative_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300)
}
