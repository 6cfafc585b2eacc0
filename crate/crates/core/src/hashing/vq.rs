use rand::Rng;
use rand_distr::{Normal, StandardNormal};
use rayon::prelude::*;

use super::{BucketId, HashBank, HashConfig, HashFamily, HashFunction};
use crate::error::{Error, Result};
use crate::io::round_f32;
use crate::kmeans;
use crate::rng::stream_rng;

/// Lloyd iteration cap for quantizer training.
pub const VQ_MAX_ITERS: usize = 50;

const VQ_STREAM: u64 = 0x5651_0000_0000;
/// Pools larger than this many points per centroid are subsampled.
const MAX_POINTS_PER_CENTROID: usize = 4;
/// Jitter added to centroids sampled with replacement, relative to the
/// pool's per-dimension standard deviation.
const FALLBACK_JITTER: f64 = 1e-3;

/// A vector quantizer with `2^n` centroids.
#[derive(Debug, Clone, PartialEq)]
pub struct VqHash {
    centroids: Vec<f64>,
    dim: usize,
    bits: u8,
}

impl VqHash {
    pub fn new(centroids: Vec<f64>, dim: usize, bits: u8) -> Result<Self> {
        let expected = (1usize << bits) * dim;
        if dim == 0 || centroids.len() != expected {
            return Err(Error::LengthMismatch {
                expected,
                actual: centroids.len(),
            });
        }
        if centroids.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("centroids"));
        }
        Ok(VqHash { centroids, dim, bits })
    }

    pub fn centroids(&self) -> &[f64] {
        &self.centroids
    }

    pub fn centroid(&self, i: usize) -> &[f64] {
        &self.centroids[i * self.dim..(i + 1) * self.dim]
    }

    pub fn bits(&self) -> u8 {
        self.bits
    }

    pub fn input_dim(&self) -> usize {
        self.dim
    }

    pub(crate) fn hash_unchecked(&self, v: &[f64]) -> BucketId {
        BucketId(kmeans::nearest(&self.centroids, self.dim, v).0 as u32)
    }
}

/// Per-function outcome of quantizer training.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct VqTrainingReport {
    /// Training points available to each function.
    pub pool_sizes: Vec<usize>,
    /// Functions whose pool held fewer than `2^n` points; their centroids
    /// were sampled with replacement plus jitter (or drawn from a standard
    /// normal when the pool was empty).
    pub fallback: Vec<usize>,
}

fn train_one(pool: &[f64], dim: usize, bits: u8, seed: u64, m: usize) -> (Vec<f64>, bool) {
    let k = 1usize << bits;
    let n = pool.len() / dim;
    let mut rng = stream_rng(seed, VQ_STREAM | m as u64, 0);
    let (mut centroids, fallback) = if n >= k {
        let cap = k * MAX_POINTS_PER_CENTROID;
        let sample: Vec<f64>;
        let data = if n > cap {
            // Deterministic subsample without replacement (partial Fisher-Yates).
            let mut order: Vec<usize> = (0..n).collect();
            for i in 0..cap {
                let j = rng.random_range(i..n);
                order.swap(i, j);
            }
            let mut chosen = order[..cap].to_vec();
            chosen.sort_unstable();
            sample = chosen
                .iter()
                .flat_map(|&i| pool[i * dim..(i + 1) * dim].iter().copied())
                .collect();
            &sample[..]
        } else {
            pool
        };
        let mut c = kmeans::plus_plus_init(data, dim, k, &mut rng);
        kmeans::lloyd(data, dim, &mut c, VQ_MAX_ITERS);
        (c, false)
    } else if n > 0 {
        let mut mean = vec![0.0; dim];
        for x in pool.chunks_exact(dim) {
            mean.iter_mut().zip(x).for_each(|(m, v)| *m += v / n as f64);
        }
        let mut std = vec![0.0; dim];
        for x in pool.chunks_exact(dim) {
            std.iter_mut()
                .zip(x.iter().zip(&mean))
                .for_each(|(s, (v, m))| *s += (v - m) * (v - m) / n as f64);
        }
        let scales: Vec<f64> = std
            .iter()
            .map(|v| FALLBACK_JITTER * if *v > 0.0 { v.sqrt() } else { 1.0 })
            .collect();
        let mut c = Vec::with_capacity(k * dim);
        for _ in 0..k {
            let i = rng.random_range(0..n);
            for (j, scale) in scales.iter().enumerate() {
                let jitter = Normal::new(0.0, *scale).expect("positive scale");
                c.push(pool[i * dim + j] + rng.sample(jitter));
            }
        }
        (c, true)
    } else {
        let c = (0..k * dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        (c, true)
    };
    for v in &mut centroids {
        *v = round_f32(*v);
    }
    (centroids, fallback)
}

/// Trains one k-means quantizer per hash function.
///
/// `pools` holds row-major training vectors of dimension `input_dim`: either
/// one pool per function (function `m` trains on `pools[m]`) or a single pool
/// shared by all functions. Each function is seeded by `(seed, m)`.
pub fn train_vq_bank(pools: &[Vec<f64>], config: &HashConfig) -> Result<(HashBank, VqTrainingReport)> {
    config.validate()?;
    if config.family != HashFamily::Vq {
        return Err(Error::UnsupportedFamily(format!(
            "{} hashes are sampled, not trained",
            config.family
        )));
    }
    if pools.len() != config.functions && pools.len() != 1 {
        return Err(Error::LengthMismatch {
            expected: config.functions,
            actual: pools.len(),
        });
    }
    let dim = config.input_dim;
    for pool in pools {
        if pool.len() % dim != 0 {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: pool.len() % dim,
            });
        }
        if pool.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("quantizer training pool"));
        }
    }
    let trained: Vec<(Vec<f64>, bool)> = (0..config.functions)
        .into_par_iter()
        .map(|m| {
            let pool = if pools.len() == 1 { &pools[0] } else { &pools[m] };
            train_one(pool, dim, config.bits, config.seed, m)
        })
        .collect();

    let mut report = VqTrainingReport::default();
    let mut functions = Vec::with_capacity(config.functions);
    for (m, (centroids, fallback)) in trained.into_iter().enumerate() {
        let pool = if pools.len() == 1 { &pools[0] } else { &pools[m] };
        report.pool_sizes.push(pool.len() / dim);
        if fallback {
            report.fallback.push(m);
        }
        functions.push(HashFunction::Vq(VqHash::new(centroids, dim, config.bits)?));
    }
    if !report.fallback.is_empty() {
        log::warn!(
            "{} of {} quantizers had fewer than {} training points and used sampled centroids",
            report.fallback.len(),
            config.functions,
            config.buckets()
        );
    }
    Ok((HashBank::new(*config, functions)?, report))
}
