//! Diagonal-covariance Gaussian mixture model trained with EM.
//!
//! Posteriors are evaluated in the log domain. Training is single-threaded
//! with a fixed reduction order, so a given `(corpus, options)` pair always
//! produces a bit-identical model.

use std::f64::consts::PI;

use super::DescriptorSet;
use crate::error::{Error, Result};
use crate::kmeans;
use crate::rng::stream_rng;

/// Lower bound applied to every per-dimension variance.
pub const VARIANCE_FLOOR: f64 = 1e-6;

/// Allowed decrease of the mean log-likelihood between accepted iterations.
pub const MONOTONICITY_TOL: f64 = 1e-9;

const WEIGHT_SUM_TOL: f64 = 1e-9;
const EMPTY_COMPONENT_MASS: f64 = 1e-10;
const GMM_STREAM: u64 = 0x474d_4d00;

#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalGmm {
    weights: Vec<f64>,
    means: Vec<f64>,
    variances: Vec<f64>,
    dim: usize,
    // Cached: ln w_k - 0.5 * sum_j ln(2 pi var_kj), and 1/var.
    log_norm: Vec<f64>,
    inv_var: Vec<f64>,
    inv_std: Vec<f64>,
}

impl DiagonalGmm {
    pub fn new(weights: Vec<f64>, means: Vec<f64>, variances: Vec<f64>) -> Result<Self> {
        let k = weights.len();
        if k == 0 {
            return Err(Error::InvalidConfig("GMM needs at least one component".into()));
        }
        if means.is_empty() || !means.len().is_multiple_of(k) {
            return Err(Error::LengthMismatch {
                expected: k * (means.len() / k).max(1),
                actual: means.len(),
            });
        }
        let dim = means.len() / k;
        if variances.len() != k * dim {
            return Err(Error::LengthMismatch {
                expected: k * dim,
                actual: variances.len(),
            });
        }
        if weights.iter().chain(&means).chain(&variances).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("GMM parameters"));
        }
        if weights.iter().any(|&w| w <= 0.0) {
            return Err(Error::InvalidConfig("GMM weights must be positive".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::InvalidConfig(format!("GMM weights sum to {total}, not 1")));
        }
        if variances.iter().any(|&v| v < VARIANCE_FLOOR) {
            return Err(Error::InvalidConfig(format!(
                "GMM variances must be at least {VARIANCE_FLOOR}"
            )));
        }

        let inv_var: Vec<f64> = variances.iter().map(|v| 1.0 / v).collect();
        let inv_std: Vec<f64> = variances.iter().map(|v| 1.0 / v.sqrt()).collect();
        let log_norm = (0..k)
            .map(|c| {
                let log_det: f64 = variances[c * dim..(c + 1) * dim]
                    .iter()
                    .map(|v| (2.0 * PI * v).ln())
                    .sum();
                weights[c].ln() - 0.5 * log_det
            })
            .collect();
        Ok(DiagonalGmm {
            weights,
            means,
            variances,
            dim,
            log_norm,
            inv_var,
            inv_std,
        })
    }

    pub fn components(&self) -> usize {
        self.weights.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn variances(&self) -> &[f64] {
        &self.variances
    }

    pub fn mean(&self, k: usize) -> &[f64] {
        &self.means[k * self.dim..(k + 1) * self.dim]
    }

    pub fn variance(&self, k: usize) -> &[f64] {
        &self.variances[k * self.dim..(k + 1) * self.dim]
    }

    pub(crate) fn inv_std(&self, k: usize) -> &[f64] {
        &self.inv_std[k * self.dim..(k + 1) * self.dim]
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: x.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("descriptor"));
        }
        Ok(())
    }

    /// ln(w_k) + ln N(x; mu_k, var_k) for every component.
    fn log_joint_into(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        for k in 0..self.components() {
            let mu = &self.means[k * self.dim..(k + 1) * self.dim];
            let iv = &self.inv_var[k * self.dim..(k + 1) * self.dim];
            let mahal: f64 = x.iter().zip(mu).zip(iv).map(|((v, m), i)| (v - m) * (v - m) * i).sum();
            out.push(self.log_norm[k] - 0.5 * mahal);
        }
    }

    /// Normalizes `log_joint` in place into posteriors and returns the
    /// log-likelihood of the point.
    fn softmax_in_place(buf: &mut [f64]) -> f64 {
        let max = buf.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut total = 0.0;
        for v in buf.iter_mut() {
            *v = (*v - max).exp();
            total += *v;
        }
        for v in buf.iter_mut() {
            *v /= total;
        }
        max + total.ln()
    }

    pub(crate) fn posteriors_into(&self, x: &[f64], out: &mut Vec<f64>) -> f64 {
        self.log_joint_into(x, out);
        Self::softmax_in_place(out)
    }

    /// Soft-assignment probabilities of `x` to every component.
    pub fn posteriors(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_point(x)?;
        let mut out = Vec::with_capacity(self.components());
        self.posteriors_into(x, &mut out);
        Ok(out)
    }

    pub fn log_likelihood(&self, x: &[f64]) -> Result<f64> {
        self.check_point(x)?;
        let mut buf = Vec::with_capacity(self.components());
        Ok(self.posteriors_into(x, &mut buf))
    }

    /// Mean per-descriptor log-likelihood over a corpus.
    pub fn mean_log_likelihood(&self, corpus: &[DescriptorSet]) -> Result<f64> {
        let mut total = 0.0;
        let mut n = 0usize;
        let mut buf = Vec::with_capacity(self.components());
        for x in corpus.iter().flat_map(DescriptorSet::rows) {
            self.check_point(x)?;
            total += self.posteriors_into(x, &mut buf);
            n += 1;
        }
        if n == 0 {
            return Err(Error::InsufficientData {
                needed: 1,
                available: 0,
            });
        }
        Ok(total / n as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GmmOptions {
    pub components: usize,
    pub seed: u64,
    pub max_iters: usize,
    /// Training stops once an iteration improves the mean log-likelihood by
    /// less than this amount.
    pub tol: f64,
}

impl Default for GmmOptions {
    fn default() -> Self {
        GmmOptions {
            components: 16,
            seed: 0,
            max_iters: 100,
            tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GmmFit {
    pub model: DiagonalGmm,
    /// Mean log-likelihood of the initial model followed by one entry per
    /// accepted EM iteration.
    pub log_likelihood: Vec<f64>,
    pub converged: bool,
    /// Number of times an empty component was re-seeded.
    pub reseeded: usize,
}

struct EStep {
    mean_ll: f64,
    resp: Vec<f64>,
    /// Per-point log-likelihood; the worst-explained point re-seeds empty
    /// components.
    point_ll: Vec<f64>,
}

fn e_step(model: &DiagonalGmm, data: &[f64]) -> EStep {
    let k = model.components();
    let n = data.len() / model.dim;
    let mut resp = Vec::with_capacity(n * k);
    let mut point_ll = Vec::with_capacity(n);
    let mut buf = Vec::with_capacity(k);
    let mut total = 0.0;
    for x in data.chunks_exact(model.dim) {
        let ll = model.posteriors_into(x, &mut buf);
        resp.extend_from_slice(&buf);
        point_ll.push(ll);
        total += ll;
    }
    EStep {
        mean_ll: total / n as f64,
        resp,
        point_ll,
    }
}

/// M-step from a responsibility matrix. `point_ll` ranks points for
/// re-seeding empty components (lowest first).
fn m_step(data: &[f64], dim: usize, k: usize, resp: &[f64], point_ll: &[f64]) -> Result<(DiagonalGmm, usize)> {
    let n = data.len() / dim;
    let mut mass = vec![0.0; k];
    let mut means = vec![0.0; k * dim];
    for (x, r) in data.chunks_exact(dim).zip(resp.chunks_exact(k)) {
        for c in 0..k {
            let g = r[c];
            if g == 0.0 {
                continue;
            }
            mass[c] += g;
            for (m, v) in means[c * dim..(c + 1) * dim].iter_mut().zip(x) {
                *m += g * v;
            }
        }
    }
    for c in 0..k {
        if mass[c] > EMPTY_COMPONENT_MASS {
            for m in &mut means[c * dim..(c + 1) * dim] {
                *m /= mass[c];
            }
        }
    }
    let mut variances = vec![0.0; k * dim];
    for (x, r) in data.chunks_exact(dim).zip(resp.chunks_exact(k)) {
        for c in 0..k {
            let g = r[c];
            if g == 0.0 {
                continue;
            }
            let mu = &means[c * dim..(c + 1) * dim];
            for ((s, v), m) in variances[c * dim..(c + 1) * dim].iter_mut().zip(x).zip(mu) {
                *s += g * (v - m) * (v - m);
            }
        }
    }
    for c in 0..k {
        if mass[c] > EMPTY_COMPONENT_MASS {
            for v in &mut variances[c * dim..(c + 1) * dim] {
                *v = (*v / mass[c]).max(VARIANCE_FLOOR);
            }
        }
    }

    let empty: Vec<usize> = (0..k).filter(|&c| mass[c] <= EMPTY_COMPONENT_MASS).collect();
    if !empty.is_empty() {
        let global = global_variance(data, dim);
        let mut ranked: Vec<usize> = (0..n).collect();
        ranked.sort_by(|&a, &b| {
            point_ll[a]
                .partial_cmp(&point_ll[b])
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.cmp(&b))
        });
        for (&c, &p) in empty.iter().zip(ranked.iter().cycle()) {
            means[c * dim..(c + 1) * dim].copy_from_slice(&data[p * dim..(p + 1) * dim]);
            variances[c * dim..(c + 1) * dim].copy_from_slice(&global);
            mass[c] = 1.0;
        }
    }

    let total: f64 = mass.iter().sum();
    let weights = mass.iter().map(|m| m / total).collect();
    Ok((DiagonalGmm::new(weights, means, variances)?, empty.len()))
}

fn global_variance(data: &[f64], dim: usize) -> Vec<f64> {
    let n = (data.len() / dim) as f64;
    let mut mean = vec![0.0; dim];
    for x in data.chunks_exact(dim) {
        for (m, v) in mean.iter_mut().zip(x) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = vec![0.0; dim];
    for x in data.chunks_exact(dim) {
        for ((s, v), m) in var.iter_mut().zip(x).zip(&mean) {
            *s += (v - m) * (v - m);
        }
    }
    var.iter().map(|s| (s / n).max(VARIANCE_FLOOR)).collect()
}

/// Fits a diagonal GMM with EM, initialized from k-means++ seeds.
///
/// An EM step whose log-likelihood falls by more than [`MONOTONICITY_TOL`]
/// (possible only after variance flooring or re-seeding) is rejected and
/// training stops with the previous model.
pub fn fit_gmm(corpus: &[DescriptorSet], options: &GmmOptions) -> Result<GmmFit> {
    let k = options.components;
    if k == 0 {
        return Err(Error::InvalidConfig("GMM needs at least one component".into()));
    }
    let dim = corpus.first().map(DescriptorSet::dim).ok_or(Error::InsufficientData {
        needed: k,
        available: 0,
    })?;
    let mut data = Vec::new();
    for set in corpus {
        if set.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: set.dim(),
            });
        }
        data.extend_from_slice(set.as_slice());
    }
    if data.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("GMM training corpus"));
    }
    let n = data.len() / dim;
    if n < k {
        return Err(Error::InsufficientData {
            needed: k,
            available: n,
        });
    }

    let mut rng = stream_rng(options.seed, GMM_STREAM, 0);
    let centers = kmeans::plus_plus_init(&data, dim, k, &mut rng);
    let mut resp = vec![0.0; n * k];
    let mut init_badness = Vec::with_capacity(n);
    for (i, x) in data.chunks_exact(dim).enumerate() {
        let (c, d2) = kmeans::nearest(&centers, dim, x);
        resp[i * k + c] = 1.0;
        init_badness.push(-d2);
    }
    let (mut model, mut reseeded) = m_step(&data, dim, k, &resp, &init_badness)?;
    let mut state = e_step(&model, &data);
    let mut trace = vec![state.mean_ll];
    let mut converged = false;

    for _ in 0..options.max_iters {
        let (candidate, seeded) = m_step(&data, dim, k, &state.resp, &state.point_ll)?;
        let next = e_step(&candidate, &data);
        if next.mean_ll.is_nan() || next.mean_ll < state.mean_ll - MONOTONICITY_TOL {
            log::debug!(
                "rejecting EM step: log-likelihood {} -> {}",
                state.mean_ll,
                next.mean_ll
            );
            break;
        }
        let improvement = next.mean_ll - state.mean_ll;
        model = candidate;
        reseeded += seeded;
        state = next;
        trace.push(state.mean_ll);
        if improvement < options.tol {
            converged = true;
            break;
        }
    }

    Ok(GmmFit {
        model,
        log_likelihood: trace,
        converged,
        reseeded,
    })
}
