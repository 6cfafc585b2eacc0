//! Run configuration: a flat `key = value` file with `#` comments, plus
//! validation of parameter combinations.
//!
//! Keys are case-insensitive. `M`, `n`, `K` and `d` are the number of hash
//! functions, bits per hash, GMM components and PCA output dimension.

use std::fmt;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::embedding::GmmOptions;
use crate::error::{Error, Result};
use crate::filter::FilterConfig;
use crate::hashing::{HashDomain, HashFamily, MAX_BITS};
use crate::index::{Pipeline, ScoringConfig, ScoringMode};
use crate::models::TrainingOptions;

/// Largest `n` accepted for vector-quantizing hashes.
pub const MAX_VQ_BITS: u8 = 16;

/// The retrieval system under test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum System {
    Bloom(Pipeline),
    SceneFvStar,
    FrameFvStar,
}

impl System {
    pub fn pipeline(self) -> Option<Pipeline> {
        match self {
            System::Bloom(p) => Some(p),
            _ => None,
        }
    }
}

impl fmt::Display for System {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            System::Bloom(p) => p.fmt(f),
            System::SceneFvStar => f.write_str("scene_fv_star"),
            System::FrameFvStar => f.write_str("frame_fv_star"),
        }
    }
}

impl FromStr for System {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "scene_fv_star" | "scene_fv" => Ok(System::SceneFvStar),
            "frame_fv_star" | "frame_fv" => Ok(System::FrameFvStar),
            other => other.parse().map(System::Bloom).map_err(|_| {
                Error::InvalidConfig(format!(
                    "unknown pipeline '{s}' (expected bf_gd, bf_pi, scene_fv_star or frame_fv_star)"
                ))
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub pipeline: System,
    pub family: HashFamily,
    pub domain: HashDomain,
    pub functions: usize,
    pub bits: u8,
    pub components: usize,
    pub pca_dim: usize,
    pub alpha: f64,
    pub scoring: ScoringMode,
    pub partitioned: bool,
    /// Length of a non-partitioned filter; `2^n` when unset.
    pub np_length: Option<u64>,
    pub seed: u64,
    pub trials: usize,
    pub rerank: bool,
    pub shortlist_size: usize,
    pub top_k: usize,
    pub gmm_max_iters: usize,
    pub gmm_tol: f64,
    /// Report latency including query embedding.
    pub end_to_end_latency: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            pipeline: System::Bloom(Pipeline::BfPi),
            family: HashFamily::Vq,
            domain: HashDomain::Gbh,
            functions: 16,
            bits: 8,
            components: 16,
            pca_dim: 8,
            alpha: 0.5,
            scoring: ScoringMode::TfIdf,
            partitioned: true,
            np_length: None,
            seed: 0,
            trials: 10,
            rerank: false,
            shortlist_size: 100,
            top_k: 100,
            gmm_max_iters: 100,
            gmm_tol: 1e-6,
            end_to_end_latency: false,
        }
    }
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::InvalidConfig(format!("invalid value '{value}' for '{key}'")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(Error::InvalidConfig(format!("invalid boolean '{value}' for '{key}'"))),
    }
}

impl RunConfig {
    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim().to_ascii_lowercase().replace('-', "_");
        let value = value.trim();
        match key.as_str() {
            "pipeline" => self.pipeline = value.parse()?,
            "family" => self.family = value.parse()?,
            "domain" => self.domain = value.parse()?,
            "m" | "functions" => self.functions = parse_value(&key, value)?,
            "n" | "bits" => self.bits = parse_value(&key, value)?,
            "k" | "components" => self.components = parse_value(&key, value)?,
            "d" | "pca_dim" => self.pca_dim = parse_value(&key, value)?,
            "alpha" => self.alpha = parse_value(&key, value)?,
            "scoring" => self.scoring = value.parse()?,
            "partitioned" => self.partitioned = parse_bool(&key, value)?,
            "np_length" => {
                self.np_length = match value {
                    "" | "auto" => None,
                    v => Some(parse_value(&key, v)?),
                }
            }
            "seed" => self.seed = parse_value(&key, value)?,
            "trials" => self.trials = parse_value(&key, value)?,
            "rerank" => self.rerank = parse_bool(&key, value)?,
            "shortlist_size" => self.shortlist_size = parse_value(&key, value)?,
            "top_k" => self.top_k = parse_value(&key, value)?,
            "gmm_max_iters" => self.gmm_max_iters = parse_value(&key, value)?,
            "gmm_tol" => self.gmm_tol = parse_value(&key, value)?,
            "end_to_end_latency" => self.end_to_end_latency = parse_bool(&key, value)?,
            _ => return Err(Error::InvalidConfig(format!("unknown config key '{key}'"))),
        }
        Ok(())
    }

    /// Applies every setting of a config file body on top of `self`.
    pub fn apply_text(&mut self, text: &str, path: &Path) -> Result<()> {
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                reason: "expected key = value".into(),
            })?;
            self.set(key, value)?;
        }
        Ok(())
    }

    /// Defaults overridden by a config file; not yet validated.
    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config = RunConfig::default();
        config.apply_text(&text, path)?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        for (name, v) in [
            ("M", self.functions),
            ("K", self.components),
            ("d", self.pca_dim),
            ("trials", self.trials),
            ("top_k", self.top_k),
            ("shortlist_size", self.shortlist_size),
        ] {
            if v == 0 {
                return bad(format!("{name} must be at least 1"));
            }
        }
        if !(1..=MAX_BITS).contains(&self.bits) {
            return bad(format!("n must be in 1..={MAX_BITS}, got {}", self.bits));
        }
        if self.family == HashFamily::Vq && self.bits > MAX_VQ_BITS {
            return bad(format!("vq hashing requires n <= {MAX_VQ_BITS}, got {}", self.bits));
        }
        if !self.alpha.is_finite() {
            return bad(format!("alpha must be finite, got {}", self.alpha));
        }
        if !(self.gmm_tol.is_finite() && self.gmm_tol >= 0.0) {
            return bad(format!("gmm_tol must be finite and non-negative, got {}", self.gmm_tol));
        }
        if self.pipeline == System::Bloom(Pipeline::BfPi) && self.domain != HashDomain::Gbh {
            return bad("bf_pi requires domain = gbh".into());
        }
        if self.domain == HashDomain::Gbh && self.functions != self.components {
            return bad(format!(
                "domain gbh requires M = K (got M={}, K={})",
                self.functions, self.components
            ));
        }
        if let Some(len) = self.np_length {
            if self.partitioned {
                return bad("np_length applies only to non-partitioned filters".into());
            }
            if len < 1u64 << self.bits {
                return bad(format!(
                    "np_length {len} is smaller than the 2^{} hash range",
                    self.bits
                ));
            }
        }
        self.filter_config().validate()
    }

    pub fn filter_config(&self) -> FilterConfig {
        let range = 1u64 << self.bits;
        if self.partitioned {
            FilterConfig::partitioned(self.functions, range)
        } else {
            FilterConfig::non_partitioned(self.functions, self.np_length.unwrap_or(range))
        }
    }

    pub fn scoring_config(&self) -> ScoringConfig {
        ScoringConfig {
            mode: self.scoring,
            alpha: self.alpha,
        }
    }

    pub fn gmm_options(&self) -> GmmOptions {
        GmmOptions {
            components: self.components,
            seed: self.seed,
            max_iters: self.gmm_max_iters,
            tol: self.gmm_tol,
        }
    }

    /// Options for training a model bundle; FV★ systems still get a hash
    /// bank so one bundle serves every system.
    pub fn training_options(&self) -> TrainingOptions {
        TrainingOptions {
            pipeline: self.pipeline.pipeline().unwrap_or(Pipeline::BfGd),
            pca_dim: self.pca_dim,
            gmm: self.gmm_options(),
            family: self.family,
            domain: self.domain,
            functions: self.functions,
            bits: self.bits,
            hash_seed: self.seed,
        }
    }

    /// Number of trials actually run: 1 for deterministic systems.
    pub fn effective_trials(&self) -> usize {
        match self.pipeline {
            System::Bloom(_) if self.family.is_randomized() => self.trials,
            _ => 1,
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        kv("pipeline", self.pipeline.to_string());
        kv("family", self.family.to_string());
        kv("domain", self.domain.to_string());
        kv("M", self.functions.to_string());
        kv("n", self.bits.to_string());
        kv("K", self.components.to_string());
        kv("d", self.pca_dim.to_string());
        kv("alpha", self.alpha.to_string());
        kv("scoring", self.scoring.to_string());
        kv("partitioned", self.partitioned.to_string());
        kv("np_length", self.np_length.map_or("auto".into(), |v| v.to_string()));
        kv("seed", self.seed.to_string());
        kv("trials", self.trials.to_string());
        kv("rerank", self.rerank.to_string());
        kv("shortlist_size", self.shortlist_size.to_string());
        kv("top_k", self.top_k.to_string());
        kv("gmm_max_iters", self.gmm_max_iters.to_string());
        kv("gmm_tol", self.gmm_tol.to_string());
        kv("end_to_end_latency", self.end_to_end_latency.to_string());
        out
    }
}
