//! Locality-sensitive and quantizer-based hash functions mapping vectors to
//! one of `2^n` buckets.
//!
//! Three random-hyperplane families are supported (Gaussian planes, ±1
//! planes, and axis-aligned sign bits) plus k-means vector quantizers. A
//! [`HashBank`] holds `M` functions; under the vector-based domain every
//! function sees the whole Fisher vector, under the Gaussian-based domain
//! function `m` sees only the block (or residual) belonging to Gaussian `m`.

pub(crate) mod bank_file;
mod lsh;
mod vq;

use std::fmt;
use std::str::FromStr;

pub use bank_file::HASH_BANK_MAGIC;
pub use lsh::{sample_hash_bank, HyperplaneHash};
pub use vq::{train_vq_bank, VqHash, VqTrainingReport, VQ_MAX_ITERS};

use crate::embedding::FisherVector;
use crate::error::{Error, Result};

pub const MAX_BITS: u8 = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum HashFamily {
    /// Random hyperplanes with standard normal entries.
    LshC,
    /// Random hyperplanes with ±1 entries.
    LshS,
    /// Sign of a randomly sampled coordinate.
    LshB,
    /// Nearest k-means centroid.
    Vq,
}

impl HashFamily {
    pub fn code(self) -> u8 {
        match self {
            HashFamily::LshC => 0,
            HashFamily::LshS => 1,
            HashFamily::LshB => 2,
            HashFamily::Vq => 3,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Some(match code {
            0 => HashFamily::LshC,
            1 => HashFamily::LshS,
            2 => HashFamily::LshB,
            3 => HashFamily::Vq,
            _ => return None,
        })
    }

    /// Random families need repeated trials; quantizers are deterministic
    /// given their training data.
    pub fn is_randomized(self) -> bool {
        self != HashFamily::Vq
    }
}

impl fmt::Display for HashFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            HashFamily::LshC => "lsh_c",
            HashFamily::LshS => "lsh_s",
            HashFamily::LshB => "lsh_b",
            HashFamily::Vq => "vq",
        })
    }
}

impl FromStr for HashFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "lsh_c" => Ok(HashFamily::LshC),
            "lsh_s" => Ok(HashFamily::LshS),
            "lsh_b" => Ok(HashFamily::LshB),
            "vq" => Ok(HashFamily::Vq),
            other => Err(Error::InvalidConfig(format!("unknown hash family '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum HashDomain {
    /// Vector-based: the whole `K*d` Fisher vector.
    Vbh,
    /// Gaussian-based: one `d`-dimensional chunk per Gaussian.
    Gbh,
}

impl HashDomain {
    pub fn code(self) -> u8 {
        match self {
            HashDomain::Vbh => 0,
            HashDomain::Gbh => 1,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(HashDomain::Vbh),
            1 => Some(HashDomain::Gbh),
            _ => None,
        }
    }
}

impl fmt::Display for HashDomain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            HashDomain::Vbh => "vbh",
            HashDomain::Gbh => "gbh",
        })
    }
}

impl FromStr for HashDomain {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "vbh" => Ok(HashDomain::Vbh),
            "gbh" => Ok(HashDomain::Gbh),
            other => Err(Error::InvalidConfig(format!("unknown hash domain '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HashConfig {
    pub family: HashFamily,
    pub domain: HashDomain,
    /// Number of hash functions `M`.
    pub functions: usize,
    /// Bits per hash function `n`; each function has `2^n` buckets.
    pub bits: u8,
    pub input_dim: usize,
    pub seed: u64,
}

impl HashConfig {
    pub fn validate(&self) -> Result<()> {
        if self.functions == 0 {
            return Err(Error::InvalidConfig("at least one hash function is required".into()));
        }
        if self.functions > u16::MAX as usize + 1 {
            return Err(Error::InvalidConfig(format!(
                "too many hash functions: {}",
                self.functions
            )));
        }
        if !(1..=MAX_BITS).contains(&self.bits) {
            return Err(Error::InvalidConfig(format!(
                "bits per hash must be in 1..={MAX_BITS}, got {}",
                self.bits
            )));
        }
        if self.input_dim == 0 {
            return Err(Error::InvalidConfig("hash input dimension must be positive".into()));
        }
        Ok(())
    }

    /// Checks the input dimension against a `K`-component, `d`-dimensional
    /// embedding.
    pub fn validate_for(&self, components: usize, dim: usize) -> Result<()> {
        self.validate()?;
        let expected = match self.domain {
            HashDomain::Vbh => components * dim,
            HashDomain::Gbh => dim,
        };
        if self.input_dim != expected {
            return Err(Error::InvalidConfig(format!(
                "{} hashes over K={components}, d={dim} need input dimension {expected}, got {}",
                self.domain, self.input_dim
            )));
        }
        Ok(())
    }

    pub fn buckets(&self) -> u64 {
        1u64 << self.bits
    }
}

/// A bucket index in `[0, 2^n)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BucketId(pub u32);

impl BucketId {
    pub fn value(self) -> u64 {
        u64::from(self.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum HashFunction {
    Hyperplane(HyperplaneHash),
    Vq(VqHash),
}

impl HashFunction {
    pub fn input_dim(&self) -> usize {
        match self {
            HashFunction::Hyperplane(h) => h.input_dim(),
            HashFunction::Vq(h) => h.input_dim(),
        }
    }

    pub fn hash(&self, v: &[f64]) -> Result<BucketId> {
        if v.len() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                actual: v.len(),
            });
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("hash input"));
        }
        Ok(self.hash_unchecked(v))
    }

    pub(crate) fn hash_unchecked(&self, v: &[f64]) -> BucketId {
        match self {
            HashFunction::Hyperplane(h) => h.hash_unchecked(v),
            HashFunction::Vq(h) => h.hash_unchecked(v),
        }
    }
}

/// `M` hash functions sharing one configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct HashBank {
    config: HashConfig,
    functions: Vec<HashFunction>,
}

impl HashBank {
    pub fn new(config: HashConfig, functions: Vec<HashFunction>) -> Result<Self> {
        config.validate()?;
        if functions.len() != config.functions {
            return Err(Error::LengthMismatch {
                expected: config.functions,
                actual: functions.len(),
            });
        }
        for f in &functions {
            if f.input_dim() != config.input_dim {
                return Err(Error::DimensionMismatch {
                    expected: config.input_dim,
                    actual: f.input_dim(),
                });
            }
            let matches_family = match (f, config.family) {
                (HashFunction::Vq(q), HashFamily::Vq) => q.bits() == config.bits,
                (HashFunction::Hyperplane(h), family) if family != HashFamily::Vq => {
                    h.bits() == config.bits as usize && h.is_axis_aligned() == (family == HashFamily::LshB)
                }
                _ => false,
            };
            if !matches_family {
                return Err(Error::InvalidConfig(format!(
                    "hash function does not match configured family {} with {} bits",
                    config.family, config.bits
                )));
            }
        }
        Ok(HashBank { config, functions })
    }

    pub fn config(&self) -> &HashConfig {
        &self.config
    }

    pub fn functions(&self) -> &[HashFunction] {
        &self.functions
    }

    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }

    pub fn hash(&self, function: usize, v: &[f64]) -> Result<BucketId> {
        let f = self.functions.get(function).ok_or(Error::IndexOutOfRange {
            index: function,
            limit: self.functions.len(),
        })?;
        f.hash(v)
    }
}

/// Splits a Fisher vector into its `K` per-Gaussian blocks.
pub fn gbh_chunks(fv: &FisherVector, components: usize, dim: usize) -> Result<Vec<&[f64]>> {
    if fv.len() != components * dim || dim == 0 {
        return Err(Error::LengthMismatch {
            expected: components * dim,
            actual: fv.len(),
        });
    }
    Ok(fv.values().chunks_exact(dim).collect())
}
