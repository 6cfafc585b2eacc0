//! Partitioned and non-partitioned Bloom filters over hash buckets.
//!
//! A partitioned filter has one block of `L_p` bits per hash function and
//! function `m` only addresses block `m`. A non-partitioned filter has a
//! single array of `L_np` bits shared by every function. Filters are
//! insert-only.
//!
//! Filter-set files (`QIVB`):
//!
//! ```text
//! magic        "QIVB"
//! version      u32
//! partitioned  u8
//! M            u32
//! length       u64      L_p when partitioned, L_np otherwise
//! scene count  u32
//! per scene:   id_len u16, id bytes, ceil(bits / 64) little-endian u64 words
//! ```

use std::path::Path;

use crate::error::{Error, Result};
use crate::hashing::BucketId;
use crate::io::{read_file, write_file, ByteReader, ByteWriter};

pub const FILTER_SET_MAGIC: &[u8; 4] = b"QIVB";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterConfig {
    Partitioned { functions: usize, partition_len: u64 },
    NonPartitioned { functions: usize, len: u64 },
}

impl FilterConfig {
    pub fn partitioned(functions: usize, partition_len: u64) -> Self {
        FilterConfig::Partitioned {
            functions,
            partition_len,
        }
    }

    pub fn non_partitioned(functions: usize, len: u64) -> Self {
        FilterConfig::NonPartitioned { functions, len }
    }

    pub fn validate(&self) -> Result<()> {
        let (m, len) = (self.functions(), self.bucket_limit());
        if m == 0 || len == 0 {
            return Err(Error::InvalidConfig(
                "filter needs at least one function and one bit".into(),
            ));
        }
        if m > u16::MAX as usize + 1 {
            return Err(Error::InvalidConfig(format!("too many hash functions: {m}")));
        }
        if len > u64::from(u32::MAX) + 1 {
            return Err(Error::InvalidConfig(format!("filter length {len} exceeds 2^32")));
        }
        Ok(())
    }

    pub fn functions(&self) -> usize {
        match *self {
            FilterConfig::Partitioned { functions, .. } | FilterConfig::NonPartitioned { functions, .. } => functions,
        }
    }

    pub fn is_partitioned(&self) -> bool {
        matches!(self, FilterConfig::Partitioned { .. })
    }

    /// Number of buckets each hash function may address.
    pub fn bucket_limit(&self) -> u64 {
        match *self {
            FilterConfig::Partitioned { partition_len, .. } => partition_len,
            FilterConfig::NonPartitioned { len, .. } => len,
        }
    }

    /// Total bits: `L_p * M` or `L_np`.
    pub fn bit_budget(&self) -> u64 {
        match *self {
            FilterConfig::Partitioned {
                functions,
                partition_len,
            } => partition_len * functions as u64,
            FilterConfig::NonPartitioned { len, .. } => len,
        }
    }

    /// Position of `bucket` of function `m` in the bit array.
    pub fn bit_position(&self, m: usize, bucket: BucketId) -> Result<u64> {
        let limit = self.bucket_limit();
        if m >= self.functions() {
            return Err(Error::IndexOutOfRange {
                index: m,
                limit: self.functions(),
            });
        }
        if bucket.value() >= limit {
            return Err(Error::BucketOutOfRange {
                function: m,
                bucket: bucket.value(),
                limit,
            });
        }
        Ok(match *self {
            FilterConfig::Partitioned { partition_len, .. } => m as u64 * partition_len + bucket.value(),
            FilterConfig::NonPartitioned { .. } => bucket.value(),
        })
    }

    /// Inverse of [`bit_position`](Self::bit_position). Non-partitioned bits
    /// are shared by all functions and report function 0.
    pub fn split_bit(&self, bit: u64) -> (usize, u64) {
        match *self {
            FilterConfig::Partitioned { partition_len, .. } => ((bit / partition_len) as usize, bit % partition_len),
            FilterConfig::NonPartitioned { .. } => (0, bit),
        }
    }

    pub(crate) fn write(&self, w: &mut ByteWriter) {
        w.u8(u8::from(self.is_partitioned()));
        w.u32(self.functions() as u32);
        w.u64(self.bucket_limit());
    }

    pub(crate) fn read(r: &mut ByteReader<'_>) -> Result<Self> {
        let partitioned = match r.u8()? {
            0 => false,
            1 => true,
            other => return Err(r.err(format!("bad partition flag {other}"))),
        };
        let functions = r.u32()? as usize;
        let length = r.u64()?;
        let config = if partitioned {
            FilterConfig::partitioned(functions, length)
        } else {
            FilterConfig::non_partitioned(functions, length)
        };
        config.validate().map_err(|e| r.err(e.to_string()))?;
        Ok(config)
    }
}

pub fn bit_budget(config: &FilterConfig) -> u64 {
    config.bit_budget()
}

/// The Bloom filter of one scene.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SceneFilter {
    scene_id: String,
    config: FilterConfig,
    words: Vec<u64>,
    popcount: u64,
}

impl SceneFilter {
    pub fn new(scene_id: impl Into<String>, config: FilterConfig) -> Result<Self> {
        config.validate()?;
        let words = config.bit_budget().div_ceil(64) as usize;
        Ok(SceneFilter {
            scene_id: scene_id.into(),
            config,
            words: vec![0; words],
            popcount: 0,
        })
    }

    pub fn from_words(scene_id: impl Into<String>, config: FilterConfig, words: Vec<u64>) -> Result<Self> {
        let mut filter = SceneFilter::new(scene_id, config)?;
        if words.len() != filter.words.len() {
            return Err(Error::LengthMismatch {
                expected: filter.words.len(),
                actual: words.len(),
            });
        }
        let tail = config.bit_budget() % 64;
        if tail != 0 && words.last().is_some_and(|w| w >> tail != 0) {
            return Err(Error::InvalidConfig("bits set beyond the filter length".into()));
        }
        filter.popcount = words.iter().map(|w| u64::from(w.count_ones())).sum();
        filter.words = words;
        Ok(filter)
    }

    pub fn scene_id(&self) -> &str {
        &self.scene_id
    }

    pub fn config(&self) -> &FilterConfig {
        &self.config
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn popcount(&self) -> u64 {
        self.popcount
    }

    pub fn bit(&self, pos: u64) -> bool {
        self.words[(pos / 64) as usize] >> (pos % 64) & 1 == 1
    }

    pub(crate) fn set_bit(&mut self, pos: u64) -> bool {
        let word = &mut self.words[(pos / 64) as usize];
        let mask = 1u64 << (pos % 64);
        if *word & mask == 0 {
            *word |= mask;
            self.popcount += 1;
            true
        } else {
            false
        }
    }

    /// Sets a single bucket of function `m`. Returns whether the bit was new.
    pub fn set(&mut self, m: usize, bucket: BucketId) -> Result<bool> {
        let pos = self.config.bit_position(m, bucket)?;
        Ok(self.set_bit(pos))
    }

    fn positions(&self, buckets: &[BucketId]) -> Result<Vec<u64>> {
        if buckets.len() != self.config.functions() {
            return Err(Error::LengthMismatch {
                expected: self.config.functions(),
                actual: buckets.len(),
            });
        }
        buckets
            .iter()
            .enumerate()
            .map(|(m, &b)| self.config.bit_position(m, b))
            .collect()
    }

    /// Inserts an item given its `M` bucket ids. Nothing is set if any
    /// bucket is out of range.
    pub fn insert(&mut self, buckets: &[BucketId]) -> Result<()> {
        for pos in self.positions(buckets)? {
            self.set_bit(pos);
        }
        Ok(())
    }

    /// True iff every addressed bit is set.
    pub fn contains(&self, buckets: &[BucketId]) -> Result<bool> {
        Ok(self.positions(buckets)?.into_iter().all(|p| self.bit(p)))
    }

    /// Positions of set bits in increasing order.
    pub fn set_bits(&self) -> impl Iterator<Item = u64> + '_ {
        self.words.iter().enumerate().flat_map(|(i, &w)| {
            let mut rest = w;
            std::iter::from_fn(move || {
                if rest == 0 {
                    return None;
                }
                let tz = rest.trailing_zeros();
                rest &= rest - 1;
                Some(i as u64 * 64 + u64::from(tz))
            })
        })
    }
}

/// A collection of scene filters sharing one configuration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FilterSet {
    pub config: FilterConfig,
    pub filters: Vec<SceneFilter>,
}

impl FilterSet {
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut w = ByteWriter::with_header(FILTER_SET_MAGIC);
        self.config.write(&mut w);
        w.u32(u32::try_from(self.filters.len()).map_err(|_| Error::InvalidConfig("too many scenes".into()))?);
        for f in &self.filters {
            if f.config != self.config {
                return Err(Error::InvalidConfig(format!(
                    "filter {} has a different configuration",
                    f.scene_id
                )));
            }
            w.short_str(&f.scene_id)?;
            f.words.iter().for_each(|&x| w.u64(x));
        }
        Ok(w.into_inner())
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = ByteReader::open("filter set", bytes, FILTER_SET_MAGIC)?;
        let config = FilterConfig::read(&mut r)?;
        let count = r.u32()? as usize;
        let words = config.bit_budget().div_ceil(64) as usize;
        let mut filters = Vec::with_capacity(count.min(1 << 16));
        for _ in 0..count {
            let id = r.short_str()?;
            let data = (0..words).map(|_| r.u64()).collect::<Result<Vec<_>>>()?;
            filters.push(SceneFilter::from_words(id, config, data).map_err(|e| r.err(e.to_string()))?);
        }
        r.finish()?;
        Ok(FilterSet { config, filters })
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_bytes(&read_file(path)?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_file(path, &self.to_bytes()?)
    }
}
