//! Scene indexes: BF-GD and BF-PI builders, the inverted bucket-to-scene
//! index, IDF weighting and query scoring.
//!
//! Each scene is summarized by a Bloom filter. The index stores those
//! filters transposed, as posting lists keyed by filter bit position, so a
//! query touches only the scenes that share one of its probed buckets.

mod build;
mod file;
mod idf;
mod probe;
mod search;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

pub use build::{build_bf_gd, build_bf_pi, BuildReport, IndexBuilder, Scene};
pub use file::INDEX_MAGIC;
pub use idf::{compute_idf, IdfWeights, WEIGHT_EXPONENT};
pub use search::{rank_ties, score_query, Hit, QueryResult, ScoringConfig, ScoringMode, Searcher};

use crate::error::{Error, Result};
use crate::filter::{FilterConfig, SceneFilter};
use crate::hashing::{BucketId, HashConfig};
use crate::models::ModelFingerprints;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pipeline {
    /// Global descriptors: one Fisher vector per frame, hashed by all `M`
    /// functions.
    BfGd,
    /// Point-indexed: each local descriptor sets one bucket in the partition
    /// of its strongest Gaussian.
    BfPi,
}

impl Pipeline {
    pub fn code(self) -> u8 {
        match self {
            Pipeline::BfGd => 0,
            Pipeline::BfPi => 1,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Pipeline::BfGd),
            1 => Some(Pipeline::BfPi),
            _ => None,
        }
    }
}

impl fmt::Display for Pipeline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Pipeline::BfGd => "bf_gd",
            Pipeline::BfPi => "bf_pi",
        })
    }
}

impl FromStr for Pipeline {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "bf_gd" | "gd" => Ok(Pipeline::BfGd),
            "bf_pi" | "pi" => Ok(Pipeline::BfPi),
            _ => Err(Error::InvalidConfig(format!(
                "unknown pipeline '{s}' (expected bf_gd or bf_pi)"
            ))),
        }
    }
}

/// A sealed, immutable scene index.
#[derive(Debug, Clone, PartialEq)]
pub struct InvertedIndex {
    pipeline: Pipeline,
    filter: FilterConfig,
    hash: HashConfig,
    fingerprints: ModelFingerprints,
    scenes: Vec<String>,
    /// Filter bit position to ascending scene ordinals.
    postings: BTreeMap<u64, Vec<u32>>,
    setbits: Vec<u64>,
    idf: IdfWeights,
}

impl InvertedIndex {
    /// Seals postings into an index and caches IDF weights.
    pub(crate) fn seal(
        pipeline: Pipeline,
        filter: FilterConfig,
        hash: HashConfig,
        fingerprints: ModelFingerprints,
        scenes: Vec<String>,
        postings: BTreeMap<u64, Vec<u32>>,
    ) -> Result<Self> {
        if scenes.is_empty() {
            return Err(Error::EmptySceneList);
        }
        let mut setbits = vec![0u64; scenes.len()];
        for (&bit, list) in &postings {
            if bit >= filter.bit_budget() {
                return Err(Error::IndexOutOfRange {
                    index: bit as usize,
                    limit: filter.bit_budget() as usize,
                });
            }
            if list.is_empty() || list.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidConfig(format!(
                    "posting list for bit {bit} is empty or not strictly ascending"
                )));
            }
            for &v in list {
                let slot = setbits.get_mut(v as usize).ok_or(Error::IndexOutOfRange {
                    index: v as usize,
                    limit: scenes.len(),
                })?;
                *slot += 1;
            }
        }
        let mut index = InvertedIndex {
            pipeline,
            filter,
            hash,
            fingerprints,
            scenes,
            postings,
            setbits,
            idf: IdfWeights::default(),
        };
        index.idf = idf::smoothed_idf(&index);
        Ok(index)
    }

    pub fn pipeline(&self) -> Pipeline {
        self.pipeline
    }

    pub fn filter_config(&self) -> &FilterConfig {
        &self.filter
    }

    pub fn hash_config(&self) -> &HashConfig {
        &self.hash
    }

    pub fn fingerprints(&self) -> &ModelFingerprints {
        &self.fingerprints
    }

    pub fn scene_count(&self) -> usize {
        self.scenes.len()
    }

    pub fn scene_ids(&self) -> &[String] {
        &self.scenes
    }

    pub fn scene_id(&self, ordinal: u32) -> &str {
        &self.scenes[ordinal as usize]
    }

    pub fn ordinal_of(&self, scene_id: &str) -> Option<u32> {
        self.scenes.iter().position(|s| s == scene_id).map(|p| p as u32)
    }

    /// Number of set bits in scene `ordinal`'s filter.
    pub fn setbits(&self, ordinal: u32) -> u64 {
        self.setbits[ordinal as usize]
    }

    /// Posting list of a filter bit position (empty if unobserved).
    pub fn posting(&self, bit: u64) -> &[u32] {
        self.postings.get(&bit).map_or(&[], Vec::as_slice)
    }

    /// Posting list of bucket `bucket` of function `m`.
    pub fn posting_for(&self, m: usize, bucket: BucketId) -> Result<&[u32]> {
        Ok(self.posting(self.filter.bit_position(m, bucket)?))
    }

    pub fn postings(&self) -> impl Iterator<Item = (u64, &[u32])> + '_ {
        self.postings.iter().map(|(&b, l)| (b, l.as_slice()))
    }

    pub fn posting_count(&self) -> usize {
        self.postings.len()
    }

    /// IDF weights cached at seal time.
    pub fn idf(&self) -> &IdfWeights {
        &self.idf
    }

    /// Rebuilds every scene's Bloom filter from the postings.
    pub fn scene_filters(&self) -> Result<Vec<SceneFilter>> {
        let mut filters = self
            .scenes
            .iter()
            .map(|id| SceneFilter::new(id.clone(), self.filter))
            .collect::<Result<Vec<_>>>()?;
        for (&bit, list) in &self.postings {
            for &v in list {
                filters[v as usize].set_bit(bit);
            }
        }
        Ok(filters)
    }
}
