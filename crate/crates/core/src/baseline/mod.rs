//! Binarized Fisher vector baselines (Scene FV★, Frame FV★) and shot-level
//! re-ranking of scene shortlists.
//!
//! Every entry is the sign pattern of a Fisher vector. Databases are scanned
//! exhaustively by Hamming distance.

mod file;
mod search;

use std::collections::HashMap;
use std::fmt;

use rayon::prelude::*;

pub use file::FV_STAR_MAGIC;
pub use search::FvStarSearcher;

use crate::embedding::{compute_fv, DescriptorSet, DiagonalGmm, FisherVector, PcaModel};
use crate::error::{Error, Result};
use crate::index::{Hit, Scene};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Granularity {
    Scene,
    Shot,
    Frame,
}

impl Granularity {
    pub fn code(self) -> u8 {
        match self {
            Granularity::Scene => 0,
            Granularity::Shot => 1,
            Granularity::Frame => 2,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Granularity::Scene),
            1 => Some(Granularity::Shot),
            2 => Some(Granularity::Frame),
            _ => None,
        }
    }
}

impl fmt::Display for Granularity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Granularity::Scene => "scene",
            Granularity::Shot => "shot",
            Granularity::Frame => "frame",
        })
    }
}

/// A packed bit string, least significant bit of word 0 first.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BinaryCode {
    words: Vec<u64>,
    len: usize,
}

impl BinaryCode {
    pub fn from_bits(bits: &[bool]) -> Self {
        let mut words = vec![0u64; bits.len().div_ceil(64)];
        for (i, _) in bits.iter().enumerate().filter(|(_, b)| **b) {
            words[i / 64] |= 1 << (i % 64);
        }
        BinaryCode { words, len: bits.len() }
    }

    pub fn from_words(words: Vec<u64>, len: usize) -> Result<Self> {
        if words.len() != len.div_ceil(64) {
            return Err(Error::LengthMismatch {
                expected: len.div_ceil(64),
                actual: words.len(),
            });
        }
        if !len.is_multiple_of(64) && words.last().is_some_and(|w| w >> (len % 64) != 0) {
            return Err(Error::InvalidConfig("bits set beyond the code length".into()));
        }
        Ok(BinaryCode { words, len })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn bit(&self, i: usize) -> bool {
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    /// Every bit inverted.
    pub fn complement(&self) -> Self {
        let mut words: Vec<u64> = self.words.iter().map(|w| !w).collect();
        if !self.len.is_multiple_of(64) {
            if let Some(last) = words.last_mut() {
                *last &= (1u64 << (self.len % 64)) - 1;
            }
        }
        BinaryCode { words, len: self.len }
    }

    pub fn hamming(&self, other: &BinaryCode) -> Result<u32> {
        if self.len != other.len {
            return Err(Error::LengthMismatch {
                expected: self.len,
                actual: other.len,
            });
        }
        Ok(self.hamming_unchecked(other))
    }

    fn hamming_unchecked(&self, other: &BinaryCode) -> u32 {
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a ^ b).count_ones())
            .sum()
    }
}

/// Sign bits of a Fisher vector; exact zeros map to 1.
pub fn binarize_fv(fv: &FisherVector) -> BinaryCode {
    let bits: Vec<bool> = fv.values().iter().map(|&v| v >= 0.0).collect();
    BinaryCode::from_bits(&bits)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinarizedFv {
    pub code: BinaryCode,
    pub owner_id: String,
    /// Scene the owner belongs to; equal to `owner_id` for scene entries.
    pub scene_id: String,
}

/// A shot: a run of frames inside one scene.
#[derive(Debug, Clone, PartialEq)]
pub struct Shot {
    pub id: String,
    pub scene_id: String,
    pub frames: Vec<DescriptorSet>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FvStarDatabase {
    granularity: Granularity,
    components: usize,
    dim: usize,
    entries: Vec<BinarizedFv>,
}

impl FvStarDatabase {
    pub fn new(granularity: Granularity, components: usize, dim: usize, entries: Vec<BinarizedFv>) -> Result<Self> {
        let bits = components * dim;
        if let Some(e) = entries.iter().find(|e| e.code.len() != bits) {
            return Err(Error::LengthMismatch {
                expected: bits,
                actual: e.code.len(),
            });
        }
        if granularity == Granularity::Scene && entries.iter().any(|e| e.owner_id != e.scene_id) {
            return Err(Error::InvalidConfig("scene entries must be their own scene".into()));
        }
        Ok(FvStarDatabase {
            granularity,
            components,
            dim,
            entries,
        })
    }

    pub fn granularity(&self) -> Granularity {
        self.granularity
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Code length `K * d`.
    pub fn bits(&self) -> usize {
        self.components * self.dim
    }

    pub fn entries(&self) -> &[BinarizedFv] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Distinct scene ids in order of first appearance.
    pub fn scene_ids(&self) -> Vec<&str> {
        let mut seen = std::collections::HashSet::new();
        self.entries
            .iter()
            .filter(|e| seen.insert(e.scene_id.as_str()))
            .map(|e| e.scene_id.as_str())
            .collect()
    }
}

/// Binarized FV of the union of several descriptor sets.
pub fn fv_star_code(pca: &PcaModel, gmm: &DiagonalGmm, sets: &[&DescriptorSet]) -> Result<BinaryCode> {
    let projected = sets.iter().map(|s| pca.apply(s)).collect::<Result<Vec<_>>>()?;
    let union = DescriptorSet::concat("", &projected)?;
    Ok(binarize_fv(&compute_fv(gmm, &union, false)?))
}

/// Owner, parent scene and frames of one database entry.
type Group<'a> = (String, String, Vec<&'a DescriptorSet>);

fn build_entries(
    groups: Vec<Group<'_>>,
    granularity: Granularity,
    pca: &PcaModel,
    gmm: &DiagonalGmm,
) -> Result<FvStarDatabase> {
    if groups.is_empty() {
        return Err(Error::EmptySceneList);
    }
    let (kept, empty): (Vec<_>, Vec<_>) = groups
        .into_iter()
        .partition(|(_, _, frames)| frames.iter().any(|f| !f.is_empty()));
    for (owner, _, _) in &empty {
        log::warn!("{granularity} '{owner}' has no descriptors and was skipped");
    }
    let entries = kept
        .par_iter()
        .map(|(owner, scene, frames)| {
            Ok(BinarizedFv {
                code: fv_star_code(pca, gmm, frames)?,
                owner_id: owner.clone(),
                scene_id: scene.clone(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    if entries.is_empty() {
        return Err(Error::EmptySet(format!("every {granularity} is empty")));
    }
    FvStarDatabase::new(granularity, gmm.components(), gmm.dim(), entries)
}

/// One binarized FV per scene over the union of its frames.
pub fn build_scene_fv_star(scenes: &[Scene], pca: &PcaModel, gmm: &DiagonalGmm) -> Result<FvStarDatabase> {
    let groups = scenes
        .iter()
        .map(|s| (s.id.clone(), s.id.clone(), s.frames.iter().collect()))
        .collect();
    build_entries(groups, Granularity::Scene, pca, gmm)
}

/// One binarized FV per shot.
pub fn build_shot_fv_star(shots: &[Shot], pca: &PcaModel, gmm: &DiagonalGmm) -> Result<FvStarDatabase> {
    let groups = shots
        .iter()
        .map(|s| (s.id.clone(), s.scene_id.clone(), s.frames.iter().collect()))
        .collect();
    build_entries(groups, Granularity::Shot, pca, gmm)
}

/// One binarized FV per frame. Frames are identified by their source id,
/// or `scene#position` when it is blank.
pub fn build_frame_fv_star(scenes: &[Scene], pca: &PcaModel, gmm: &DiagonalGmm) -> Result<FvStarDatabase> {
    let groups = scenes
        .iter()
        .flat_map(|s| {
            s.frames.iter().enumerate().map(move |(i, f)| {
                let owner = if f.source_id().is_empty() {
                    format!("{}#{i}", s.id)
                } else {
                    f.source_id().to_string()
                };
                (owner, s.id.clone(), vec![f])
            })
        })
        .collect();
    build_entries(groups, Granularity::Frame, pca, gmm)
}

/// Exhaustive Hamming scan: `(entry ordinal, distance)` by ascending
/// distance, ties by ordinal, truncated to `top_k`.
pub fn hamming_rank(query: &BinaryCode, database: &[BinarizedFv], top_k: usize) -> Result<Vec<(u32, u32)>> {
    if let Some(e) = database.iter().find(|e| e.code.len() != query.len()) {
        return Err(Error::LengthMismatch {
            expected: query.len(),
            actual: e.code.len(),
        });
    }
    let mut ranked: Vec<(u32, u32)> = database
        .par_iter()
        .enumerate()
        .map(|(i, e)| (i as u32, query.hamming_unchecked(&e.code)))
        .collect();
    ranked.sort_unstable_by_key(|&(i, d)| (d, i));
    ranked.truncate(top_k);
    Ok(ranked)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reranked {
    pub hits: Vec<Hit>,
    /// Shortlisted scenes with no shot entries; they keep their position.
    pub missing_shots: Vec<String>,
}

/// Reorders the first `shortlist_size` hits by the minimum Hamming distance
/// between `query` and each scene's shot codes. Reranked hits are scored
/// `bits - distance`. Hits beyond the shortlist are untouched.
pub fn rerank_shortlist(
    ranking: &[Hit],
    shots: &FvStarDatabase,
    query: &BinaryCode,
    shortlist_size: usize,
) -> Result<Reranked> {
    if query.len() != shots.bits() {
        return Err(Error::LengthMismatch {
            expected: shots.bits(),
            actual: query.len(),
        });
    }
    let mut by_scene: HashMap<&str, u32> = HashMap::new();
    for e in shots.entries() {
        let d = query.hamming_unchecked(&e.code);
        by_scene
            .entry(e.scene_id.as_str())
            .and_modify(|best| *best = (*best).min(d))
            .or_insert(d);
    }
    let cut = shortlist_size.min(ranking.len());
    let mut slots = Vec::new();
    let mut scored = Vec::new();
    let mut missing_shots = Vec::new();
    for (pos, hit) in ranking[..cut].iter().enumerate() {
        match by_scene.get(hit.scene_id.as_str()) {
            Some(&d) => {
                slots.push(pos);
                scored.push((d, pos));
            }
            None => missing_shots.push(hit.scene_id.clone()),
        }
    }
    for scene in &missing_shots {
        log::warn!("scene '{scene}' has no shot descriptors; kept at its original rank");
    }
    scored.sort_unstable();
    let mut hits = ranking.to_vec();
    for (slot, (d, pos)) in slots.into_iter().zip(scored) {
        hits[slot] = Hit {
            score: (shots.bits() as u32 - d) as f64,
            ..ranking[pos].clone()
        };
    }
    Ok(Reranked { hits, missing_shots })
}
