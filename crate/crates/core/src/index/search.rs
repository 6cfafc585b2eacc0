use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use super::probe::Prober;
use super::{IdfWeights, InvertedIndex};
use crate::embedding::DescriptorSet;
use crate::error::{Error, Result};
use crate::models::Models;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScoringMode {
    /// Number of query probes that hit a set bit of the scene.
    HashMatches,
    /// Squared-IDF weighted matches over a scene-length normalizer.
    TfIdf,
}

impl fmt::Display for ScoringMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScoringMode::HashMatches => "hash",
            ScoringMode::TfIdf => "tfidf",
        })
    }
}

impl FromStr for ScoringMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "hash" | "hash_matches" => Ok(ScoringMode::HashMatches),
            "tfidf" | "tf_idf" => Ok(ScoringMode::TfIdf),
            _ => Err(Error::InvalidConfig(format!(
                "unknown scoring mode '{s}' (expected hash or tfidf)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoringConfig {
    pub mode: ScoringMode,
    /// Exponent of the per-scene normalizer; only used by TF-IDF.
    pub alpha: f64,
}

impl ScoringConfig {
    pub fn hash_matches() -> Self {
        ScoringConfig {
            mode: ScoringMode::HashMatches,
            alpha: 0.0,
        }
    }

    pub fn tfidf(alpha: f64) -> Self {
        ScoringConfig {
            mode: ScoringMode::TfIdf,
            alpha,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.alpha.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "alpha must be finite, got {}",
                self.alpha
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Hit {
    pub scene_id: String,
    pub ordinal: u32,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueryResult {
    pub hits: Vec<Hit>,
    /// Wall time of index traversal, scoring and ranking.
    pub latency_seconds: f64,
    /// Wall time including query embedding and hashing.
    pub end_to_end_seconds: f64,
}

/// Sorts `(ordinal, score)` pairs by descending score, breaking ties by
/// ascending ordinal.
pub fn rank_ties(scores: &[(u32, f64)]) -> Vec<(u32, f64)> {
    let mut ranked = scores.to_vec();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    ranked
}

/// Query-side view of a sealed index and the models it was built with.
pub struct Searcher<'a> {
    index: &'a InvertedIndex,
    prober: Prober<'a>,
    idf: &'a IdfWeights,
}

impl<'a> Searcher<'a> {
    /// Fails if `models` differ from those recorded in the index.
    pub fn new(index: &'a InvertedIndex, models: &'a Models) -> Result<Self> {
        index.fingerprints().check(models.fingerprints())?;
        Ok(Searcher {
            index,
            prober: Prober::new(models, index.pipeline(), *index.filter_config())?,
            idf: index.idf(),
        })
    }

    /// Scores TF-IDF queries with `idf` instead of the cached weights.
    pub fn with_idf(mut self, idf: &'a IdfWeights) -> Result<Self> {
        if idf.scene_norms().len() != self.index.scene_count() {
            return Err(Error::LengthMismatch {
                expected: self.index.scene_count(),
                actual: idf.scene_norms().len(),
            });
        }
        self.idf = idf;
        Ok(self)
    }

    pub fn index(&self) -> &InvertedIndex {
        self.index
    }

    /// Bit positions probed by a query.
    pub fn probes(&self, query: &DescriptorSet) -> Result<Vec<u64>> {
        if query.is_empty() {
            return Err(Error::EmptyQuery);
        }
        let mut out = Vec::new();
        self.prober.probes(query, &mut out)?;
        Ok(out)
    }

    /// Scores every scene touched by the probes, unranked.
    pub fn score_probes(&self, probes: &[u64], scoring: &ScoringConfig) -> Vec<(u32, f64)> {
        let mut acc = vec![0.0f64; self.index.scene_count()];
        let mut hit = vec![false; self.index.scene_count()];
        let mut touched = Vec::new();
        for &bit in probes {
            let list = self.index.posting(bit);
            if list.is_empty() {
                continue;
            }
            let gain = match scoring.mode {
                ScoringMode::HashMatches => 1.0,
                ScoringMode::TfIdf => self.idf.weight(bit).powi(super::WEIGHT_EXPONENT),
            };
            for &v in list {
                if !hit[v as usize] {
                    hit[v as usize] = true;
                    touched.push(v);
                }
                acc[v as usize] += gain;
            }
        }
        touched.sort_unstable();
        touched
            .into_iter()
            .map(|v| {
                let raw = acc[v as usize];
                let score = match scoring.mode {
                    ScoringMode::HashMatches => raw,
                    ScoringMode::TfIdf => {
                        let norm = self.idf.scene_norm(v);
                        if scoring.alpha == 0.0 {
                            raw
                        } else if norm > 0.0 {
                            raw / norm.powf(scoring.alpha)
                        } else {
                            0.0
                        }
                    }
                };
                (v, score)
            })
            .collect()
    }

    /// Embeds, probes, scores and ranks a query, keeping the top `top_k`
    /// scenes.
    pub fn search(&self, query: &DescriptorSet, scoring: &ScoringConfig, top_k: usize) -> Result<QueryResult> {
        scoring.validate()?;
        let start = Instant::now();
        let probes = self.probes(query)?;
        let probed = Instant::now();
        let mut ranked = rank_ties(&self.score_probes(&probes, scoring));
        ranked.truncate(top_k);
        let latency_seconds = probed.elapsed().as_secs_f64();
        let end_to_end_seconds = start.elapsed().as_secs_f64();
        let hits = ranked
            .into_iter()
            .map(|(ordinal, score)| Hit {
                scene_id: self.index.scene_id(ordinal).to_string(),
                ordinal,
                score,
            })
            .collect();
        Ok(QueryResult {
            hits,
            latency_seconds,
            end_to_end_seconds,
        })
    }
}

/// One-shot query against `index` using explicit IDF weights.
pub fn score_query(
    index: &InvertedIndex,
    idf: &IdfWeights,
    scoring: &ScoringConfig,
    query: &DescriptorSet,
    models: &Models,
    top_k: usize,
) -> Result<QueryResult> {
    Searcher::new(index, models)?
        .with_idf(idf)?
        .search(query, scoring, top_k)
}
