use std::collections::{BTreeMap, HashSet};

use rayon::prelude::*;

use super::{average_precision, mean_ap, EvalReport, GroundTruth};
use crate::baseline::{FvStarDatabase, FvStarSearcher};
use crate::embedding::DescriptorSet;
use crate::error::{Error, Result};
use crate::index::{IdfWeights, InvertedIndex, QueryResult, ScoringConfig, Searcher};
use crate::models::Models;

#[derive(Debug, Clone, PartialEq)]
pub struct Query {
    pub id: String,
    pub descriptors: DescriptorSet,
}

/// Anything that ranks scenes for a query image.
pub trait SceneRetriever: Sync {
    fn retrieve(&self, query: &DescriptorSet, top_k: usize) -> Result<QueryResult>;

    /// Serialized size of the structures searched.
    fn index_bytes(&self) -> u64;
}

pub struct BloomRetriever<'a> {
    searcher: Searcher<'a>,
    scoring: ScoringConfig,
    index_bytes: u64,
}

impl<'a> BloomRetriever<'a> {
    pub fn new(index: &'a InvertedIndex, models: &'a Models, scoring: ScoringConfig) -> Result<Self> {
        scoring.validate()?;
        Ok(BloomRetriever {
            searcher: Searcher::new(index, models)?,
            scoring,
            index_bytes: index.to_bytes()?.len() as u64,
        })
    }

    pub fn with_idf(mut self, idf: &'a IdfWeights) -> Result<Self> {
        self.searcher = self.searcher.with_idf(idf)?;
        Ok(self)
    }
}

impl SceneRetriever for BloomRetriever<'_> {
    fn retrieve(&self, query: &DescriptorSet, top_k: usize) -> Result<QueryResult> {
        self.searcher.search(query, &self.scoring, top_k)
    }

    fn index_bytes(&self) -> u64 {
        self.index_bytes
    }
}

pub struct FvStarRetriever<'a> {
    searcher: FvStarSearcher<'a>,
    index_bytes: u64,
}

impl<'a> FvStarRetriever<'a> {
    /// `databases` are every FV★ structure the searcher scans (including a
    /// shot database used for re-ranking); their sizes are summed.
    pub fn new(searcher: FvStarSearcher<'a>, databases: &[&FvStarDatabase]) -> Result<Self> {
        let mut index_bytes = 0;
        for db in databases {
            index_bytes += db.to_bytes()?.len() as u64;
        }
        Ok(FvStarRetriever { searcher, index_bytes })
    }
}

impl SceneRetriever for FvStarRetriever<'_> {
    fn retrieve(&self, query: &DescriptorSet, top_k: usize) -> Result<QueryResult> {
        self.searcher.search(query, top_k)
    }

    fn index_bytes(&self) -> u64 {
        self.index_bytes
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchmarkOptions {
    pub top_k: usize,
    /// Report latency including query embedding instead of retrieval only.
    pub end_to_end: bool,
}

impl Default for BenchmarkOptions {
    fn default() -> Self {
        BenchmarkOptions {
            top_k: 100,
            end_to_end: false,
        }
    }
}

/// Runs every query, computes per-query AP against `ground_truth` and
/// aggregates a single-trial report. Queries run concurrently; results are
/// keyed by query id.
pub fn run_benchmark(
    retriever: &dyn SceneRetriever,
    queries: &[Query],
    ground_truth: &GroundTruth,
    options: &BenchmarkOptions,
) -> Result<EvalReport> {
    let mut ids = HashSet::new();
    for q in queries {
        ground_truth.relevant(&q.id)?;
        if !ids.insert(q.id.as_str()) {
            return Err(Error::InvalidConfig(format!("duplicate query id '{}'", q.id)));
        }
    }
    let outcomes = queries
        .par_iter()
        .map(|q| {
            let result = retriever.retrieve(&q.descriptors, options.top_k)?;
            let ranking: Vec<&str> = result.hits.iter().map(|h| h.scene_id.as_str()).collect();
            let ap = average_precision(&ranking, ground_truth.relevant(&q.id)?)?;
            let latency = if options.end_to_end {
                result.end_to_end_seconds
            } else {
                result.latency_seconds
            };
            Ok((q.id.clone(), ap, latency))
        })
        .collect::<Result<Vec<_>>>()?;

    let per_query_ap: BTreeMap<String, f64> = outcomes.iter().map(|(id, ap, _)| (id.clone(), *ap)).collect();
    let aps: Vec<f64> = per_query_ap.values().copied().collect();
    let latencies: Vec<f64> = outcomes.iter().map(|(_, _, l)| *l).collect();
    Ok(EvalReport {
        map: mean_ap(&aps)?,
        map_stddev: 0.0,
        mean_latency_seconds: mean_ap(&latencies)?,
        index_bytes: retriever.index_bytes(),
        trials: 1,
        per_query_ap,
    })
}
