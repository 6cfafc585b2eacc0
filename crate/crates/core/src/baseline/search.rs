use std::collections::{HashMap, HashSet};
use std::time::Instant;

use super::{fv_star_code, hamming_rank, rerank_shortlist, FvStarDatabase, Granularity};
use crate::embedding::{DescriptorSet, DiagonalGmm, PcaModel};
use crate::error::{Error, Result};
use crate::index::{Hit, QueryResult};

/// Scene retrieval over a scene- or frame-level FV★ database, with optional
/// shot re-ranking. Frame hits collapse to their scene at its best frame.
pub struct FvStarSearcher<'a> {
    database: &'a FvStarDatabase,
    pca: &'a PcaModel,
    gmm: &'a DiagonalGmm,
    shots: Option<(&'a FvStarDatabase, usize)>,
    scene_ordinals: HashMap<&'a str, u32>,
}

impl<'a> FvStarSearcher<'a> {
    pub fn new(database: &'a FvStarDatabase, pca: &'a PcaModel, gmm: &'a DiagonalGmm) -> Result<Self> {
        if database.granularity() == Granularity::Shot {
            return Err(Error::InvalidConfig(
                "shot databases are used for re-ranking, not first-stage retrieval".into(),
            ));
        }
        if database.components() != gmm.components() || database.dim() != gmm.dim() {
            return Err(Error::DimensionMismatch {
                expected: gmm.components() * gmm.dim(),
                actual: database.bits(),
            });
        }
        let scene_ordinals = database
            .scene_ids()
            .into_iter()
            .enumerate()
            .map(|(i, s)| (s, i as u32))
            .collect();
        Ok(FvStarSearcher {
            database,
            pca,
            gmm,
            shots: None,
            scene_ordinals,
        })
    }

    /// Re-ranks the top `shortlist_size` scenes with shot codes.
    pub fn with_rerank(mut self, shots: &'a FvStarDatabase, shortlist_size: usize) -> Result<Self> {
        if shots.granularity() != Granularity::Shot || shots.bits() != self.database.bits() {
            return Err(Error::InvalidConfig(
                "re-ranking needs a shot database with the same code length".into(),
            ));
        }
        self.shots = Some((shots, shortlist_size));
        Ok(self)
    }

    pub fn search(&self, query: &DescriptorSet, top_k: usize) -> Result<QueryResult> {
        if query.is_empty() {
            return Err(Error::EmptyQuery);
        }
        let start = Instant::now();
        let code = fv_star_code(self.pca, self.gmm, &[query])?;
        let embedded = Instant::now();
        let entries = self.database.entries();
        let bits = self.database.bits() as u32;
        let mut seen = HashSet::new();
        let mut hits: Vec<Hit> = hamming_rank(&code, entries, entries.len())?
            .into_iter()
            .filter_map(|(i, d)| {
                let scene = entries[i as usize].scene_id.as_str();
                seen.insert(scene).then(|| Hit {
                    scene_id: scene.to_string(),
                    ordinal: self.scene_ordinals[scene],
                    score: f64::from(bits - d),
                })
            })
            .collect();
        if let Some((shots, shortlist)) = self.shots {
            hits = rerank_shortlist(&hits, shots, &code, shortlist)?.hits;
        }
        hits.truncate(top_k);
        Ok(QueryResult {
            hits,
            latency_seconds: embedded.elapsed().as_secs_f64(),
            end_to_end_seconds: start.elapsed().as_secs_f64(),
        })
    }
}
