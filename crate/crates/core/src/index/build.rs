use std::collections::{BTreeMap, HashSet};

use super::probe::Prober;
use super::{InvertedIndex, Pipeline};
use crate::embedding::DescriptorSet;
use crate::error::{Error, Result};
use crate::filter::{FilterConfig, SceneFilter};
use crate::models::Models;

/// A scene and the descriptor sets of its frames.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub id: String,
    pub frames: Vec<DescriptorSet>,
}

impl Scene {
    pub fn new(id: impl Into<String>, frames: Vec<DescriptorSet>) -> Self {
        Scene { id: id.into(), frames }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct BuildReport {
    pub scenes: usize,
    pub frames: usize,
    pub descriptors: usize,
    /// `(scene id, frame source id)` of frames with no descriptors.
    pub skipped_empty_frames: Vec<(String, String)>,
    pub total_set_bits: u64,
}

/// Streams scenes into an index one at a time.
pub struct IndexBuilder<'a> {
    models: &'a Models,
    prober: Prober<'a>,
    pipeline: Pipeline,
    filter: FilterConfig,
    seen: HashSet<String>,
    scenes: Vec<String>,
    postings: BTreeMap<u64, Vec<u32>>,
    report: BuildReport,
    scratch: Vec<u64>,
}

impl<'a> IndexBuilder<'a> {
    pub fn new(models: &'a Models, pipeline: Pipeline, filter: FilterConfig) -> Result<Self> {
        Ok(IndexBuilder {
            models,
            prober: Prober::new(models, pipeline, filter)?,
            pipeline,
            filter,
            seen: HashSet::new(),
            scenes: Vec::new(),
            postings: BTreeMap::new(),
            report: BuildReport::default(),
            scratch: Vec::new(),
        })
    }

    /// Hashes every frame of a scene into a fresh filter, records its set
    /// bits in the postings and returns the filter.
    pub fn add_scene(&mut self, scene_id: &str, frames: &[DescriptorSet]) -> Result<SceneFilter> {
        if self.seen.contains(scene_id) {
            return Err(Error::InvalidConfig(format!("duplicate scene id '{scene_id}'")));
        }
        let ordinal = u32::try_from(self.scenes.len()).map_err(|_| Error::InvalidConfig("too many scenes".into()))?;
        let mut filter = SceneFilter::new(scene_id, self.filter)?;
        let mut skipped = Vec::new();
        for frame in frames {
            if frame.is_empty() {
                skipped.push((scene_id.to_string(), frame.source_id().to_string()));
            }
            self.scratch.clear();
            self.prober.probes(frame, &mut self.scratch)?;
            for &bit in &self.scratch {
                filter.set_bit(bit);
            }
        }
        for bit in filter.set_bits() {
            self.postings.entry(bit).or_default().push(ordinal);
        }
        self.seen.insert(scene_id.to_string());
        self.scenes.push(scene_id.to_string());
        self.report.scenes += 1;
        self.report.frames += frames.len();
        self.report.descriptors += frames.iter().map(DescriptorSet::len).sum::<usize>();
        self.report.total_set_bits += filter.popcount();
        for (scene, frame) in &skipped {
            log::warn!("scene '{scene}': frame '{frame}' has no descriptors and was skipped");
        }
        self.report.skipped_empty_frames.extend(skipped);
        Ok(filter)
    }

    pub fn scene_count(&self) -> usize {
        self.scenes.len()
    }

    pub fn finish(self) -> Result<(InvertedIndex, BuildReport)> {
        let index = InvertedIndex::seal(
            self.pipeline,
            self.filter,
            *self.models.bank().config(),
            *self.models.fingerprints(),
            self.scenes,
            self.postings,
        )?;
        Ok((index, self.report))
    }
}

fn build(scenes: &[Scene], models: &Models, pipeline: Pipeline, filter: FilterConfig) -> Result<InvertedIndex> {
    if scenes.is_empty() {
        return Err(Error::EmptySceneList);
    }
    let mut builder = IndexBuilder::new(models, pipeline, filter)?;
    for scene in scenes {
        builder.add_scene(&scene.id, &scene.frames)?;
    }
    Ok(builder.finish()?.0)
}

/// Indexes scenes by hashing one normalized Fisher vector per frame.
pub fn build_bf_gd(scenes: &[Scene], models: &Models, filter: FilterConfig) -> Result<InvertedIndex> {
    build(scenes, models, Pipeline::BfGd, filter)
}

/// Indexes scenes by hashing every local descriptor into the partition of
/// its strongest Gaussian.
pub fn build_bf_pi(scenes: &[Scene], models: &Models, filter: FilterConfig) -> Result<InvertedIndex> {
    build(scenes, models, Pipeline::BfPi, filter)
}
