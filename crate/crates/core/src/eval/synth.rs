use std::collections::HashMap;
use std::path::{Path, PathBuf};

use rand::Rng;
use rand_distr::StandardNormal;

use super::{GroundTruth, Query};
use crate::baseline::Shot;
use crate::embedding::DescriptorSet;
use crate::error::{Error, Result};
use crate::index::Scene;
use crate::io::round_f32;
use crate::manifest::{FrameRef, Manifest, QueryManifest, QueryRef, SceneRecord};
use crate::rng::{stream_rng, StreamRng};

const SCENE_STREAM: u64 = 1;
const QUERY_STREAM: u64 = 2;
const TRAINING_STREAM: u64 = 3;
/// Number of shots a scene is cut into (at most).
const SHOTS_PER_SCENE: usize = 5;

/// Parameters of a planted-retrieval dataset. Each scene is an isotropic
/// Gaussian descriptor cloud whose mean lies on a sphere; frames sample the
/// cloud and queries are indexed frames plus Gaussian noise.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub scene_count: usize,
    pub frames_per_scene: usize,
    pub descriptors_per_frame: usize,
    pub dim: usize,
    pub query_count: usize,
    pub noise_sigma: f64,
    pub seed: u64,
    /// Radius of the sphere holding scene means.
    pub sphere_radius: f64,
    /// Per-coordinate standard deviation of each scene cloud.
    pub cloud_std: f64,
    /// Frames drawn from separate, non-indexed scenes for model training.
    pub training_frames: usize,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            scene_count: 20,
            frames_per_scene: 10,
            descriptors_per_frame: 32,
            dim: 8,
            query_count: 20,
            noise_sigma: 0.1,
            seed: 0,
            sphere_radius: 3.0,
            cloud_std: 1.0,
            training_frames: 600,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("scene_count", self.scene_count),
            ("frames_per_scene", self.frames_per_scene),
            ("descriptors_per_frame", self.descriptors_per_frame),
            ("dim", self.dim),
            ("query_count", self.query_count),
            ("training_frames", self.training_frames),
        ];
        if let Some((name, _)) = counts.iter().find(|(_, v)| *v == 0) {
            return Err(Error::InvalidConfig(format!("{name} must be at least 1")));
        }
        let reals = [
            ("noise_sigma", self.noise_sigma),
            ("sphere_radius", self.sphere_radius),
            ("cloud_std", self.cloud_std),
        ];
        if let Some((name, v)) = reals.iter().find(|(_, v)| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidConfig(format!(
                "{name} must be finite and non-negative, got {v}"
            )));
        }
        Ok(())
    }

    /// Frames per shot: `ceil(frames_per_scene / 5)`.
    pub fn shot_len(&self) -> usize {
        self.frames_per_scene.div_ceil(SHOTS_PER_SCENE)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticDataset {
    pub scenes: Vec<Scene>,
    pub shots: Vec<Shot>,
    pub training: Vec<DescriptorSet>,
    pub queries: Vec<Query>,
    pub ground_truth: GroundTruth,
}

fn gaussian(rng: &mut StreamRng) -> f64 {
    rng.sample(StandardNormal)
}

fn sphere_point(rng: &mut StreamRng, dim: usize, radius: f64) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| gaussian(rng)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return v.into_iter().map(|x| x * radius / norm).collect();
        }
    }
}

/// `frames` frames sampled from one scene cloud.
fn sample_scene(
    spec: &SyntheticSpec,
    stream: u64,
    row: u64,
    prefix: &str,
    frames: usize,
) -> Result<Vec<DescriptorSet>> {
    let mut rng = stream_rng(spec.seed, stream, row);
    let mean = sphere_point(&mut rng, spec.dim, spec.sphere_radius);
    (0..frames)
        .map(|f| {
            let data = (0..spec.descriptors_per_frame * spec.dim)
                .map(|i| round_f32(mean[i % spec.dim] + spec.cloud_std * gaussian(&mut rng)))
                .collect();
            DescriptorSet::new(format!("{prefix}_f{f:03}"), spec.dim, data)
        })
        .collect()
}

pub fn gen_synthetic(spec: &SyntheticSpec) -> Result<SyntheticDataset> {
    spec.validate()?;
    let shot_len = spec.shot_len();
    let mut scenes = Vec::with_capacity(spec.scene_count);
    let mut shots = Vec::new();
    for s in 0..spec.scene_count {
        let id = format!("scene{s:04}");
        let frames = sample_scene(spec, SCENE_STREAM, s as u64, &id, spec.frames_per_scene)?;
        for (j, chunk) in frames.chunks(shot_len).enumerate() {
            shots.push(Shot {
                id: format!("{id}_shot{j}"),
                scene_id: id.clone(),
                frames: chunk.to_vec(),
            });
        }
        scenes.push(Scene::new(id, frames));
    }

    let mut training = Vec::with_capacity(spec.training_frames);
    let mut t = 0;
    while training.len() < spec.training_frames {
        let take = spec.frames_per_scene.min(spec.training_frames - training.len());
        training.extend(sample_scene(spec, TRAINING_STREAM, t, &format!("train{t:04}"), take)?);
        t += 1;
    }

    let mut queries = Vec::with_capacity(spec.query_count);
    let mut ground_truth = GroundTruth::new();
    for q in 0..spec.query_count {
        let mut rng = stream_rng(spec.seed, QUERY_STREAM, q as u64);
        let scene = &scenes[rng.random_range(0..scenes.len())];
        let frame = &scene.frames[rng.random_range(0..scene.frames.len())];
        let data = frame
            .as_slice()
            .iter()
            .map(|&v| round_f32(v + spec.noise_sigma * gaussian(&mut rng)))
            .collect();
        let id = format!("q{q:04}");
        ground_truth.insert(id.clone(), scene.id.clone());
        queries.push(Query {
            descriptors: DescriptorSet::new(id.clone(), spec.dim, data)?,
            id,
        });
    }
    Ok(SyntheticDataset {
        scenes,
        shots,
        training,
        queries,
        ground_truth,
    })
}

/// Paths written by [`write_synthetic`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyntheticFiles {
    pub manifest: PathBuf,
    pub train_manifest: PathBuf,
    pub queries: PathBuf,
    pub ground_truth: PathBuf,
}

/// Writes descriptor files, manifests and ground truth under `dir`.
pub fn write_synthetic(data: &SyntheticDataset, dir: &Path) -> Result<SyntheticFiles> {
    let shot_of: HashMap<(&str, &str), &str> = data
        .shots
        .iter()
        .flat_map(|s| {
            s.frames
                .iter()
                .map(move |f| ((s.scene_id.as_str(), f.source_id()), s.id.as_str()))
        })
        .collect();
    let mut records = Vec::with_capacity(data.scenes.len());
    for scene in &data.scenes {
        let mut frames = Vec::with_capacity(scene.frames.len());
        for frame in &scene.frames {
            let path = dir
                .join("frames")
                .join(&scene.id)
                .join(format!("{}.qivd", frame.source_id()));
            frame.write(&path)?;
            let shot_id = shot_of
                .get(&(scene.id.as_str(), frame.source_id()))
                .map(|s| s.to_string());
            frames.push(FrameRef {
                frame_id: frame.source_id().to_string(),
                path,
                shot_id,
            });
        }
        records.push(SceneRecord {
            scene_id: scene.id.clone(),
            frames,
        });
    }

    let mut training: Vec<SceneRecord> = Vec::new();
    for frame in &data.training {
        let (scene, _) = frame.source_id().rsplit_once("_f").unwrap_or((frame.source_id(), ""));
        let path = dir
            .join("train")
            .join(scene)
            .join(format!("{}.qivd", frame.source_id()));
        frame.write(&path)?;
        let frame_ref = FrameRef {
            frame_id: frame.source_id().to_string(),
            path,
            shot_id: None,
        };
        match training.last_mut() {
            Some(r) if r.scene_id == scene => r.frames.push(frame_ref),
            _ => training.push(SceneRecord {
                scene_id: scene.to_string(),
                frames: vec![frame_ref],
            }),
        }
    }

    let mut queries = QueryManifest::default();
    for q in &data.queries {
        let path = dir.join("queries").join(format!("{}.qivd", q.id));
        q.descriptors.write(&path)?;
        queries.queries.push(QueryRef {
            query_id: q.id.clone(),
            path,
        });
    }

    let files = SyntheticFiles {
        manifest: dir.join("manifest.tsv"),
        train_manifest: dir.join("train_manifest.tsv"),
        queries: dir.join("queries.tsv"),
        ground_truth: dir.join("ground_truth.tsv"),
    };
    Manifest::from_scenes(records).write(&files.manifest)?;
    Manifest::from_scenes(training).write(&files.train_manifest)?;
    queries.write(&files.queries)?;
    data.ground_truth.write(&files.ground_truth)?;
    Ok(files)
}
