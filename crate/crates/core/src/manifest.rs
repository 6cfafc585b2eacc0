//! Tab-separated dataset manifests.
//!
//! Scene manifests hold `scene_id<TAB>frame_id<TAB>descriptor_path[<TAB>shot_id]`
//! lines; query manifests hold `query_id<TAB>descriptor_path` lines. Blank
//! lines and `#` comments are ignored and relative paths resolve against
//! the manifest's directory.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::baseline::Shot;
use crate::embedding::DescriptorSet;
use crate::error::{Error, Result};
use crate::eval::Query;
use crate::index::Scene;
use crate::io::write_file;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameRef {
    pub frame_id: String,
    pub path: PathBuf,
    pub shot_id: Option<String>,
}

impl FrameRef {
    /// Loads the descriptor file, labelled with the frame id.
    pub fn load(&self) -> Result<DescriptorSet> {
        Ok(DescriptorSet::read(&self.path)?.with_source_id(self.frame_id.clone()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SceneRecord {
    pub scene_id: String,
    pub frames: Vec<FrameRef>,
}

impl SceneRecord {
    pub fn load(&self) -> Result<Scene> {
        let frames = self.frames.iter().map(FrameRef::load).collect::<Result<Vec<_>>>()?;
        Ok(Scene::new(self.scene_id.clone(), frames))
    }
}

/// Scenes in order of first appearance, each with its frames in file order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Manifest {
    scenes: Vec<SceneRecord>,
}

fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
}

fn resolve(base: &Path, p: &str) -> PathBuf {
    let p = Path::new(p);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

fn parent_dir(path: &Path) -> &Path {
    path.parent().unwrap_or(Path::new(""))
}

impl Manifest {
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let base = parent_dir(path);
        let mut scenes: Vec<SceneRecord> = Vec::new();
        let mut slot: HashMap<String, usize> = HashMap::new();
        let mut pairs = HashSet::new();
        for (line, l) in data_lines(text) {
            let err = |reason: String| Error::Parse {
                path: path.to_path_buf(),
                line,
                reason,
            };
            let fields: Vec<&str> = l.split('\t').collect();
            if !(3..=4).contains(&fields.len()) || fields[..3].iter().any(|f| f.trim().is_empty()) {
                return Err(err("expected scene_id<TAB>frame_id<TAB>path[<TAB>shot_id]".into()));
            }
            let (scene, frame) = (fields[0].trim(), fields[1].trim());
            if !pairs.insert((scene.to_string(), frame.to_string())) {
                return Err(err(format!("duplicate frame '{frame}' in scene '{scene}'")));
            }
            let shot_id = fields
                .get(3)
                .map(|s| s.trim())
                .filter(|s| !s.is_empty())
                .map(String::from);
            let frame = FrameRef {
                frame_id: frame.to_string(),
                path: resolve(base, fields[2].trim()),
                shot_id,
            };
            let i = *slot.entry(scene.to_string()).or_insert_with(|| {
                scenes.push(SceneRecord {
                    scene_id: scene.to_string(),
                    frames: Vec::new(),
                });
                scenes.len() - 1
            });
            scenes[i].frames.push(frame);
        }
        Ok(Manifest { scenes })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    pub fn from_scenes(scenes: Vec<SceneRecord>) -> Self {
        Manifest { scenes }
    }

    pub fn scenes(&self) -> &[SceneRecord] {
        &self.scenes
    }

    pub fn is_empty(&self) -> bool {
        self.scenes.is_empty()
    }

    pub fn frame_count(&self) -> usize {
        self.scenes.iter().map(|s| s.frames.len()).sum()
    }

    /// Every frame's descriptors, in manifest order.
    pub fn load_frames(&self) -> Result<Vec<DescriptorSet>> {
        self.scenes.iter().flat_map(|s| &s.frames).map(FrameRef::load).collect()
    }

    pub fn load_scenes(&self) -> Result<Vec<Scene>> {
        self.scenes.iter().map(SceneRecord::load).collect()
    }

    /// Groups frames with a shot id into shots; frames without one are not
    /// part of any shot.
    pub fn load_shots(&self) -> Result<Vec<Shot>> {
        let mut shots: Vec<Shot> = Vec::new();
        let mut slot: HashMap<(&str, &str), usize> = HashMap::new();
        for scene in &self.scenes {
            for frame in &scene.frames {
                let Some(shot) = frame.shot_id.as_deref() else { continue };
                let i = *slot.entry((scene.scene_id.as_str(), shot)).or_insert_with(|| {
                    shots.push(Shot {
                        id: shot.to_string(),
                        scene_id: scene.scene_id.clone(),
                        frames: Vec::new(),
                    });
                    shots.len() - 1
                });
                shots[i].frames.push(frame.load()?);
            }
        }
        Ok(shots)
    }

    /// Serializes with paths made relative to `base` where possible.
    pub fn to_text(&self, base: &Path) -> String {
        let mut out = String::new();
        for scene in &self.scenes {
            for f in &scene.frames {
                let path = f.path.strip_prefix(base).unwrap_or(&f.path);
                let _ = write!(out, "{}\t{}\t{}", scene.scene_id, f.frame_id, path.display());
                if let Some(shot) = &f.shot_id {
                    let _ = write!(out, "\t{shot}");
                }
                out.push('\n');
            }
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_file(path, self.to_text(parent_dir(path)).as_bytes())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryRef {
    pub query_id: String,
    pub path: PathBuf,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct QueryManifest {
    pub queries: Vec<QueryRef>,
}

impl QueryManifest {
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let base = parent_dir(path);
        let mut seen = HashSet::new();
        let mut queries = Vec::new();
        for (line, l) in data_lines(text) {
            let err = |reason: String| Error::Parse {
                path: path.to_path_buf(),
                line,
                reason,
            };
            let (id, p) = l
                .split_once('\t')
                .filter(|(id, p)| !id.trim().is_empty() && !p.trim().is_empty())
                .ok_or_else(|| err("expected query_id<TAB>path".into()))?;
            if !seen.insert(id.trim().to_string()) {
                return Err(err(format!("duplicate query id '{}'", id.trim())));
            }
            queries.push(QueryRef {
                query_id: id.trim().to_string(),
                path: resolve(base, p.trim()),
            });
        }
        Ok(QueryManifest { queries })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    pub fn load(&self) -> Result<Vec<Query>> {
        self.queries
            .iter()
            .map(|q| {
                Ok(Query {
                    id: q.query_id.clone(),
                    descriptors: DescriptorSet::read(&q.path)?.with_source_id(q.query_id.clone()),
                })
            })
            .collect()
    }

    pub fn to_text(&self, base: &Path) -> String {
        let mut out = String::new();
        for q in &self.queries {
            let path = q.path.strip_prefix(base).unwrap_or(&q.path);
            let _ = writeln!(out, "{}\t{}", q.query_id, path.display());
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_file(path, self.to_text(parent_dir(path)).as_bytes())
    }
}
