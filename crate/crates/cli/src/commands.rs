use std::collections::HashSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::Args;

use scenebloom::baseline::{
    build_frame_fv_star, build_scene_fv_star, build_shot_fv_star, FvStarDatabase, FvStarSearcher, FV_STAR_MAGIC,
};
use scenebloom::config::{RunConfig, System};
use scenebloom::embedding::DescriptorSet;
use scenebloom::eval::{
    gen_synthetic, run_benchmark, write_synthetic, BenchmarkOptions, BloomRetriever, EvalReport, FvStarRetriever,
    GroundTruth, SyntheticSpec,
};
use scenebloom::hashing::{sample_hash_bank, HashConfig};
use scenebloom::index::{IndexBuilder, InvertedIndex, Pipeline, QueryResult, Scene, Searcher, INDEX_MAGIC};
use scenebloom::manifest::{Manifest, QueryManifest};
use scenebloom::models::{hash_config_for, train_models, Models};
use scenebloom::Error;

use crate::{Cli, Command, GlobalArgs};

#[derive(Args, Debug)]
pub struct TrainArgs {
    /// Training manifest.
    #[arg(long)]
    pub manifest: PathBuf,
    /// Indexing manifest; only used to warn about overlapping frames.
    #[arg(long)]
    pub index_manifest: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct BuildArgs {
    /// Manifest of the scenes to index.
    #[arg(long)]
    pub manifest: PathBuf,
    /// Directory holding the trained model files.
    #[arg(long)]
    pub models: PathBuf,
}

#[derive(Args, Debug)]
pub struct QueryArgs {
    #[arg(long)]
    pub index: PathBuf,
    #[arg(long)]
    pub models: PathBuf,
    /// Query descriptor file.
    #[arg(long)]
    pub query: PathBuf,
    /// Overrides the `top_k` config key.
    #[arg(long)]
    pub top_k: Option<usize>,
}

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub index: PathBuf,
    #[arg(long)]
    pub models: PathBuf,
    /// Query manifest (`query_id<TAB>path`).
    #[arg(long)]
    pub queries: PathBuf,
    #[arg(long)]
    pub ground_truth: PathBuf,
    /// Indexing manifest, needed to rebuild the index for extra trials of
    /// randomized hash families.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Write the report as JSON.
    #[arg(long)]
    pub json: bool,
}

#[derive(Args, Debug)]
pub struct GenSynthArgs {
    #[arg(long, default_value_t = 20)]
    pub scenes: usize,
    #[arg(long, default_value_t = 10)]
    pub frames: usize,
    #[arg(long, default_value_t = 32)]
    pub descriptors: usize,
    #[arg(long, default_value_t = 8)]
    pub dim: usize,
    #[arg(long, default_value_t = 20)]
    pub queries: usize,
    #[arg(long, default_value_t = 0.1)]
    pub noise: f64,
    #[arg(long, default_value_t = 600)]
    pub training_frames: usize,
    #[arg(long, default_value_t = 3.0)]
    pub radius: f64,
    #[arg(long, default_value_t = 1.0)]
    pub cloud_std: f64,
}

pub fn run(cli: Cli) -> Result<()> {
    let g = &cli.global;
    if let Some(n) = g.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    let config = load_config(g)?;
    match &cli.command {
        Command::Train(a) => train(&config, g, a),
        Command::Build(a) => build(&config, g, a),
        Command::Query(a) => query(&config, g, a),
        Command::Evaluate(a) => evaluate(&config, g, a),
        Command::GenSynth(a) => gen_synth(&config, g, a),
    }
}

fn load_config(g: &GlobalArgs) -> Result<RunConfig> {
    let mut config = match &g.config {
        Some(path) => RunConfig::read(path)?,
        None => RunConfig::default(),
    };
    for item in &g.overrides {
        let (key, value) = item
            .split_once('=')
            .ok_or_else(|| Error::InvalidConfig(format!("--set expects KEY=VALUE, got '{item}'")))?;
        config.set(key, value)?;
    }
    if let Some(seed) = g.seed {
        config.seed = seed;
    }
    config.validate()?;
    Ok(config)
}

/// Prints `text` and also writes it to `--output` when given.
fn emit(g: &GlobalArgs, text: &str) -> Result<()> {
    print!("{text}");
    if let Some(path) = g.output.as_deref() {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        }
        fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn train(config: &RunConfig, g: &GlobalArgs, a: &TrainArgs) -> Result<()> {
    let manifest = Manifest::read(&a.manifest)?;
    if manifest.is_empty() {
        return Err(Error::EmptySceneList.into());
    }
    if let Some(other) = &a.index_manifest {
        let train: HashSet<PathBuf> = manifest
            .scenes()
            .iter()
            .flat_map(|s| &s.frames)
            .map(|f| f.path.clone())
            .collect();
        let shared = Manifest::read(other)?
            .scenes()
            .iter()
            .flat_map(|s| &s.frames)
            .filter(|f| train.contains(&f.path))
            .count();
        if shared > 0 {
            log::warn!("{shared} frames appear in both the training and indexing manifests");
        }
    }
    let frames = manifest.load_frames()?;
    let outcome = train_models(&frames, &config.training_options())?;
    let dir = g.output.clone().unwrap_or_else(|| PathBuf::from("models"));
    outcome.models.write_dir(&dir)?;

    let f = outcome.models.fingerprints();
    let mut out = String::new();
    writeln!(out, "models = {}", dir.display())?;
    writeln!(out, "pca = {}", f.pca)?;
    writeln!(out, "gmm = {}", f.gmm)?;
    writeln!(out, "bank = {}", f.bank)?;
    writeln!(
        out,
        "em_iterations = {}",
        outcome.gmm_fit.log_likelihood.len().saturating_sub(1)
    )?;
    if let Some(ll) = outcome.gmm_fit.log_likelihood.last() {
        writeln!(out, "log_likelihood = {ll:.6}")?;
    }
    if let Some(report) = &outcome.vq_report {
        writeln!(out, "vq_fallback_functions = {}", report.fallback.len())?;
    }
    print!("{out}");
    Ok(())
}

/// Rejects models that do not match the configuration.
fn check_models(config: &RunConfig, models: &Models) -> Result<()> {
    let gmm = models.gmm();
    if gmm.components() != config.components || gmm.dim() != config.pca_dim {
        return Err(Error::InvalidConfig(format!(
            "models have K={}, d={} but the configuration asks for K={}, d={}",
            gmm.components(),
            gmm.dim(),
            config.components,
            config.pca_dim
        ))
        .into());
    }
    if config.pipeline.pipeline().is_some() {
        let expected = hash_config_for(&config.training_options(), gmm.components(), gmm.dim());
        let actual = models.bank().config();
        let same = HashConfig {
            seed: actual.seed,
            ..expected
        } == *actual;
        if !same {
            return Err(Error::InvalidConfig(format!(
                "hash bank ({} {} M={} n={}) does not match the configuration ({} {} M={} n={})",
                actual.family,
                actual.domain,
                actual.functions,
                actual.bits,
                expected.family,
                expected.domain,
                expected.functions,
                expected.bits
            ))
            .into());
        }
    }
    Ok(())
}

fn shots_path(index: &Path) -> PathBuf {
    index.with_extension("shots.qivf")
}

fn build_index(
    models: &Models,
    pipeline: Pipeline,
    config: &RunConfig,
    manifest: &Manifest,
) -> Result<(InvertedIndex, String)> {
    let mut builder = IndexBuilder::new(models, pipeline, config.filter_config())?;
    let mut per_scene = String::new();
    for record in manifest.scenes() {
        let scene = record.load()?;
        let filter = builder.add_scene(&scene.id, &scene.frames)?;
        writeln!(per_scene, "setbits.{} = {}", scene.id, filter.popcount())?;
    }
    let (index, report) = builder.finish()?;
    let mut out = String::new();
    writeln!(out, "pipeline = {pipeline}")?;
    writeln!(out, "scenes = {}", report.scenes)?;
    writeln!(out, "frames = {}", report.frames)?;
    writeln!(out, "descriptors = {}", report.descriptors)?;
    writeln!(out, "skipped_empty_frames = {}", report.skipped_empty_frames.len())?;
    writeln!(out, "total_set_bits = {}", report.total_set_bits)?;
    writeln!(out, "posting_lists = {}", index.posting_count())?;
    writeln!(out, "index_bytes = {}", index.to_bytes()?.len())?;
    out.push_str(&per_scene);
    Ok((index, out))
}

fn build(config: &RunConfig, g: &GlobalArgs, a: &BuildArgs) -> Result<()> {
    let manifest = Manifest::read(&a.manifest)?;
    if manifest.is_empty() {
        return Err(Error::EmptySceneList.into());
    }
    let models = Models::read_dir(&a.models)?;
    check_models(config, &models)?;
    match config.pipeline {
        System::Bloom(pipeline) => {
            let (index, report) = build_index(&models, pipeline, config, &manifest)?;
            let path = g.output.clone().unwrap_or_else(|| PathBuf::from("index.qivi"));
            index.write(&path)?;
            print!("{report}");
        }
        system => {
            let scenes = manifest.load_scenes()?;
            let db = if system == System::SceneFvStar {
                build_scene_fv_star(&scenes, models.pca(), models.gmm())?
            } else {
                build_frame_fv_star(&scenes, models.pca(), models.gmm())?
            };
            let path = g.output.clone().unwrap_or_else(|| PathBuf::from("index.qivf"));
            db.write(&path)?;
            let mut out = String::new();
            writeln!(out, "pipeline = {system}")?;
            writeln!(out, "scenes = {}", scenes.len())?;
            writeln!(out, "entries = {}", db.len())?;
            writeln!(out, "index_bytes = {}", db.to_bytes()?.len())?;
            if config.rerank {
                let shots = build_shot_fv_star(&manifest.load_shots()?, models.pca(), models.gmm())?;
                shots.write(&shots_path(&path))?;
                writeln!(out, "shots = {}", shots.len())?;
                writeln!(out, "shot_bytes = {}", shots.to_bytes()?.len())?;
            }
            print!("{out}");
        }
    }
    Ok(())
}

enum Loaded {
    Bloom(InvertedIndex),
    FvStar(FvStarDatabase, Option<FvStarDatabase>),
}

fn load_index(path: &Path, config: &RunConfig) -> Result<Loaded> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    if bytes.starts_with(INDEX_MAGIC) {
        return Ok(Loaded::Bloom(InvertedIndex::from_bytes(&bytes)?));
    }
    if bytes.starts_with(FV_STAR_MAGIC) {
        let db = FvStarDatabase::from_bytes(&bytes)?;
        let shots = if config.rerank {
            Some(FvStarDatabase::read(&shots_path(path))?)
        } else {
            None
        };
        return Ok(Loaded::FvStar(db, shots));
    }
    Err(anyhow::anyhow!("{}: not an index or FV* database file", path.display()))
}

fn fv_searcher<'a>(
    db: &'a FvStarDatabase,
    shots: Option<&'a FvStarDatabase>,
    models: &'a Models,
    config: &RunConfig,
) -> Result<FvStarSearcher<'a>> {
    let searcher = FvStarSearcher::new(db, models.pca(), models.gmm())?;
    Ok(match shots {
        Some(s) => searcher.with_rerank(s, config.shortlist_size)?,
        None => searcher,
    })
}

fn query(config: &RunConfig, g: &GlobalArgs, a: &QueryArgs) -> Result<()> {
    let models = Models::read_dir(&a.models)?;
    let top_k = a.top_k.unwrap_or(config.top_k);
    let query = DescriptorSet::read(&a.query)?;
    let result: QueryResult = match load_index(&a.index, config)? {
        Loaded::Bloom(index) => Searcher::new(&index, &models)?.search(&query, &config.scoring_config(), top_k)?,
        Loaded::FvStar(db, shots) => fv_searcher(&db, shots.as_ref(), &models, config)?.search(&query, top_k)?,
    };
    let mut out = String::new();
    for (rank, hit) in result.hits.iter().enumerate() {
        writeln!(out, "{}\t{}\t{}", rank + 1, hit.scene_id, hit.score)?;
    }
    writeln!(out, "# latency_seconds = {:.9}", result.latency_seconds)?;
    emit(g, &out)
}

fn evaluate(config: &RunConfig, g: &GlobalArgs, a: &EvaluateArgs) -> Result<()> {
    let models = Models::read_dir(&a.models)?;
    let queries = QueryManifest::read(&a.queries)?.load()?;
    let ground_truth = GroundTruth::read(&a.ground_truth)?;
    let options = BenchmarkOptions {
        top_k: config.top_k,
        end_to_end: config.end_to_end_latency,
    };
    let report = match load_index(&a.index, config)? {
        Loaded::Bloom(index) => {
            check_models(config, &models)?;
            let scoring = config.scoring_config();
            let first = run_benchmark(
                &BloomRetriever::new(&index, &models, scoring)?,
                &queries,
                &ground_truth,
                &options,
            )?;
            let trials = config.effective_trials();
            if trials == 1 {
                first
            } else {
                let manifest_path = a.manifest.as_ref().ok_or_else(|| {
                    Error::InvalidConfig(format!(
                        "{trials} trials of a randomized family need --manifest to rebuild the index"
                    ))
                })?;
                let manifest = Manifest::read(manifest_path)?;
                let scenes: Vec<Scene> = manifest.load_scenes()?;
                let mut reports = vec![first];
                for t in 1..trials as u64 {
                    let base = *models.bank().config();
                    let bank = sample_hash_bank(&HashConfig {
                        seed: base.seed.wrapping_add(t),
                        ..base
                    })?;
                    let trial_models = models.with_bank(bank)?;
                    let mut builder = IndexBuilder::new(&trial_models, index.pipeline(), *index.filter_config())?;
                    for scene in &scenes {
                        builder.add_scene(&scene.id, &scene.frames)?;
                    }
                    let (trial_index, _) = builder.finish()?;
                    let retriever = BloomRetriever::new(&trial_index, &trial_models, scoring)?;
                    reports.push(run_benchmark(&retriever, &queries, &ground_truth, &options)?);
                }
                EvalReport::combine(&reports)?
            }
        }
        Loaded::FvStar(db, shots) => {
            let searcher = fv_searcher(&db, shots.as_ref(), &models, config)?;
            let mut dbs = vec![&db];
            dbs.extend(shots.as_ref());
            let retriever = FvStarRetriever::new(searcher, &dbs)?;
            run_benchmark(&retriever, &queries, &ground_truth, &options)?
        }
    };
    let text = if a.json {
        report.to_json() + "\n"
    } else {
        report.to_text()
    };
    emit(g, &text)
}

fn gen_synth(config: &RunConfig, g: &GlobalArgs, a: &GenSynthArgs) -> Result<()> {
    let spec = SyntheticSpec {
        scene_count: a.scenes,
        frames_per_scene: a.frames,
        descriptors_per_frame: a.descriptors,
        dim: a.dim,
        query_count: a.queries,
        noise_sigma: a.noise,
        seed: config.seed,
        sphere_radius: a.radius,
        cloud_std: a.cloud_std,
        training_frames: a.training_frames,
    };
    let data = gen_synthetic(&spec)?;
    let dir = g.output.clone().unwrap_or_else(|| PathBuf::from("synth"));
    let files = write_synthetic(&data, &dir)?;
    let mut out = String::new();
    writeln!(out, "manifest = {}", files.manifest.display())?;
    writeln!(out, "train_manifest = {}", files.train_manifest.display())?;
    writeln!(out, "queries = {}", files.queries.display())?;
    writeln!(out, "ground_truth = {}", files.ground_truth.display())?;
    writeln!(out, "scenes = {}", data.scenes.len())?;
    writeln!(out, "shots = {}", data.shots.len())?;
    print!("{out}");
    Ok(())
}
