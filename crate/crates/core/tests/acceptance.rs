//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

mod common;

use std::collections::BTreeSet;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use scenebloom::baseline::{
    build_frame_fv_star, build_scene_fv_star, build_shot_fv_star, hamming_rank, rerank_shortlist, BinarizedFv,
    BinaryCode, FvStarDatabase,
};
use scenebloom::embedding::{
    fit_gmm, point_index, reconstruct_hard_fv, DescriptorSet, DiagonalGmm, GmmOptions, PcaModel,
};
use scenebloom::eval::{average_precision, run_benchmark, BenchmarkOptions, BloomRetriever, SyntheticSpec};
use scenebloom::filter::{bit_budget, FilterConfig, FilterSet, SceneFilter};
use scenebloom::hashing::{sample_hash_bank, BucketId, HashBank, HashConfig, HashDomain, HashFamily};
use scenebloom::index::{
    build_bf_gd, build_bf_pi, Hit, IdfWeights, InvertedIndex, Pipeline, Scene, ScoringConfig, Searcher,
};
use scenebloom::models::{train_models, TrainingOptions};

use common::*;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    check(
        elapsed < limit,
        format!("took {:.1}s, limit {:.0}s", elapsed.as_secs_f64(), limit.as_secs_f64()),
    )
}

fn no_false_negatives() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut checked = 0usize;
    for partitioned in [true, false] {
        for trial in 0..1000 {
            let functions = rng.random_range(1..=64);
            let config = if partitioned {
                FilterConfig::partitioned(functions, 1 << rng.random_range(1..=12))
            } else {
                FilterConfig::non_partitioned(functions, rng.random_range(2..=1 << 16))
            };
            let limit = config.bucket_limit();
            let mut filter = SceneFilter::new("s", config).map_err(|e| e.to_string())?;
            let inserted: Vec<Vec<BucketId>> = (0..rng.random_range(1..=20))
                .map(|_| {
                    (0..functions)
                        .map(|_| BucketId(rng.random_range(0..limit) as u32))
                        .collect()
                })
                .collect();
            for tuple in &inserted {
                filter.insert(tuple).map_err(|e| e.to_string())?;
            }
            for tuple in &inserted {
                checked += 1;
                if !filter.contains(tuple).map_err(|e| e.to_string())? {
                    return Err(format!(
                        "variant partitioned={partitioned} trial {trial}: inserted tuple missing"
                    ));
                }
            }
        }
    }
    within(start.elapsed(), Duration::from_secs(10))?;
    Ok(format!(
        "{checked} tuples positive in {:.2}s",
        start.elapsed().as_secs_f64()
    ))
}

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let data = small_dataset(30, 21);
    let families = [HashFamily::LshC, HashFamily::LshS, HashFamily::LshB, HashFamily::Vq];
    let cases = [
        (Pipeline::BfPi, HashDomain::Gbh),
        (Pipeline::BfGd, HashDomain::Gbh),
        (Pipeline::BfGd, HashDomain::Vbh),
    ];
    let scorings = [
        ScoringConfig::hash_matches(),
        ScoringConfig::tfidf(0.5),
        ScoringConfig::tfidf(1.0),
    ];
    let mut queries: Vec<&DescriptorSet> = data.queries.iter().map(|q| &q.descriptors).collect();
    queries.push(&data.scenes[3].frames[2]);
    queries.push(&data.scenes[17].frames[0]);
    let mut compared = 0usize;
    for (pipeline, domain) in cases {
        for (f, &family) in families.iter().enumerate() {
            let models = models_for(&data, pipeline, family, domain, 4, 4, 5, 100 + f as u64);
            let filter = partitioned(&models);
            let index = match pipeline {
                Pipeline::BfGd => build_bf_gd(&data.scenes, &models, filter),
                Pipeline::BfPi => build_bf_pi(&data.scenes, &models, filter),
            }
            .map_err(|e| e.to_string())?;
            let dense = oracle_filters(&models, pipeline, &filter, &data.scenes);
            let weights = oracle_idf(&dense);
            let label = format!("{pipeline} {family} {domain}");
            for (l, w) in weights.iter().enumerate() {
                check(
                    index.idf().weight(l as u64) == *w,
                    format!("{label}: idf differs at bit {l}"),
                )?;
            }
            let searcher = Searcher::new(&index, &models).map_err(|e| e.to_string())?;
            for q in &queries {
                let mut probes = searcher.probes(q).map_err(|e| e.to_string())?;
                let mut expected = oracle_probes(&models, pipeline, &filter, q);
                probes.sort_unstable();
                expected.sort_unstable();
                check(probes == expected, format!("{label}: probe sets differ"))?;
                for scoring in &scorings {
                    let got = index_scores(
                        &searcher
                            .search(q, scoring, index.scene_count())
                            .map_err(|e| e.to_string())?,
                        &index,
                    );
                    let want = dense_scores(&dense, &weights, scoring, &expected);
                    for (g, w) in got.iter().zip(&want) {
                        let ok = match scoring.mode {
                            scenebloom::index::ScoringMode::HashMatches => g == w,
                            scenebloom::index::ScoringMode::TfIdf => relative_close(*g, *w, 1e-9),
                        };
                        check(ok, format!("{label} {}: score {g} vs dense {w}", scoring.mode))?;
                        compared += 1;
                    }
                }
            }
        }
    }
    within(start.elapsed(), Duration::from_secs(60))?;
    Ok(format!(
        "{compared} scene scores match over 2 pipelines x 4 families x 2 modes in {:.1}s",
        start.elapsed().as_secs_f64()
    ))
}

fn random_gmm(rng: &mut ChaCha8Rng, k: usize, d: usize) -> DiagonalGmm {
    let raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.1..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let weights = raw.iter().map(|w| w / total).collect();
    let means = (0..k * d).map(|_| 2.0 * rng.sample::<f64, _>(StandardNormal)).collect();
    let variances = (0..k * d).map(|_| rng.random_range(0.2..3.0)).collect();
    DiagonalGmm::new(weights, means, variances).unwrap()
}

fn random_set(rng: &mut ChaCha8Rng, n: usize, d: usize, scale: f64) -> DescriptorSet {
    let data = (0..n * d)
        .map(|_| scale * rng.sample::<f64, _>(StandardNormal))
        .collect();
    DescriptorSet::new("x", d, data).unwrap()
}

fn hard_fv_fidelity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    for instance in 0..100 {
        let (k, d) = (rng.random_range(1..=8), rng.random_range(1..=8));
        let gmm = random_gmm(&mut rng, k, d);
        let n = rng.random_range(1..=40);
        let set = random_set(&mut rng, n, d, 2.5);
        let triplets: Vec<_> = set.rows().map(|x| point_index(&gmm, x).unwrap()).collect();
        let got = reconstruct_hard_fv(&triplets, k, d, n).map_err(|e| e.to_string())?;
        // Masked posteriors: keep only the winning component of each point.
        let mut want = vec![0.0; k * d];
        for x in set.rows() {
            let g = oracle_posteriors(&gmm, x);
            let r = first_max(&g);
            for j in 0..d {
                want[r * d + j] +=
                    g[r] * (x[j] - gmm.mean(r)[j]) / (gmm.variance(r)[j].sqrt() * gmm.weights()[r].sqrt()) / n as f64;
            }
        }
        for (a, b) in got.values().iter().zip(&want) {
            worst = worst.max((a - b).abs());
        }
        check(worst <= 1e-9, format!("instance {instance}: deviation {worst:e}"))?;
    }
    Ok(format!("100 instances, max deviation {worst:.1e}"))
}

fn em_monotonicity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut steps = 0usize;
    for corpus_no in 0..50 {
        let d = rng.random_range(1..=5);
        let k = rng.random_range(1..=5);
        let truth_k = rng.random_range(1..=4);
        let truth = random_gmm(&mut rng, truth_k, d);
        let corpus: Vec<DescriptorSet> = (0..rng.random_range(2..=6))
            .map(|_| {
                let n = rng.random_range(10..=60);
                let rows: Vec<Vec<f64>> = (0..n)
                    .map(|_| {
                        let c = rng.random_range(0..truth.components());
                        (0..d)
                            .map(|j| {
                                truth.mean(c)[j] + truth.variance(c)[j].sqrt() * rng.sample::<f64, _>(StandardNormal)
                            })
                            .collect()
                    })
                    .collect();
                DescriptorSet::from_rows("c", &rows).unwrap()
            })
            .collect();
        let options = GmmOptions {
            components: k,
            seed: corpus_no,
            max_iters: 60,
            tol: 0.0,
        };
        let fit = fit_gmm(&corpus, &options).map_err(|e| e.to_string())?;
        for w in fit.log_likelihood.windows(2) {
            steps += 1;
            check(
                w[1] >= w[0] - 1e-9,
                format!("corpus {corpus_no}: log-likelihood fell {} -> {}", w[0], w[1]),
            )?;
        }
        let again = fit_gmm(&corpus, &options).map_err(|e| e.to_string())?;
        check(
            again.model.to_bytes().unwrap() == fit.model.to_bytes().unwrap(),
            format!("corpus {corpus_no}: refit not bit-identical"),
        )?;
    }
    Ok(format!(
        "50 corpora, {steps} EM steps non-decreasing, refits bit-identical"
    ))
}

fn lsh_collisions() -> Outcome {
    let (pairs, dim) = (10_000, 16);
    let config = HashConfig {
        family: HashFamily::LshC,
        domain: HashDomain::Vbh,
        functions: pairs,
        bits: 1,
        input_dim: dim,
        seed: 5,
    };
    let bank = sample_hash_bank(&config).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut report = Vec::new();
    for degrees in [30.0f64, 60.0, 90.0] {
        let theta = degrees.to_radians();
        let mut collisions = 0usize;
        for i in 0..pairs {
            let (u, w) = unit_pair(&mut rng, dim, theta);
            if bank.hash(i, &u).unwrap() == bank.hash(i, &w).unwrap() {
                collisions += 1;
            }
        }
        let rate = collisions as f64 / pairs as f64;
        let expected = 1.0 - theta / std::f64::consts::PI;
        check(
            (rate - expected).abs() <= 0.02,
            format!("{degrees} deg: rate {rate:.4} vs {expected:.4}"),
        )?;
        report.push(format!("{degrees}deg {rate:.3}/{expected:.3}"));
    }
    Ok(format!("{pairs} pairs per angle: {}", report.join(", ")))
}

/// Two unit vectors at angle `theta`, built by Gram-Schmidt.
fn unit_pair(rng: &mut ChaCha8Rng, dim: usize, theta: f64) -> (Vec<f64>, Vec<f64>) {
    let normalize = |v: Vec<f64>| {
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.into_iter().map(|x| x / n).collect::<Vec<f64>>()
    };
    let u = normalize((0..dim).map(|_| rng.sample(StandardNormal)).collect());
    let r: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
    let dot: f64 = r.iter().zip(&u).map(|(a, b)| a * b).sum();
    let v = normalize(r.iter().zip(&u).map(|(a, b)| a - dot * b).collect());
    let w = u
        .iter()
        .zip(&v)
        .map(|(a, b)| theta.cos() * a + theta.sin() * b)
        .collect();
    (u, w)
}

fn bit_budget_equivalence() -> Outcome {
    let mut parts = Vec::new();
    for n in [4u32, 8, 12] {
        let p = FilterConfig::partitioned(512, 1 << n);
        let np = FilterConfig::non_partitioned(512, 1 << (n + 9));
        p.validate().map_err(|e| e.to_string())?;
        np.validate().map_err(|e| e.to_string())?;
        check(
            bit_budget(&p) == bit_budget(&np) && p.bit_budget() == bit_budget(&p),
            format!("n={n}: {} vs {}", bit_budget(&p), bit_budget(&np)),
        )?;
        parts.push(format!("n={n}: {}", bit_budget(&p)));
    }
    Ok(parts.join(", "))
}

fn planted_benchmark() -> Outcome {
    let start = Instant::now();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .map_err(|e| e.to_string())?;
    let spec = SyntheticSpec {
        scene_count: 100,
        frames_per_scene: 30,
        descriptors_per_frame: 64,
        dim: 8,
        query_count: 100,
        noise_sigma: 0.1,
        seed: 7,
        training_frames: 1500,
        ..SyntheticSpec::default()
    };
    let maps = pool.install(|| -> Result<Vec<f64>, String> {
        let data = scenebloom::eval::gen_synthetic(&spec).map_err(|e| e.to_string())?;
        let mut maps = Vec::new();
        for pipeline in [Pipeline::BfPi, Pipeline::BfGd] {
            let options = TrainingOptions {
                pipeline,
                pca_dim: 8,
                gmm: GmmOptions {
                    components: 16,
                    seed: 7,
                    ..GmmOptions::default()
                },
                family: HashFamily::Vq,
                domain: HashDomain::Gbh,
                functions: 16,
                bits: 10,
                hash_seed: 7,
            };
            let models = train_models(&data.training, &options)
                .map_err(|e| e.to_string())?
                .models;
            let filter = FilterConfig::partitioned(16, 1 << 10);
            let index = match pipeline {
                Pipeline::BfPi => build_bf_pi(&data.scenes, &models, filter),
                Pipeline::BfGd => build_bf_gd(&data.scenes, &models, filter),
            }
            .map_err(|e| e.to_string())?;
            let retriever =
                BloomRetriever::new(&index, &models, ScoringConfig::tfidf(0.5)).map_err(|e| e.to_string())?;
            let report = run_benchmark(
                &retriever,
                &data.queries,
                &data.ground_truth,
                &BenchmarkOptions::default(),
            )
            .map_err(|e| e.to_string())?;
            maps.push(report.map);
        }
        Ok(maps)
    })?;
    let (pi, gd) = (maps[0], maps[1]);
    check(pi >= 0.90, format!("BF-PI mAP {pi:.4} below 0.90"))?;
    check(pi >= gd, format!("BF-PI mAP {pi:.4} below BF-GD {gd:.4}"))?;
    within(start.elapsed(), Duration::from_secs(300))?;
    Ok(format!(
        "BF-PI mAP {pi:.4}, BF-GD mAP {gd:.4}, single thread {:.1}s",
        start.elapsed().as_secs_f64()
    ))
}

fn ranking(index: &InvertedIndex, searcher: &Searcher, query: &DescriptorSet, scoring: &ScoringConfig) -> Vec<u32> {
    searcher
        .search(query, scoring, index.scene_count())
        .unwrap()
        .hits
        .iter()
        .map(|h| h.ordinal)
        .collect()
}

fn tfidf_degenerate() -> Outcome {
    let data = small_dataset(40, 8);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut pairs = 0;
    for (pipeline, family) in [(Pipeline::BfPi, HashFamily::Vq), (Pipeline::BfGd, HashFamily::LshC)] {
        let models = models_for(&data, pipeline, family, HashDomain::Gbh, 4, 4, 4, 8);
        let filter = partitioned(&models);
        for _ in 0..10 {
            let count = rng.random_range(5..=data.scenes.len());
            let scenes: Vec<Scene> = data.scenes.choose_multiple(&mut rng, count).cloned().collect();
            let index = match pipeline {
                Pipeline::BfPi => build_bf_pi(&scenes, &models, filter),
                Pipeline::BfGd => build_bf_gd(&scenes, &models, filter),
            }
            .map_err(|e| e.to_string())?;
            let uniform = IdfWeights::uniform(&index);
            let searcher = Searcher::new(&index, &models)
                .and_then(|s| s.with_idf(&uniform))
                .map_err(|e| e.to_string())?;
            let query = &data.queries[rng.random_range(0..data.queries.len())].descriptors;
            let hash = ranking(&index, &searcher, query, &ScoringConfig::hash_matches());
            let tfidf = ranking(&index, &searcher, query, &ScoringConfig::tfidf(0.0));
            check(hash == tfidf, format!("{pipeline}: rankings differ"))?;
            pairs += 1;
        }
    }
    Ok(format!("{pairs} query/index pairs rank identically"))
}

fn ap_units() -> Outcome {
    let rel = |ids: &[&str]| ids.iter().map(|s| s.to_string()).collect::<BTreeSet<String>>();
    let cases = [
        (vec!["a", "b", "c"], rel(&["a"]), 1.0),
        (vec!["b", "a", "c"], rel(&["a"]), 0.5),
        (vec!["a", "x", "b", "y", "z"], rel(&["a", "b"]), (1.0 + 2.0 / 3.0) / 2.0),
    ];
    let mut got = Vec::new();
    for (ranking, relevant, want) in cases {
        let ap = average_precision(&ranking, &relevant).map_err(|e| e.to_string())?;
        check((ap - want).abs() <= 1e-12, format!("AP {ap} vs {want}"))?;
        got.push(format!("{ap:.4}"));
    }
    Ok(got.join(", "))
}

fn round_trip<T>(
    label: &str,
    dir: &std::path::Path,
    value: &T,
    write: impl Fn(&T, &std::path::Path) -> scenebloom::Result<()>,
    read: impl Fn(&std::path::Path) -> scenebloom::Result<T>,
) -> Result<(), String> {
    let (first, second) = (dir.join(format!("{label}.1")), dir.join(format!("{label}.2")));
    write(value, &first).map_err(|e| e.to_string())?;
    let back = read(&first).map_err(|e| e.to_string())?;
    write(&back, &second).map_err(|e| e.to_string())?;
    check(
        std::fs::read(&first).unwrap() == std::fs::read(&second).unwrap(),
        format!("{label} bytes changed"),
    )
}

fn serialization() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let dir = dir.path();
    let data = small_dataset(12, 10);
    let mut formats = Vec::new();
    for (pipeline, family, domain) in [
        (Pipeline::BfPi, HashFamily::Vq, HashDomain::Gbh),
        (Pipeline::BfGd, HashFamily::LshB, HashDomain::Vbh),
        (Pipeline::BfGd, HashFamily::LshS, HashDomain::Gbh),
    ] {
        let tag = format!("{pipeline}-{family}");
        let models = models_for(&data, pipeline, family, domain, 4, 4, 5, 10);
        round_trip(
            &format!("{tag}.pca"),
            dir,
            models.pca(),
            PcaModel::write,
            PcaModel::read,
        )?;
        round_trip(
            &format!("{tag}.gmm"),
            dir,
            models.gmm(),
            DiagonalGmm::write,
            DiagonalGmm::read,
        )?;
        round_trip(
            &format!("{tag}.bank"),
            dir,
            models.bank(),
            HashBank::write,
            HashBank::read,
        )?;
        for filter in [
            partitioned(&models),
            FilterConfig::non_partitioned(models.bank().len(), 3 * models.bank().config().buckets()),
        ] {
            let index = match pipeline {
                Pipeline::BfPi => build_bf_pi(&data.scenes, &models, filter),
                Pipeline::BfGd => build_bf_gd(&data.scenes, &models, filter),
            }
            .map_err(|e| e.to_string())?;
            let np = if filter.is_partitioned() { "p" } else { "np" };
            round_trip(
                &format!("{tag}.{np}.index"),
                dir,
                &index,
                InvertedIndex::write,
                InvertedIndex::read,
            )?;
            let set = FilterSet {
                config: filter,
                filters: index.scene_filters().map_err(|e| e.to_string())?,
            };
            round_trip(
                &format!("{tag}.{np}.filters"),
                dir,
                &set,
                FilterSet::write,
                FilterSet::read,
            )?;
        }
    }
    formats.extend(["QIVM", "QIVH", "QIVI", "QIVB"]);

    let models = models_for(&data, Pipeline::BfGd, HashFamily::LshC, HashDomain::Gbh, 4, 4, 5, 11);
    let (pca, gmm) = (models.pca(), models.gmm());
    let dbs = [
        build_scene_fv_star(&data.scenes, pca, gmm),
        build_shot_fv_star(&data.shots, pca, gmm),
        build_frame_fv_star(&data.scenes, pca, gmm),
    ];
    for (i, db) in dbs.into_iter().enumerate() {
        let db = db.map_err(|e| e.to_string())?;
        round_trip(
            &format!("fvstar{i}"),
            dir,
            &db,
            FvStarDatabase::write,
            FvStarDatabase::read,
        )?;
    }
    formats.push("QIVF");

    for (i, frame) in data.scenes[0]
        .frames
        .iter()
        .chain(data.training.iter().take(3))
        .enumerate()
    {
        round_trip(
            &format!("frame{i}"),
            dir,
            frame,
            DescriptorSet::write,
            DescriptorSet::read,
        )?;
    }
    let empty = DescriptorSet::empty("e", 6);
    round_trip("empty", dir, &empty, DescriptorSet::write, DescriptorSet::read)?;
    formats.push("QIVD");
    Ok(format!("{} byte-identical", formats.join("/")))
}

fn random_code(rng: &mut ChaCha8Rng, bits: usize) -> BinaryCode {
    BinaryCode::from_bits(&(0..bits).map(|_| rng.random_bool(0.5)).collect::<Vec<_>>())
}

fn baseline_parity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let entries: Vec<BinarizedFv> = (0..1000)
        .map(|i| BinarizedFv {
            code: random_code(&mut rng, 128),
            owner_id: format!("e{i}"),
            scene_id: format!("s{}", i / 4),
        })
        .collect();
    for _ in 0..20 {
        let query = random_code(&mut rng, 128);
        let top_k = rng.random_range(1..=1000);
        let mut naive: Vec<(u32, u32)> = entries
            .iter()
            .enumerate()
            .map(|(i, e)| {
                (
                    i as u32,
                    (0..128).filter(|&b| e.code.bit(b) != query.bit(b)).count() as u32,
                )
            })
            .collect();
        naive.sort_by(|a, b| a.1.cmp(&b.1).then(a.0.cmp(&b.0)));
        naive.truncate(top_k);
        check(
            hamming_rank(&query, &entries, top_k).map_err(|e| e.to_string())? == naive,
            "hamming_rank disagrees with per-bit scan",
        )?;
    }

    let shots = FvStarDatabase::new(scenebloom::baseline::Granularity::Shot, 8, 16, entries.clone())
        .map_err(|e| e.to_string())?;
    let mut reranks = 0;
    for _ in 0..200 {
        let len = rng.random_range(0..=60);
        let ranking: Vec<Hit> = (0..len)
            .map(|i| {
                let s = rng.random_range(0..300);
                Hit {
                    scene_id: format!("s{s}"),
                    ordinal: i as u32,
                    score: 0.0,
                }
            })
            .collect();
        let shortlist = rng.random_range(0..=70);
        let query = random_code(&mut rng, 128);
        let out = rerank_shortlist(&ranking, &shots, &query, shortlist).map_err(|e| e.to_string())?;
        let cut = shortlist.min(len);
        let key = |h: &Hit| (h.scene_id.clone(), h.ordinal);
        let mut before: Vec<_> = ranking[..cut].iter().map(key).collect();
        let mut after: Vec<_> = out.hits[..cut].iter().map(key).collect();
        before.sort();
        after.sort();
        check(before == after, "reranked shortlist is not a permutation")?;
        check(out.hits[cut..] == ranking[cut..], "hits beyond the shortlist moved")?;
        reranks += 1;
    }
    Ok(format!(
        "20 queries over 1000 entries match, {reranks} reranks are permutations"
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        ("no false negatives", no_false_negatives),
        ("inverted index equals dense scan", oracle_equivalence),
        ("hard FV reconstruction", hard_fv_fidelity),
        ("EM monotonicity and determinism", em_monotonicity),
        ("LSH-C collision rates", lsh_collisions),
        ("bit budget equivalence", bit_budget_equivalence),
        ("planted retrieval benchmark", planted_benchmark),
        ("TFIDF degenerate case", tfidf_degenerate),
        ("AP unit values", ap_units),
        ("serialization round trip", serialization),
        ("baseline parity", baseline_parity),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        match run() {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {why}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
