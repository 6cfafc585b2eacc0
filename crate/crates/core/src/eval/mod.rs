//! Ground truth, average precision, benchmark runs over any scene retriever,
//! multi-trial aggregation, and the synthetic dataset generator.

mod bench;
mod synth;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use bench::{run_benchmark, BenchmarkOptions, BloomRetriever, FvStarRetriever, Query, SceneRetriever};
pub use synth::{gen_synthetic, write_synthetic, SyntheticDataset, SyntheticFiles, SyntheticSpec};

use crate::error::{Error, Result};
use crate::io::write_file;

/// Relevant scenes per query.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GroundTruth {
    relevant: BTreeMap<String, BTreeSet<String>>,
}

impl GroundTruth {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, query_id: impl Into<String>, scene_id: impl Into<String>) {
        self.relevant
            .entry(query_id.into())
            .or_default()
            .insert(scene_id.into());
    }

    pub fn relevant(&self, query_id: &str) -> Result<&BTreeSet<String>> {
        self.relevant
            .get(query_id)
            .ok_or_else(|| Error::MissingGroundTruth(query_id.to_string()))
    }

    pub fn len(&self) -> usize {
        self.relevant.len()
    }

    pub fn is_empty(&self) -> bool {
        self.relevant.is_empty()
    }

    pub fn queries(&self) -> impl Iterator<Item = &str> {
        self.relevant.keys().map(String::as_str)
    }

    /// Parses `query<TAB>scene[,scene...]` lines; blank lines and `#`
    /// comments are skipped.
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut gt = GroundTruth::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let parse_err = |reason: &str| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                reason: reason.to_string(),
            };
            let (query, scenes) = line
                .split_once('\t')
                .ok_or_else(|| parse_err("expected query<TAB>scene[,scene...]"))?;
            let scenes: Vec<&str> = scenes.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
            if query.trim().is_empty() || scenes.is_empty() {
                return Err(parse_err("query id and at least one scene id are required"));
            }
            for scene in scenes {
                gt.insert(query.trim(), scene);
            }
        }
        Ok(gt)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (query, scenes) in &self.relevant {
            let scenes: Vec<&str> = scenes.iter().map(String::as_str).collect();
            let _ = writeln!(out, "{query}\t{}", scenes.join(","));
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_file(path, self.to_text().as_bytes())
    }
}

/// Mean of the precision at each rank holding a relevant scene, over all
/// relevant scenes. Relevant scenes missing from the ranking count as 0.
pub fn average_precision<S: AsRef<str>>(ranking: &[S], relevant: &BTreeSet<String>) -> Result<f64> {
    if relevant.is_empty() {
        return Err(Error::EmptyRelevantSet);
    }
    let mut found = 0usize;
    let mut sum = 0.0;
    for (rank, scene) in ranking.iter().enumerate() {
        if relevant.contains(scene.as_ref()) {
            found += 1;
            sum += found as f64 / (rank + 1) as f64;
        }
    }
    Ok(sum / relevant.len() as f64)
}

/// Arithmetic mean of per-query APs.
pub fn mean_ap(aps: &[f64]) -> Result<f64> {
    if aps.is_empty() {
        return Err(Error::EmptySet("no queries to average".into()));
    }
    Ok(aps.iter().sum::<f64>() / aps.len() as f64)
}

/// Mean and population standard deviation.
pub fn mean_and_stddev(values: &[f64]) -> Result<(f64, f64)> {
    let mean = mean_ap(values)?;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / values.len() as f64;
    Ok((mean, var.sqrt()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub map: f64,
    pub map_stddev: f64,
    pub mean_latency_seconds: f64,
    pub index_bytes: u64,
    pub trials: usize,
    pub per_query_ap: BTreeMap<String, f64>,
}

impl EvalReport {
    /// Averages trial reports: per-query APs and latency are averaged, the
    /// mAP standard deviation is taken across trial mAPs.
    pub fn combine(trials: &[EvalReport]) -> Result<Self> {
        let first = trials
            .first()
            .ok_or_else(|| Error::EmptySet("no trials to combine".into()))?;
        let maps: Vec<f64> = trials.iter().map(|t| t.map).collect();
        let (_, map_stddev) = mean_and_stddev(&maps)?;
        let mut per_query_ap = BTreeMap::new();
        for query in first.per_query_ap.keys() {
            let aps = trials
                .iter()
                .map(|t| {
                    t.per_query_ap
                        .get(query)
                        .copied()
                        .ok_or(Error::MissingGroundTruth(query.clone()))
                })
                .collect::<Result<Vec<_>>>()?;
            per_query_ap.insert(query.clone(), mean_ap(&aps)?);
        }
        let aps: Vec<f64> = per_query_ap.values().copied().collect();
        let latencies: Vec<f64> = trials.iter().map(|t| t.mean_latency_seconds).collect();
        let bytes: u64 = trials.iter().map(|t| t.index_bytes).sum::<u64>() / trials.len() as u64;
        Ok(EvalReport {
            map: mean_ap(&aps)?,
            map_stddev,
            mean_latency_seconds: mean_ap(&latencies)?,
            index_bytes: bytes,
            trials: trials.iter().map(|t| t.trials).sum(),
            per_query_ap,
        })
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "map = {:.6}", self.map);
        let _ = writeln!(out, "map_stddev = {:.6}", self.map_stddev);
        let _ = writeln!(out, "mean_latency_seconds = {:.9}", self.mean_latency_seconds);
        let _ = writeln!(out, "index_bytes = {}", self.index_bytes);
        let _ = writeln!(out, "trials = {}", self.trials);
        for (query, ap) in &self.per_query_ap {
            let _ = writeln!(out, "ap.{query} = {ap:.6}");
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(items: &[&str]) -> BTreeSet<String> {
        items.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn ap_examples() {
        assert_eq!(average_precision(&["a", "b"], &set(&["a"])).unwrap(), 1.0);
        assert_eq!(average_precision(&["b", "a"], &set(&["a"])).unwrap(), 0.5);
        let ap = average_precision(&["a", "x", "b", "y", "z"], &set(&["a", "b"])).unwrap();
        assert!((ap - (1.0 + 2.0 / 3.0) / 2.0).abs() < 1e-12);
        assert_eq!(average_precision(&["x"], &set(&["a"])).unwrap(), 0.0);
        assert!(matches!(
            average_precision(&["x"], &set(&[])),
            Err(Error::EmptyRelevantSet)
        ));
    }

    #[test]
    fn map_and_stddev() {
        assert_eq!(mean_ap(&[1.0, 0.0]).unwrap(), 0.5);
        assert!(mean_ap(&[]).is_err());
        let (m, s) = mean_and_stddev(&[0.5, 0.5, 0.5]).unwrap();
        assert_eq!((m, s), (0.5, 0.0));
    }

    #[test]
    fn ground_truth_text_round_trip() {
        let text = "# comment\nq1\ts1,s2\n\nq2\ts3\n";
        let gt = GroundTruth::parse(text, Path::new("gt.tsv")).unwrap();
        assert_eq!(gt.relevant("q1").unwrap(), &set(&["s1", "s2"]));
        assert_eq!(GroundTruth::parse(&gt.to_text(), Path::new("gt.tsv")).unwrap(), gt);
        assert!(matches!(gt.relevant("q9"), Err(Error::MissingGroundTruth(_))));
        let bad = GroundTruth::parse("q1 s1\n", Path::new("gt.tsv"));
        assert!(matches!(bad, Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn combined_report_map_is_mean_of_query_aps() {
        let report = |a: f64, b: f64| EvalReport {
            map: (a + b) / 2.0,
            map_stddev: 0.0,
            mean_latency_seconds: 1.0,
            index_bytes: 10,
            trials: 1,
            per_query_ap: [("q1".to_string(), a), ("q2".to_string(), b)].into_iter().collect(),
        };
        let c = EvalReport::combine(&[report(1.0, 0.0), report(0.0, 0.0)]).unwrap();
        assert_eq!(c.map, 0.25);
        assert_eq!(c.map_stddev, 0.25);
        assert_eq!(c.trials, 2);
        let json: EvalReport = serde_json::from_str(&c.to_json()).unwrap();
        assert_eq!(json, c);
    }
}
