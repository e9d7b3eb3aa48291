//! Comparison tables across run directories: mean and SD of the front
//! metrics per algorithm, plus summed histograms for plotting.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use frontier_core::algorithms::Algorithm;
use frontier_core::space::BenchmarkDef;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::io::{read_json, write_atomic, write_json, Histogram, RunManifest, RunMetrics};
use crate::run::MeanSd;

/// One run directory found under the inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunEntry {
    pub dir: PathBuf,
    pub seed: u64,
    pub dominated_area: Option<f64>,
    pub hypervolume: f64,
    pub front_size: usize,
}

/// Aggregates of one algorithm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmRow {
    pub algorithm: Algorithm,
    pub runs: Vec<RunEntry>,
    pub dominated_area: Option<MeanSd>,
    pub hypervolume: MeanSd,
    pub front_size_mean: f64,
    /// Per-objective sample histograms summed over the runs.
    pub histograms: BTreeMap<String, Histogram>,
}

/// Contents of `compare.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub space: BenchmarkDef,
    pub algorithms: Vec<AlgorithmRow>,
}

/// Directories holding a `run.json`, searched recursively and sorted.
pub fn find_run_dirs(root: &Path) -> CliResult<Vec<PathBuf>> {
    if !root.is_dir() {
        return Err(CliError::Config(format!(
            "{} is not a directory",
            root.display()
        )));
    }
    let mut found = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        if dir.join("run.json").is_file() {
            found.push(dir);
            continue;
        }
        for entry in fs::read_dir(&dir).map_err(|e| CliError::io(&dir, e))? {
            let path = entry.map_err(|e| CliError::io(&dir, e))?.path();
            if path.is_dir() {
                stack.push(path);
            }
        }
    }
    found.sort();
    Ok(found)
}

fn add_histograms(
    into: &mut BTreeMap<String, Histogram>,
    from: &BTreeMap<String, Histogram>,
    dir: &Path,
) -> CliResult<()> {
    for (name, h) in from {
        match into.get_mut(name) {
            None => {
                into.insert(name.clone(), h.clone());
            }
            Some(acc) if acc.range == h.range && acc.counts.len() == h.counts.len() => {
                acc.counts
                    .iter_mut()
                    .zip(&h.counts)
                    .for_each(|(a, b)| *a += b);
            }
            Some(_) => {
                return Err(CliError::Refused(format!(
                    "{}: histogram {name:?} uses different bins from earlier runs",
                    dir.display()
                )))
            }
        }
    }
    Ok(())
}

/// Builds the comparison over every run under `roots`. Refuses runs of
/// different problems, whose normalizations are not comparable.
pub fn compare(roots: &[PathBuf]) -> CliResult<Comparison> {
    let mut dirs = Vec::new();
    for root in roots {
        dirs.extend(find_run_dirs(root)?);
    }
    if dirs.is_empty() {
        return Err(CliError::Config(
            "no run directories (with run.json) found".into(),
        ));
    }
    let mut first: Option<RunManifest> = None;
    let mut groups: BTreeMap<Algorithm, Vec<(RunEntry, RunMetrics)>> = BTreeMap::new();
    for dir in &dirs {
        let manifest: RunManifest = read_json(&dir.join("run.json"))?;
        let metrics: RunMetrics = read_json(&dir.join("metrics.json"))?;
        match &first {
            None => first = Some(manifest.clone()),
            Some(f) if !f.same_problem(&manifest) => {
                return Err(CliError::Refused(format!(
                    "{} searched a different problem from {}; normalizations are not comparable",
                    dir.display(),
                    dirs[0].display()
                )))
            }
            Some(_) => {}
        }
        let entry = RunEntry {
            dir: dir.clone(),
            seed: manifest.seed,
            dominated_area: metrics.dominated_area,
            hypervolume: metrics.hypervolume,
            front_size: metrics.front_size,
        };
        groups
            .entry(manifest.algorithm)
            .or_default()
            .push((entry, metrics));
    }
    let mut algorithms = Vec::new();
    for (algorithm, mut runs) in groups {
        runs.sort_by(|a, b| (a.0.seed, &a.0.dir).cmp(&(b.0.seed, &b.0.dir)));
        let mut histograms = BTreeMap::new();
        for (e, m) in &runs {
            add_histograms(&mut histograms, &m.histograms, &e.dir)?;
        }
        let areas: Vec<f64> = runs.iter().filter_map(|(e, _)| e.dominated_area).collect();
        let hvs: Vec<f64> = runs.iter().map(|(e, _)| e.hypervolume).collect();
        let sizes = runs.iter().map(|(e, _)| e.front_size as f64).sum::<f64>() / runs.len() as f64;
        algorithms.push(AlgorithmRow {
            algorithm,
            dominated_area: MeanSd::of(&areas),
            hypervolume: MeanSd::of(&hvs).expect("every group holds at least one run"),
            front_size_mean: sizes,
            histograms,
            runs: runs.into_iter().map(|(e, _)| e).collect(),
        });
    }
    Ok(Comparison {
        space: first.expect("at least one run").space,
        algorithms,
    })
}

/// The table as CSV, one row per algorithm.
pub fn comparison_csv(c: &Comparison) -> CliResult<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| CliError::Runtime(format!("compare.csv: {e}"));
    w.write_record([
        "algorithm",
        "runs",
        "dominated_area_mean",
        "dominated_area_sd",
        "hypervolume_mean",
        "hypervolume_sd",
        "front_size_mean",
    ])
    .map_err(err)?;
    for row in &c.algorithms {
        let (am, asd) = row
            .dominated_area
            .map_or((String::new(), String::new()), |a| {
                (a.mean.to_string(), a.sd.to_string())
            });
        w.write_record([
            row.algorithm.tag().to_string(),
            row.runs.len().to_string(),
            am,
            asd,
            row.hypervolume.mean.to_string(),
            row.hypervolume.sd.to_string(),
            row.front_size_mean.to_string(),
        ])
        .map_err(err)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| CliError::Runtime(format!("compare.csv: {e}")))?;
    String::from_utf8(bytes).map_err(|e| CliError::Runtime(e.to_string()))
}

/// Writes `compare.csv` and `compare.json` into `out`.
pub fn write_comparison(c: &Comparison, out: &Path) -> CliResult<[PathBuf; 2]> {
    let csv_path = out.join("compare.csv");
    let json_path = out.join("compare.json");
    write_atomic(&csv_path, comparison_csv(c)?.as_bytes())?;
    write_json(&json_path, c)?;
    Ok([csv_path, json_path])
}
