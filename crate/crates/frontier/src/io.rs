//! On-disk formats and the write-to-temp-then-rename discipline.
//!
//! - `samples.csv`: one row per sample with the step, the dash-joined
//!   encoding, one column per objective, reward, temperature and any target
//!   columns. Reals use the shortest decimal form that round-trips.
//! - `front.json`: `{"spec": {...}, "entries": [{"encoding", "objectives"}]}`
//!   in encoding order.
//! - `metrics.json`: dominated area, hypervolume, front size, histograms and
//!   the normalization they were computed under.
//! - `run.json`: what produced a run directory, used to refuse comparisons
//!   across different problems.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use frontier_core::algorithms::{Algorithm, RunRecord};
use frontier_core::metrics::{dominated_area_2d, hypervolume, sample_histogram, NormalizationSpec};
use frontier_core::space::BenchmarkDef;
use frontier_core::{Evaluator, ObjectiveSpec, ParetoArchive};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Writes `bytes` to a sibling temporary file and renames it over `path`,
/// so readers see either the old file, the complete new one, or nothing.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let dir = path
        .parent()
        .filter(|d| !d.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let name = path
        .file_name()
        .ok_or_else(|| CliError::Runtime(format!("{} has no file name", path.display())))?;
    let tmp = dir.join(format!(
        ".{}.{}.tmp",
        name.to_string_lossy(),
        std::process::id()
    ));
    let result = fs::write(&tmp, bytes).and_then(|()| fs::rename(&tmp, path));
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp);
        return Err(CliError::io(path, e));
    }
    Ok(())
}

pub fn to_json<T: Serialize>(value: &T) -> CliResult<String> {
    let mut s =
        serde_json::to_string_pretty(value).map_err(|e| CliError::Runtime(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    write_atomic(path, to_json(value)?.as_bytes())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn real(x: f64) -> String {
    format!("{x}")
}

/// Target column names: one per constrained objective.
pub fn target_columns(spec: &ObjectiveSpec) -> Vec<String> {
    spec.names()
        .iter()
        .skip(1)
        .map(|n| format!("target_{n}"))
        .collect()
}

/// Renders the samples of a run as CSV.
pub fn samples_csv(record: &RunRecord, spec: &ObjectiveSpec) -> CliResult<String> {
    let targets = target_columns(spec);
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["step".to_string(), "encoding".to_string()];
    header.extend(spec.names().iter().cloned());
    header.push("reward".into());
    header.push("temperature".into());
    header.extend(targets.iter().cloned());
    let err = |e: csv::Error| CliError::Runtime(format!("samples.csv: {e}"));
    w.write_record(&header).map_err(err)?;
    for s in &record.samples {
        let mut row = vec![s.step.to_string(), s.encoding.to_string()];
        row.extend(s.objectives.values().iter().map(|&v| real(v)));
        row.push(s.reward.map(real).unwrap_or_default());
        row.push(s.temperature.map(real).unwrap_or_default());
        for i in 0..targets.len() {
            row.push(s.targets.get(i).map(|&t| real(t)).unwrap_or_default());
        }
        w.write_record(&row).map_err(err)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| CliError::Runtime(format!("samples.csv: {e}")))?;
    String::from_utf8(bytes).map_err(|e| CliError::Runtime(e.to_string()))
}

/// The front with its entries in encoding order, as written to `front.json`.
pub fn canonical_front(front: &ParetoArchive) -> ParetoArchive {
    ParetoArchive::from_entries(front.spec().clone(), front.canonical())
        .expect("entries of a valid archive form a valid archive")
}

/// Per-axis histogram over the axis's native range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub range: (f64, f64),
    pub counts: Vec<usize>,
}

/// How the metrics were normalized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationNote {
    pub axes: NormalizationSpec,
    pub reference: Vec<f64>,
    pub note: String,
}

impl NormalizationNote {
    pub fn new(norm: &NormalizationSpec, reference: Option<&[f64]>) -> Self {
        NormalizationNote {
            axes: norm.clone(),
            reference: reference.map_or_else(|| vec![0.0; norm.m()], <[f64]>::to_vec),
            note: "every axis, quality included, is rescaled from its (lo, hi) range to a \
                   maximized [0, 1] axis; the reference corner is given in those units"
                .into(),
        }
    }
}

/// Contents of `metrics.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    /// Only defined for two objectives.
    pub dominated_area: Option<f64>,
    pub hypervolume: f64,
    pub front_size: usize,
    pub n_samples: usize,
    pub histograms: BTreeMap<String, Histogram>,
    pub normalization: NormalizationNote,
}

/// Front metrics without sample histograms.
pub fn front_metrics(
    front: &ParetoArchive,
    reference: Option<&[f64]>,
) -> CliResult<(Option<f64>, f64, NormalizationSpec)> {
    let norm = NormalizationSpec::from_spec(front.spec());
    let area = if norm.m() == 2 {
        Some(dominated_area_2d(front, &norm).map_err(|e| CliError::Runtime(e.to_string()))?)
    } else {
        None
    };
    let hv = hypervolume(front, reference, &norm)
        .map_err(|e| CliError::Runtime(format!("hypervolume: {e}")))?;
    Ok((area, hv, norm))
}

pub fn run_metrics(
    record: &RunRecord,
    bins: usize,
    reference: Option<&[f64]>,
) -> CliResult<RunMetrics> {
    let spec = record.final_front.spec();
    let (dominated_area, hypervolume, norm) = front_metrics(&record.final_front, reference)?;
    let mut histograms = BTreeMap::new();
    for (axis, name) in spec.names().iter().enumerate() {
        let counts = sample_histogram(record, axis, bins, &norm)
            .map_err(|e| CliError::Runtime(e.to_string()))?;
        let a = norm.axes[axis];
        histograms.insert(
            name.clone(),
            Histogram {
                range: (a.lo, a.hi),
                counts,
            },
        );
    }
    Ok(RunMetrics {
        dominated_area,
        hypervolume,
        front_size: record.final_front.len(),
        n_samples: record.samples.len(),
        histograms,
        normalization: NormalizationNote::new(&norm, reference),
    })
}

/// Contents of `run.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub algorithm: Algorithm,
    pub seed: u64,
    pub fingerprint: u64,
    pub space: BenchmarkDef,
    pub evaluator: Evaluator,
    pub objectives: ObjectiveSpec,
}

impl RunManifest {
    /// Runs are comparable when they searched the same problem.
    pub fn same_problem(&self, other: &RunManifest) -> bool {
        self.space == other.space
            && self.evaluator == other.evaluator
            && self.objectives == other.objectives
    }
}
