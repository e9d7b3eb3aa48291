//! Seeded execution of a configured experiment.
//!
//! Seeds fan out to a rayon pool. Each worker owns its run's policy and RNG
//! and writes only to its own run directory; results are merged in seed
//! order, so outputs do not depend on the worker count.

use std::path::PathBuf;

use frontier_core::algorithms::{run_adc, run_adf, run_mdf, run_random, Algorithm, RunRecord};
use frontier_core::policy::PolicyParams;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{Experiment, Plan, WORKERS_ENV};
use crate::error::{CliError, CliResult};
use crate::io::{
    canonical_front, run_metrics, samples_csv, write_atomic, write_json, RunManifest, RunMetrics,
};

/// Executes one seeded run in memory. Returns the final policy for the
/// policy-gradient algorithms.
pub fn execute(exp: &Experiment, seed: u64) -> CliResult<(RunRecord, Option<PolicyParams>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = &exp.problem;
    let fail = |e: frontier_core::Error| {
        CliError::Runtime(format!("{} seed {seed}: {e}", exp.algorithm().tag()))
    };
    let (record, policy) = match &exp.plan {
        Plan::Adf(c) => {
            let (r, pol) = run_adf(p, exp.policy.clone(), c, &mut rng).map_err(fail)?;
            (r, Some(pol))
        }
        Plan::Adc(c) => {
            let (r, pol) = run_adc(p, exp.policy.clone(), c, &mut rng).map_err(fail)?;
            (r, Some(pol))
        }
        Plan::Random { n_steps } => (run_random(p, *n_steps, &mut rng).map_err(fail)?, None),
        Plan::Mdf(c) => (run_mdf(p, &exp.policy, c, &mut rng).map_err(fail)?, None),
    };
    Ok((record.with_seed(seed), policy))
}

/// Executes one run and writes its directory: `samples.csv`, `front.json`,
/// `metrics.json`, `run.json` and, for policy-gradient runs, `policy.json`.
pub fn run_one(exp: &Experiment, seed: u64) -> CliResult<RunMetrics> {
    let (record, policy) = execute(exp, seed)?;
    let dir = exp.run_dir(seed);
    let spec = exp.problem.objective_spec();
    let metrics = run_metrics(&record, exp.bins, exp.reference.as_deref())?;
    write_atomic(
        &dir.join("samples.csv"),
        samples_csv(&record, &spec)?.as_bytes(),
    )?;
    write_json(
        &dir.join("front.json"),
        &canonical_front(&record.final_front),
    )?;
    if let Some(policy) = policy {
        write_json(&dir.join("policy.json"), &policy)?;
    }
    write_json(
        &dir.join("run.json"),
        &RunManifest {
            algorithm: exp.algorithm(),
            seed,
            fingerprint: record.fingerprint,
            space: exp.def.clone(),
            evaluator: exp.problem.evaluator,
            objectives: spec,
        },
    )?;
    write_json(&dir.join("metrics.json"), &metrics)?;
    Ok(metrics)
}

/// Mean and sample standard deviation (zero for a single value).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanSd {
    pub mean: f64,
    pub sd: f64,
    pub n: usize,
}

impl MeanSd {
    pub fn of(values: &[f64]) -> Option<Self> {
        let n = values.len();
        if n == 0 {
            return None;
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let sd = if n > 1 {
            (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Some(MeanSd { mean, sd, n })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunStatus {
    Ok,
    Failed,
}

/// One row of `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedResult {
    pub seed: u64,
    pub status: RunStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dominated_area: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hypervolume: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub front_size: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Contents of `summary.json`: statistics over the successful seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub algorithm: Algorithm,
    pub runs: Vec<SeedResult>,
    pub dominated_area: Option<MeanSd>,
    pub hypervolume: Option<MeanSd>,
    pub failed: usize,
}

impl Summary {
    pub fn from_results(algorithm: Algorithm, results: Vec<(u64, CliResult<RunMetrics>)>) -> Self {
        let runs: Vec<SeedResult> = results
            .into_iter()
            .map(|(seed, r)| match r {
                Ok(m) => SeedResult {
                    seed,
                    status: RunStatus::Ok,
                    dominated_area: m.dominated_area,
                    hypervolume: Some(m.hypervolume),
                    front_size: Some(m.front_size),
                    error: None,
                },
                Err(e) => SeedResult {
                    seed,
                    status: RunStatus::Failed,
                    dominated_area: None,
                    hypervolume: None,
                    front_size: None,
                    error: Some(e.to_string()),
                },
            })
            .collect();
        let areas: Vec<f64> = runs.iter().filter_map(|r| r.dominated_area).collect();
        let hvs: Vec<f64> = runs.iter().filter_map(|r| r.hypervolume).collect();
        Summary {
            algorithm,
            dominated_area: MeanSd::of(&areas),
            hypervolume: MeanSd::of(&hvs),
            failed: runs
                .iter()
                .filter(|r| r.status == RunStatus::Failed)
                .count(),
            runs,
        }
    }
}

/// Worker count from the environment, if set.
pub fn workers_from_env() -> CliResult<Option<usize>> {
    match std::env::var(WORKERS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .map(Some)
            .ok_or_else(|| {
                CliError::Config(format!(
                    "{WORKERS_ENV}: expected a positive integer, got {v:?}"
                ))
            }),
        Err(_) => Ok(None),
    }
}

/// Runs every seed and writes `summary.json` last. Individual failures are
/// recorded in the summary rather than aborting the other seeds.
pub fn run_experiment(exp: &Experiment, workers: Option<usize>) -> CliResult<(Summary, PathBuf)> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = workers {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    let results: Vec<(u64, CliResult<RunMetrics>)> = pool.install(|| {
        exp.seeds
            .par_iter()
            .map(|&s| (s, run_one(exp, s)))
            .collect()
    });
    let summary = Summary::from_results(exp.algorithm(), results);
    let path = exp.out.join(exp.algorithm().tag()).join("summary.json");
    write_json(&path, &summary)?;
    Ok((summary, path))
}
