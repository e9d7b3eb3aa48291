//! The exact front by enumeration, for spaces small enough to enumerate
//! and evaluators without noise.

use std::path::PathBuf;

use frontier_core::algorithms::brute_force_front;
use frontier_core::ParetoArchive;
use serde::{Deserialize, Serialize};

use crate::config::Experiment;
use crate::error::{CliError, CliResult};
use crate::io::{canonical_front, front_metrics, write_json, NormalizationNote};

/// Contents of `oracle_metrics.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleMetrics {
    pub dominated_area: Option<f64>,
    pub hypervolume: f64,
    pub front_size: usize,
    /// Number of encodings enumerated.
    pub cardinality: u128,
    pub normalization: NormalizationNote,
}

/// Computes the exact front, refusing over-cap spaces and noisy evaluators.
pub fn oracle_front(exp: &Experiment) -> CliResult<ParetoArchive> {
    let cardinality = exp.problem.space.cardinality();
    if cardinality > exp.enumeration_cap {
        return Err(CliError::Refused(format!(
            "space has {cardinality} encodings, above the enumeration cap of {}",
            exp.enumeration_cap
        )));
    }
    if !exp.problem.evaluator.is_deterministic() {
        return Err(CliError::Refused(
            "the oracle needs a noise-free evaluator; this config uses a noisy surrogate".into(),
        ));
    }
    let front = brute_force_front(&exp.problem, exp.enumeration_cap)
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    Ok(canonical_front(&front))
}

/// Writes `oracle_front.json` and `oracle_metrics.json` under the output
/// root and returns their paths.
pub fn run_oracle(exp: &Experiment) -> CliResult<(OracleMetrics, [PathBuf; 2])> {
    let front = oracle_front(exp)?;
    let (dominated_area, hypervolume, norm) = front_metrics(&front, exp.reference.as_deref())?;
    let metrics = OracleMetrics {
        dominated_area,
        hypervolume,
        front_size: front.len(),
        cardinality: exp.problem.space.cardinality(),
        normalization: NormalizationNote::new(&norm, exp.reference.as_deref()),
    };
    let front_path = exp.out.join("oracle_front.json");
    let metrics_path = exp.out.join("oracle_metrics.json");
    write_json(&front_path, &front)?;
    write_json(&metrics_path, &metrics)?;
    Ok((metrics, [front_path, metrics_path]))
}
