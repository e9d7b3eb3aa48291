//! Multi-objective search driven by a policy gradient over non-stationary
//! rewards.
//!
//! The crate is `no_std` (with `alloc`) and holds the pure algorithmic parts:
//!
//! - [`objectives`]: dominance, front extraction and the live Pareto archive.
//! - [`space`]: enumerable decision-sequence spaces, cost tables and evaluators.
//! - [`policy`]: a factored Boltzmann policy with REINFORCE updates.
//! - [`schedule`]: cosine warm-restart temperatures, target annealing and
//!   locality-preserving grid traversals.
//! - [`rewards`]: annealing desirability and dominance-based credit.
//! - [`algorithms`]: ADF, ADC, random search, multi-run desirability and the
//!   brute-force oracle.
//! - [`metrics`]: dominated area, hypervolume and sample histograms.
//!
//! File formats, configuration and the command line live in the `frontier`
//! crate.
#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod algorithms;
pub mod error;
pub mod metrics;
pub mod objectives;
pub mod policy;
pub mod rewards;
pub mod schedule;
pub mod space;

pub use error::{Error, Result};
pub use objectives::{
    dominates, extract_pareto_front, ArchiveEntry, ArchiveStats, InsertOutcome, ObjectiveSpec,
    ObjectiveVector, Orientation, ParetoArchive,
};
pub use space::{Encoding, Evaluator, EvaluatorKind, Problem, SequenceSpace};
