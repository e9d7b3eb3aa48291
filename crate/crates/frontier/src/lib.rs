//! Configuration, file formats, orchestration and the command line around
//! [`frontier_core`].
//!
//! - [`config`]: TOML/JSON run configuration with embedded defaults.
//! - [`io`]: `samples.csv`, `front.json`, `metrics.json`, `run.json` and
//!   atomic writes.
//! - [`run`]: seeded, concurrent execution and `summary.json`.
//! - [`oracle`]: exact fronts by enumeration.
//! - [`compare`]: per-algorithm tables across run directories.
#![forbid(unsafe_code)]

pub mod compare;
pub mod config;
pub mod error;
pub mod io;
pub mod oracle;
pub mod run;

pub use config::{load_experiment, Experiment, Overrides, RunConfig};
pub use error::{CliError, CliResult};
