//! Run configuration: TOML (or the equivalent JSON) with every default
//! embedded, resolved into a ready-to-run [`Experiment`].
//!
//! A minimal configuration for the default two-objective experiment:
//!
//! ```toml
//! algorithm = "adf"
//! seeds = [0, 1, 2, 3, 4]
//! [space]
//! seed = 0
//! [adf]
//! ```

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use frontier_core::algorithms::{AdcConfig, AdfConfig, Algorithm, MdfConfig};
use frontier_core::policy::{
    OptimizerKind, PolicyConfig, PolicyParams, ADC_LEARNING_RATE, ADF_LEARNING_RATE,
};
use frontier_core::schedule::TemperatureSchedule;
use frontier_core::space::{make_benchmark, BenchmarkDef, Ranges, DEFAULT_ENUMERATION_CAP};
use frontier_core::{Evaluator, EvaluatorKind, Problem};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Encodings drawn when calibrating the surrogate noise to a target
/// correlation.
pub const SIGMA_CALIBRATION_SAMPLES: usize = 500;
const SIGMA_CALIBRATION_SALT: u64 = 0x5eed_0f_c0_44e1;

/// Histogram bins per objective in `metrics.json`.
pub const DEFAULT_BINS: usize = 10;

/// Environment variable holding the worker count for concurrent runs.
pub const WORKERS_ENV: &str = "FRONTIER_WORKERS";

/// The configuration file as written. Every field not given falls back to
/// the defaults of the space and the algorithm.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub algorithm: Option<Algorithm>,
    #[serde(default)]
    pub seeds: Vec<u64>,
    /// Output root; relative paths resolve against the config file.
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub space: SpaceSection,
    pub evaluator: Option<EvaluatorSection>,
    #[serde(default)]
    pub policy: PolicySection,
    pub adf: Option<AdfSection>,
    pub adc: Option<AdcSection>,
    pub rs: Option<RsSection>,
    pub mdf: Option<MdfSection>,
    #[serde(default)]
    pub metrics: MetricsSection,
    /// Largest space the oracle will enumerate.
    pub enumeration_cap: Option<u64>,
}

/// Benchmark definition, inline or from a shared JSON file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceSection {
    /// A JSON benchmark file; excludes every inline field.
    pub file: Option<PathBuf>,
    pub seed: Option<u64>,
    #[serde(rename = "L")]
    pub positions: Option<usize>,
    /// Uniform arity shorthand for `arities`.
    #[serde(rename = "K")]
    pub arity: Option<usize>,
    pub arities: Option<Vec<usize>>,
    pub ranges: Option<Ranges>,
    pub correlation_strength: Option<f64>,
    pub sigma: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvaluatorTag {
    Deterministic,
    NoisySurrogate,
}

/// Quality evaluator. A noisy surrogate takes either `sigma` directly or a
/// `target_correlation` to calibrate it against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluatorSection {
    pub kind: EvaluatorTag,
    pub sigma: Option<f64>,
    pub target_correlation: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerTag {
    Sgd,
    Adam,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicySection {
    pub learning_rate: Option<f64>,
    pub baseline_decay: Option<f64>,
    pub tanh_constant: Option<f64>,
    pub optimizer: Option<OptimizerTag>,
    pub beta1: Option<f64>,
    pub beta2: Option<f64>,
    pub eps: Option<f64>,
    /// Policy snapshot to start from instead of uniform logits.
    pub init: Option<PathBuf>,
}

/// Cosine warm-restart schedule, or a constant temperature via `fixed`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSection {
    pub t_min: Option<f64>,
    pub t_max: Option<f64>,
    pub period: Option<u64>,
    pub fixed: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdfSection {
    pub n_warm: Option<usize>,
    pub n_anneal: Option<usize>,
    pub tau: Option<Vec<(f64, f64)>>,
    pub delta_warm: Option<Vec<f64>>,
    pub delta_anneal: Option<Vec<f64>>,
    pub schedule: Option<ScheduleSection>,
    pub grid: Option<Vec<usize>>,
    pub include_warmup: Option<bool>,
    pub batch_size: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdcSection {
    pub n_steps: Option<usize>,
    pub epsilon: Option<Vec<f64>>,
    pub c: Option<f64>,
    pub schedule: Option<ScheduleSection>,
    pub batch_size: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RsSection {
    pub n_steps: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MdfSection {
    pub targets: Option<Vec<usize>>,
    pub steps_per_target: Option<usize>,
    pub temperature: Option<f64>,
    pub tau: Option<Vec<(f64, f64)>>,
    pub delta: Option<Vec<f64>>,
    pub batch_size: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricsSection {
    pub bins: Option<usize>,
    /// Hypervolume reference in normalized units; the origin by default.
    pub reference: Option<Vec<f64>>,
}

/// Overrides given on the command line.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seeds: Vec<u64>,
    pub out: Option<PathBuf>,
    /// Accept a config without seeds (the oracle runs none).
    pub seeds_optional: bool,
}

/// The fully resolved algorithm configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "algorithm", rename_all = "lowercase")]
pub enum Plan {
    Adf(AdfConfig),
    Adc(AdcConfig),
    #[serde(rename = "rs")]
    Random {
        n_steps: usize,
    },
    Mdf(MdfConfig),
}

impl Plan {
    pub fn algorithm(&self) -> Algorithm {
        match self {
            Plan::Adf(_) => Algorithm::Adf,
            Plan::Adc(_) => Algorithm::Adc,
            Plan::Random { .. } => Algorithm::Random,
            Plan::Mdf(_) => Algorithm::Mdf,
        }
    }
}

/// Everything needed to execute and persist a set of seeded runs.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub def: BenchmarkDef,
    pub problem: Problem,
    pub plan: Plan,
    pub policy: PolicyParams,
    pub seeds: Vec<u64>,
    pub out: PathBuf,
    pub bins: usize,
    pub reference: Option<Vec<f64>>,
    pub enumeration_cap: u128,
}

impl Experiment {
    pub fn algorithm(&self) -> Algorithm {
        self.plan.algorithm()
    }

    /// Directory of one seeded run.
    pub fn run_dir(&self, seed: u64) -> PathBuf {
        self.out.join(self.algorithm().tag()).join(seed.to_string())
    }
}

/// Parses TOML, or JSON when the file name ends in `.json`.
pub fn parse_config(text: &str, json: bool) -> CliResult<RunConfig> {
    if json {
        serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    } else {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }
}

fn is_json(path: &Path) -> bool {
    path.extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("json"))
}

pub fn load_config(path: &Path) -> CliResult<RunConfig> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text, is_json(path))
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

/// Reads, validates and resolves a config file.
pub fn load_experiment(path: &Path, overrides: &Overrides) -> CliResult<Experiment> {
    let cfg = load_config(path)?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    resolve(&cfg, &base, overrides)
}

fn field(name: &str, reason: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{name}: {reason}"))
}

fn relative(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

/// Reads a benchmark definition file.
pub fn load_space_file(path: &Path) -> CliResult<BenchmarkDef> {
    let text = fs::read_to_string(path)
        .map_err(|e| field("space.file", format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| field("space.file", format!("{}: {e}", path.display())))
}

fn resolve_space(s: &SpaceSection, base: &Path) -> CliResult<BenchmarkDef> {
    let def = if let Some(file) = &s.file {
        let inline = SpaceSection {
            file: None,
            ..s.clone()
        };
        if inline != SpaceSection::default() {
            return Err(field(
                "space.file",
                "cannot be combined with inline space fields",
            ));
        }
        load_space_file(&relative(base, file))?
    } else {
        let mut def = BenchmarkDef::standard(s.seed.unwrap_or(0));
        if s.arities.is_some() && s.arity.is_some() {
            return Err(field("space.K", "give either K or arities, not both"));
        }
        if let Some(a) = &s.arities {
            def.positions = s.positions.unwrap_or(a.len());
            def.arities = a.clone();
        } else {
            def.positions = s.positions.unwrap_or(def.positions);
            def.arities = vec![s.arity.unwrap_or(def.arities[0]); def.positions];
        }
        if let Some(r) = s.ranges {
            def.ranges = r;
        }
        if let Some(c) = s.correlation_strength {
            def.correlation_strength = c;
        }
        if let Some(sigma) = s.sigma {
            def.sigma = sigma;
        }
        def
    };
    def.validate().map_err(|e| CliError::core("space", e))?;
    Ok(def)
}

fn resolve_problem(def: &BenchmarkDef, ev: Option<&EvaluatorSection>) -> CliResult<Problem> {
    let Some(ev) = ev else {
        return Problem::from_def(def).map_err(|e| CliError::core("space", e));
    };
    if def.sigma > 0.0 {
        return Err(field(
            "evaluator",
            "space.sigma and an [evaluator] block both set the noise; keep one",
        ));
    }
    let space = make_benchmark(def).map_err(|e| CliError::core("space", e))?;
    let kind = match ev.kind {
        EvaluatorTag::Deterministic => {
            if ev.sigma.is_some() || ev.target_correlation.is_some() {
                return Err(field(
                    "evaluator.kind",
                    "a deterministic evaluator takes no sigma or target_correlation",
                ));
            }
            EvaluatorKind::Deterministic
        }
        EvaluatorTag::NoisySurrogate => match (ev.sigma, ev.target_correlation) {
            (Some(sigma), None) => EvaluatorKind::NoisySurrogate { sigma },
            (None, Some(target)) => {
                let base = Evaluator::calibrated(&space, EvaluatorKind::Deterministic)
                    .map_err(|e| CliError::core("evaluator", e))?;
                let sigma = Evaluator::calibrate_sigma(
                    &space,
                    &base,
                    target,
                    SIGMA_CALIBRATION_SAMPLES,
                    def.seed ^ SIGMA_CALIBRATION_SALT,
                )
                .map_err(|e| CliError::core("evaluator.target_correlation", e))?;
                EvaluatorKind::NoisySurrogate { sigma }
            }
            _ => {
                return Err(field(
                    "evaluator",
                    "noisy_surrogate needs exactly one of sigma or target_correlation",
                ))
            }
        },
    };
    let evaluator =
        Evaluator::calibrated(&space, kind).map_err(|e| CliError::core("evaluator", e))?;
    Ok(Problem::new(space, evaluator))
}

fn resolve_schedule(
    s: Option<&ScheduleSection>,
    default: TemperatureSchedule,
    name: &str,
) -> CliResult<TemperatureSchedule> {
    let Some(s) = s else { return Ok(default) };
    let sched = if let Some(t) = s.fixed {
        if s.t_min.is_some() || s.t_max.is_some() || s.period.is_some() {
            return Err(field(name, "fixed excludes t_min, t_max and period"));
        }
        TemperatureSchedule::fixed(t)
    } else {
        TemperatureSchedule::new(
            s.t_min.unwrap_or(default.t_min),
            s.t_max.unwrap_or(default.t_max),
            s.period.unwrap_or(default.period),
        )
    };
    sched.map_err(|e| field(name, e))
}

fn resolve_policy(
    p: &PolicySection,
    algorithm: Algorithm,
    problem: &Problem,
    base: &Path,
) -> CliResult<PolicyParams> {
    if let Some(init) = &p.init {
        let path = relative(base, init);
        let text = fs::read_to_string(&path).map_err(|e| {
            field(
                "policy.init",
                format!("cannot read {}: {e}", path.display()),
            )
        })?;
        let params: PolicyParams = serde_json::from_str(&text)
            .map_err(|e| field("policy.init", format!("{}: {e}", path.display())))?;
        let fits = params.logits().len() == problem.space.positions()
            && params
                .logits()
                .iter()
                .zip(problem.space.arities())
                .all(|(r, &k)| r.len() == k);
        if !fits {
            return Err(field("policy.init", "snapshot does not match the space"));
        }
        return Ok(params);
    }
    let mut cfg = PolicyConfig {
        learning_rate: match algorithm {
            Algorithm::Adc => ADC_LEARNING_RATE,
            _ => ADF_LEARNING_RATE,
        },
        ..PolicyConfig::default()
    };
    if let Some(lr) = p.learning_rate {
        cfg.learning_rate = lr;
    }
    if let Some(d) = p.baseline_decay {
        cfg.baseline_decay = d;
    }
    if let Some(c) = p.tanh_constant {
        cfg.tanh_constant = c;
    }
    let adam_fields = p.beta1.is_some() || p.beta2.is_some() || p.eps.is_some();
    cfg.optimizer = match p.optimizer.unwrap_or(OptimizerTag::Sgd) {
        OptimizerTag::Sgd if adam_fields => {
            return Err(field(
                "policy.optimizer",
                "beta1, beta2 and eps need optimizer = \"adam\"",
            ))
        }
        OptimizerTag::Sgd => OptimizerKind::Sgd,
        OptimizerTag::Adam => {
            let OptimizerKind::Adam { beta1, beta2, eps } = OptimizerKind::adam() else {
                unreachable!()
            };
            OptimizerKind::Adam {
                beta1: p.beta1.unwrap_or(beta1),
                beta2: p.beta2.unwrap_or(beta2),
                eps: p.eps.unwrap_or(eps),
            }
        }
    };
    PolicyParams::new(problem.space.arities(), cfg).map_err(|e| CliError::core("policy", e))
}

fn resolve_adf(s: &AdfSection, problem: &Problem) -> CliResult<AdfConfig> {
    let mut c = AdfConfig::for_problem(problem);
    if let Some(tau) = &s.tau {
        c.tau = tau.clone();
        c.delta_warm = tau.iter().map(|(lo, hi)| (hi - lo) / 2.0).collect();
        c.delta_anneal = tau.iter().map(|(lo, hi)| (hi - lo) / 10.0).collect();
    }
    if let Some(d) = &s.delta_warm {
        c.delta_warm = d.clone();
    }
    if let Some(d) = &s.delta_anneal {
        c.delta_anneal = d.clone();
    }
    if let Some(g) = &s.grid {
        c.grid = Some(g.clone());
        c.n_anneal = g.iter().product();
    }
    if let Some(n) = s.n_anneal {
        c.n_anneal = n;
    }
    if let Some(n) = s.n_warm {
        c.n_warm = n;
    }
    c.schedule = resolve_schedule(s.schedule.as_ref(), c.schedule, "adf.schedule")?;
    if let Some(w) = s.include_warmup {
        c.include_warmup = w;
    }
    if let Some(b) = s.batch_size {
        c.batch_size = b;
    }
    c.validate(problem).map_err(|e| CliError::core("adf", e))?;
    Ok(c)
}

fn resolve_adc(s: &AdcSection, problem: &Problem) -> CliResult<AdcConfig> {
    let mut c = AdcConfig::for_problem(problem);
    if let Some(n) = s.n_steps {
        c.n_steps = n;
    }
    if let Some(e) = &s.epsilon {
        c.spec.epsilon = e.clone();
    }
    if let Some(v) = s.c {
        c.spec.c = v;
    }
    c.schedule = resolve_schedule(s.schedule.as_ref(), c.schedule, "adc.schedule")?;
    if let Some(b) = s.batch_size {
        c.batch_size = b;
    }
    c.validate(problem).map_err(|e| CliError::core("adc", e))?;
    Ok(c)
}

fn resolve_mdf(s: &MdfSection, problem: &Problem) -> CliResult<MdfConfig> {
    let mut c = MdfConfig::for_problem(problem);
    if let Some(t) = &s.targets {
        c.targets = t.clone();
    }
    if let Some(n) = s.steps_per_target {
        c.steps_per_target = n;
    }
    if let Some(t) = s.temperature {
        c.temperature = t;
    }
    if let Some(tau) = &s.tau {
        c.tau = tau.clone();
        c.delta = tau.iter().map(|(lo, hi)| (hi - lo) / 10.0).collect();
    }
    if let Some(d) = &s.delta {
        c.delta = d.clone();
    }
    if let Some(b) = s.batch_size {
        c.batch_size = b;
    }
    c.validate(problem).map_err(|e| CliError::core("mdf", e))?;
    Ok(c)
}

fn resolve_plan(cfg: &RunConfig, algorithm: Algorithm, problem: &Problem) -> CliResult<Plan> {
    let present: Vec<&str> = [
        ("adf", cfg.adf.is_some()),
        ("adc", cfg.adc.is_some()),
        ("rs", cfg.rs.is_some()),
        ("mdf", cfg.mdf.is_some()),
    ]
    .into_iter()
    .filter_map(|(n, p)| p.then_some(n))
    .collect();
    let tag = algorithm.tag();
    if let Some(other) = present.iter().find(|&&n| n != tag) {
        return Err(field(
            other,
            format!(
                "block does not match algorithm \"{tag}\"; exactly one algorithm block is allowed"
            ),
        ));
    }
    let missing = || {
        field(
            tag,
            format!("missing [{tag}] block for algorithm \"{tag}\""),
        )
    };
    Ok(match algorithm {
        Algorithm::Adf => Plan::Adf(resolve_adf(cfg.adf.as_ref().ok_or_else(missing)?, problem)?),
        Algorithm::Adc => Plan::Adc(resolve_adc(cfg.adc.as_ref().ok_or_else(missing)?, problem)?),
        Algorithm::Mdf => Plan::Mdf(resolve_mdf(cfg.mdf.as_ref().ok_or_else(missing)?, problem)?),
        Algorithm::Random => {
            let s = cfg.rs.as_ref().ok_or_else(missing)?;
            let n_steps = s
                .n_steps
                .unwrap_or_else(|| AdcConfig::for_problem(problem).n_steps);
            if n_steps == 0 {
                return Err(field("rs.n_steps", "must be at least 1"));
            }
            Plan::Random { n_steps }
        }
    })
}

/// Validates a parsed config and fills in every default. Relative paths
/// resolve against `base`.
pub fn resolve(cfg: &RunConfig, base: &Path, overrides: &Overrides) -> CliResult<Experiment> {
    let algorithm = cfg
        .algorithm
        .ok_or_else(|| field("algorithm", "missing; expected one of adf, adc, rs, mdf"))?;
    let seeds = if overrides.seeds.is_empty() {
        cfg.seeds.clone()
    } else {
        overrides.seeds.clone()
    };
    if seeds.is_empty() && !overrides.seeds_optional {
        return Err(field("seeds", "need at least one seed"));
    }
    if seeds.iter().collect::<BTreeSet<_>>().len() != seeds.len() {
        return Err(field("seeds", "seeds must be distinct"));
    }
    let def = resolve_space(&cfg.space, base)?;
    let problem = resolve_problem(&def, cfg.evaluator.as_ref())?;
    let plan = resolve_plan(cfg, algorithm, &problem)?;
    let policy = resolve_policy(&cfg.policy, algorithm, &problem, base)?;
    let bins = cfg.metrics.bins.unwrap_or(DEFAULT_BINS);
    if bins == 0 {
        return Err(field("metrics.bins", "must be at least 1"));
    }
    if let Some(r) = &cfg.metrics.reference {
        if r.len() != problem.objective_count() {
            return Err(field(
                "metrics.reference",
                format!(
                    "expected {} coordinates, found {}",
                    problem.objective_count(),
                    r.len()
                ),
            ));
        }
    }
    let out = match &overrides.out {
        Some(o) => o.clone(),
        None => relative(base, cfg.out.as_deref().unwrap_or(Path::new("runs"))),
    };
    Ok(Experiment {
        def,
        problem,
        plan,
        policy,
        seeds,
        out,
        bins,
        reference: cfg.metrics.reference.clone(),
        enumeration_cap: cfg
            .enumeration_cap
            .map_or(DEFAULT_ENUMERATION_CAP, u128::from),
    })
}
