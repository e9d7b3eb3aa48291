//! Search procedures. Every run is a pure function of the problem, the
//! configuration, the initial policy and the RNG stream it is handed.
//!
//! - [`run_adf`]: annealing desirability. A warm-up phase at the lowest
//!   target, then the target sweeps the constrained range (or a target grid
//!   for three or more objectives) while the policy follows it.
//! - [`run_adc`]: dominance credit against a live archive.
//! - [`run_random`]: uniform sampling baseline.
//! - [`run_mdf`]: independent fixed-target desirability runs.
//! - [`brute_force_front`]: the exact front by enumeration.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objectives::{extract_pareto_front, ArchiveEntry, ObjectiveVector, ParetoArchive};
use crate::policy::PolicyParams;
use crate::rewards::{adc_reward, adf_reward, AdcSpec, DesirabilitySpec};
use crate::schedule::{target_at, TargetGrid, TemperatureSchedule};
use crate::space::{Encoding, Problem};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Adf,
    Adc,
    #[serde(rename = "rs")]
    Random,
    Mdf,
}

impl Algorithm {
    pub fn tag(self) -> &'static str {
        match self {
            Algorithm::Adf => "adf",
            Algorithm::Adc => "adc",
            Algorithm::Random => "rs",
            Algorithm::Mdf => "mdf",
        }
    }
}

impl core::str::FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "adf" => Ok(Algorithm::Adf),
            "adc" => Ok(Algorithm::Adc),
            "rs" | "random" => Ok(Algorithm::Random),
            "mdf" => Ok(Algorithm::Mdf),
            other => Err(Error::invalid(
                "algorithm",
                format!("unknown tag {other:?}"),
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Warmup,
    Search,
}

/// One evaluated candidate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    /// 1-based step counter over the whole run, warm-up included.
    pub step: usize,
    pub phase: Phase,
    pub encoding: Encoding,
    pub objectives: ObjectiveVector,
    /// `None` for random search, which has no reward.
    pub reward: Option<f64>,
    pub temperature: Option<f64>,
    /// Desirability targets, one per constrained objective (ADF and M-DF).
    pub targets: Vec<f64>,
}

/// The trace of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub algorithm: Algorithm,
    pub samples: Vec<Sample>,
    pub final_front: ParetoArchive,
    /// Seed of the RNG stream, when the caller knows it.
    pub seed: Option<u64>,
    /// FNV-1a hash of the configuration's debug form.
    pub fingerprint: u64,
}

impl RunRecord {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn entries(&self) -> Vec<ArchiveEntry> {
        self.samples
            .iter()
            .map(|s| ArchiveEntry::new(s.encoding.clone(), s.objectives.clone()))
            .collect()
    }
}

pub fn fingerprint(text: &str) -> u64 {
    text.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

fn check_policy(problem: &Problem, policy: &PolicyParams) -> Result<()> {
    let same = policy.logits().len() == problem.space.positions()
        && policy
            .logits()
            .iter()
            .zip(problem.space.arities())
            .all(|(row, &k)| row.len() == k);
    if same {
        Ok(())
    } else {
        Err(Error::invalid(
            "policy",
            "logit table does not match the space",
        ))
    }
}

fn check_batch(batch_size: usize) -> Result<()> {
    if batch_size == 0 {
        Err(Error::invalid("batch_size", "must be at least 1"))
    } else {
        Ok(())
    }
}

/// Annealing desirability configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdfConfig {
    pub n_warm: usize,
    /// Annealing steps. With a target grid this must equal the grid size.
    pub n_anneal: usize,
    /// `(tau_min, tau_max)` per constrained objective.
    pub tau: Vec<(f64, f64)>,
    pub delta_warm: Vec<f64>,
    pub delta_anneal: Vec<f64>,
    pub schedule: TemperatureSchedule,
    /// Targets per constrained axis; required with two or more constrained
    /// objectives, ignored with one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<Vec<usize>>,
    /// Also record warm-up samples and extract the front from them.
    #[serde(default)]
    pub include_warmup: bool,
    #[serde(default = "one")]
    pub batch_size: usize,
}

fn one() -> usize {
    1
}

impl AdfConfig {
    /// 1500 warm-up steps; 6000 annealing steps for two objectives, a
    /// 110 x 109 target grid for three. Widths are half and a tenth of each
    /// target range.
    pub fn for_problem(problem: &Problem) -> Self {
        let tau = problem.constrained_ranges();
        let grid = if tau.len() >= 2 {
            let mut g = vec![110, 109];
            g.resize(tau.len(), 10);
            Some(g)
        } else {
            None
        };
        let n_anneal = grid.as_ref().map_or(6000, |g| g.iter().product());
        AdfConfig {
            n_warm: 1500,
            n_anneal,
            delta_warm: tau.iter().map(|(lo, hi)| (hi - lo) / 2.0).collect(),
            delta_anneal: tau.iter().map(|(lo, hi)| (hi - lo) / 10.0).collect(),
            tau,
            schedule: TemperatureSchedule::adf_default(),
            grid,
            include_warmup: false,
            batch_size: 1,
        }
    }

    pub fn validate(&self, problem: &Problem) -> Result<()> {
        let k = problem.objective_count() - 1;
        for (field, len) in [
            ("adf.tau", self.tau.len()),
            ("adf.delta_warm", self.delta_warm.len()),
            ("adf.delta_anneal", self.delta_anneal.len()),
        ] {
            if len != k {
                return Err(Error::invalid(
                    field,
                    format!("expected {k} entries, found {len}"),
                ));
            }
        }
        if self.tau.iter().any(|&(lo, hi)| !(lo < hi)) {
            return Err(Error::invalid("adf.tau", "need tau_min < tau_max"));
        }
        if self
            .delta_warm
            .iter()
            .chain(&self.delta_anneal)
            .any(|d| !(*d > 0.0))
        {
            return Err(Error::invalid("adf.delta", "widths must be > 0"));
        }
        if self.n_anneal == 0 {
            return Err(Error::invalid("adf.n_anneal", "must be at least 1"));
        }
        self.schedule.validate()?;
        check_batch(self.batch_size)?;
        if k >= 2 {
            let grid = self.grid.as_ref().ok_or_else(|| {
                Error::invalid("adf.grid", "required with several constrained objectives")
            })?;
            if grid.len() != k {
                return Err(Error::invalid(
                    "adf.grid",
                    format!("expected {k} axis counts"),
                ));
            }
            let size: usize = grid.iter().product();
            if size != self.n_anneal {
                return Err(Error::invalid(
                    "adf.n_anneal",
                    format!("must equal the grid size {size}, found {}", self.n_anneal),
                ));
            }
        }
        Ok(())
    }
}

struct Stepper<'a, R: RngCore + ?Sized> {
    problem: &'a Problem,
    policy: PolicyParams,
    rng: &'a mut R,
    batch_size: usize,
    step: usize,
}

impl<R: RngCore + ?Sized> Stepper<'_, R> {
    /// Draws a batch at temperature `t`, scores each sample with `reward`,
    /// applies one REINFORCE update and returns the samples.
    fn step(
        &mut self,
        temperature: f64,
        phase: Phase,
        targets: &[f64],
        mut reward: impl FnMut(&Encoding, &ObjectiveVector) -> Result<f64>,
    ) -> Result<Vec<Sample>> {
        let mut batch = Vec::with_capacity(self.batch_size);
        let mut out = Vec::with_capacity(self.batch_size);
        for _ in 0..self.batch_size {
            self.step += 1;
            let (e, _) = self.policy.sample(temperature, self.rng)?;
            let objectives = self.problem.evaluate(&e, self.rng)?;
            let r = reward(&e, &objectives)?;
            batch.push((e.clone(), r));
            out.push(Sample {
                step: self.step,
                phase,
                encoding: e,
                objectives,
                reward: Some(r),
                temperature: Some(temperature),
                targets: targets.to_vec(),
            });
        }
        self.policy.reinforce_update_batch(&batch, temperature)?;
        Ok(out)
    }
}

fn desirabilities(targets: &[f64], widths: &[f64]) -> Result<Vec<DesirabilitySpec>> {
    targets
        .iter()
        .zip(widths)
        .map(|(&t, &d)| DesirabilitySpec::new(t, d))
        .collect()
}

fn scalarized(objectives: &ObjectiveVector, specs: &[DesirabilitySpec]) -> Result<f64> {
    let v = objectives.values();
    adf_reward(v[0], &v[1..], specs)
}

/// Annealing desirability search. Returns the record and the final policy.
pub fn run_adf<R: RngCore + ?Sized>(
    problem: &Problem,
    policy: PolicyParams,
    cfg: &AdfConfig,
    rng: &mut R,
) -> Result<(RunRecord, PolicyParams)> {
    cfg.validate(problem)?;
    check_policy(problem, &policy)?;
    let grid = match &cfg.grid {
        Some(counts) if cfg.tau.len() >= 2 => Some(TargetGrid::regular(&cfg.tau, counts)?),
        _ => None,
    };
    let mut stepper = Stepper {
        problem,
        policy,
        rng,
        batch_size: cfg.batch_size,
        step: 0,
    };
    let mut samples = Vec::with_capacity(
        (cfg.n_anneal + if cfg.include_warmup { cfg.n_warm } else { 0 }) * cfg.batch_size,
    );
    let mut tick = 0u64;

    let warm_targets: Vec<f64> = cfg.tau.iter().map(|t| t.0).collect();
    let warm = desirabilities(&warm_targets, &cfg.delta_warm)?;
    for _ in 0..cfg.n_warm {
        let t = cfg.schedule.temperature_at(tick);
        tick += 1;
        let batch = stepper.step(t, Phase::Warmup, &warm_targets, |_, o| scalarized(o, &warm))?;
        if cfg.include_warmup {
            samples.extend(batch);
        }
    }

    for step in 1..=cfg.n_anneal {
        let targets = match &grid {
            Some(g) => g.targets(step - 1),
            None => vec![target_at(cfg.tau[0].0, cfg.tau[0].1, cfg.n_anneal, step)?],
        };
        let specs = desirabilities(&targets, &cfg.delta_anneal)?;
        let t = cfg.schedule.temperature_at(tick);
        tick += 1;
        samples.extend(stepper.step(t, Phase::Search, &targets, |_, o| scalarized(o, &specs))?);
    }

    let spec = problem.objective_spec();
    let entries: Vec<ArchiveEntry> = samples
        .iter()
        .map(|s| ArchiveEntry::new(s.encoding.clone(), s.objectives.clone()))
        .collect();
    let final_front = extract_pareto_front(&entries, &spec)?;
    let record = RunRecord {
        algorithm: Algorithm::Adf,
        samples,
        final_front,
        seed: None,
        fingerprint: fingerprint(&format!("{cfg:?}{:?}", problem.space.seed())),
    };
    Ok((record, stepper.policy))
}

/// Dominance credit configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdcConfig {
    pub n_steps: usize,
    pub spec: AdcSpec,
    pub schedule: TemperatureSchedule,
    #[serde(default = "one")]
    pub batch_size: usize,
}

impl AdcConfig {
    /// 6000 steps (12000 with three objectives), 25 -> 1 warm restarts every
    /// 1200 steps, default radii and C = 10.
    pub fn for_problem(problem: &Problem) -> Self {
        let m = problem.objective_count();
        AdcConfig {
            n_steps: if m >= 3 { 12_000 } else { 6000 },
            spec: AdcSpec::default_for(m),
            schedule: TemperatureSchedule::adc_default(),
            batch_size: 1,
        }
    }

    pub fn validate(&self, problem: &Problem) -> Result<()> {
        if self.n_steps == 0 {
            return Err(Error::invalid("adc.n_steps", "must be at least 1"));
        }
        self.spec.validate()?;
        let m = problem.objective_count();
        if self.spec.epsilon.len() != m {
            return Err(Error::invalid(
                "adc.epsilon",
                format!("expected {m} radii, found {}", self.spec.epsilon.len()),
            ));
        }
        self.schedule.validate()?;
        check_batch(self.batch_size)
    }
}

/// Dominance-credit search.
pub fn run_adc<R: RngCore + ?Sized>(
    problem: &Problem,
    policy: PolicyParams,
    cfg: &AdcConfig,
    rng: &mut R,
) -> Result<(RunRecord, PolicyParams)> {
    run_adc_observed(problem, policy, cfg, rng, |_, _| {})
}

/// [`run_adc`] that hands the archive and the samples so far to `observe`
/// after every policy update.
pub fn run_adc_observed<R: RngCore + ?Sized>(
    problem: &Problem,
    policy: PolicyParams,
    cfg: &AdcConfig,
    rng: &mut R,
    mut observe: impl FnMut(&ParetoArchive, &[Sample]),
) -> Result<(RunRecord, PolicyParams)> {
    cfg.validate(problem)?;
    check_policy(problem, &policy)?;
    let mut archive = ParetoArchive::new(problem.objective_spec());
    let mut stepper = Stepper {
        problem,
        policy,
        rng,
        batch_size: cfg.batch_size,
        step: 0,
    };
    let mut samples = Vec::with_capacity(cfg.n_steps * cfg.batch_size);
    for tick in 0..cfg.n_steps {
        let t = cfg.schedule.temperature_at(tick as u64);
        let batch = stepper.step(t, Phase::Search, &[], |e, o| {
            // reward first, against the archive before this candidate joins it
            let r = adc_reward(o, &archive, &cfg.spec)?;
            archive.insert(ArchiveEntry::new(e.clone(), o.clone()))?;
            Ok(r)
        })?;
        samples.extend(batch);
        observe(&archive, &samples);
    }
    let record = RunRecord {
        algorithm: Algorithm::Adc,
        samples,
        final_front: archive,
        seed: None,
        fingerprint: fingerprint(&format!("{cfg:?}{:?}", problem.space.seed())),
    };
    Ok((record, stepper.policy))
}

/// Uniform random sampling.
pub fn run_random<R: RngCore + ?Sized>(
    problem: &Problem,
    n_steps: usize,
    rng: &mut R,
) -> Result<RunRecord> {
    if n_steps == 0 {
        return Err(Error::invalid("rs.n_steps", "must be at least 1"));
    }
    let mut samples = Vec::with_capacity(n_steps);
    for step in 1..=n_steps {
        let e = problem.space.random_encoding(rng);
        let objectives = problem.evaluate(&e, rng)?;
        samples.push(Sample {
            step,
            phase: Phase::Search,
            encoding: e,
            objectives,
            reward: None,
            temperature: None,
            targets: Vec::new(),
        });
    }
    let entries: Vec<ArchiveEntry> = samples
        .iter()
        .map(|s| ArchiveEntry::new(s.encoding.clone(), s.objectives.clone()))
        .collect();
    Ok(RunRecord {
        algorithm: Algorithm::Random,
        final_front: extract_pareto_front(&entries, &problem.objective_spec())?,
        samples,
        seed: None,
        fingerprint: fingerprint(&format!("rs{n_steps}{:?}", problem.space.seed())),
    })
}

/// Multi-run desirability configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MdfConfig {
    /// Targets per constrained axis: `[10]` for two objectives, `[4, 4]` for
    /// three.
    pub targets: Vec<usize>,
    pub steps_per_target: usize,
    pub temperature: f64,
    /// `(tau_min, tau_max)` per constrained objective.
    pub tau: Vec<(f64, f64)>,
    pub delta: Vec<f64>,
    #[serde(default = "one")]
    pub batch_size: usize,
}

impl MdfConfig {
    pub fn for_problem(problem: &Problem) -> Self {
        let tau = problem.constrained_ranges();
        let targets = if tau.len() >= 2 {
            vec![4; tau.len()]
        } else {
            vec![10]
        };
        MdfConfig {
            targets,
            steps_per_target: 2000,
            temperature: 5.0,
            delta: tau.iter().map(|(lo, hi)| (hi - lo) / 10.0).collect(),
            tau,
            batch_size: 1,
        }
    }

    pub fn n_targets(&self) -> usize {
        self.targets.iter().product()
    }

    pub fn validate(&self, problem: &Problem) -> Result<()> {
        let k = problem.objective_count() - 1;
        for (field, len) in [
            ("mdf.targets", self.targets.len()),
            ("mdf.tau", self.tau.len()),
            ("mdf.delta", self.delta.len()),
        ] {
            if len != k {
                return Err(Error::invalid(
                    field,
                    format!("expected {k} entries, found {len}"),
                ));
            }
        }
        if self.targets.contains(&0) {
            return Err(Error::invalid(
                "mdf.targets",
                "need at least one target per axis",
            ));
        }
        if self.steps_per_target == 0 {
            return Err(Error::invalid("mdf.steps_per_target", "must be at least 1"));
        }
        if !(self.temperature > 0.0) {
            return Err(Error::InvalidTemperature(self.temperature));
        }
        if self.delta.iter().any(|d| !(*d > 0.0)) {
            return Err(Error::invalid("mdf.delta", "widths must be > 0"));
        }
        check_batch(self.batch_size)
    }
}

/// Independent fixed-target runs, one fresh copy of `policy` per target.
/// Samples are concatenated in target order and the front is extracted
/// from all of them.
pub fn run_mdf<R: RngCore + ?Sized>(
    problem: &Problem,
    policy: &PolicyParams,
    cfg: &MdfConfig,
    rng: &mut R,
) -> Result<RunRecord> {
    cfg.validate(problem)?;
    check_policy(problem, policy)?;
    let grid = TargetGrid::regular(&cfg.tau, &cfg.targets)?;
    let mut samples = Vec::with_capacity(grid.len() * cfg.steps_per_target * cfg.batch_size);
    let mut offset = 0;
    for i in 0..grid.len() {
        let targets = grid.targets(i);
        let specs = desirabilities(&targets, &cfg.delta)?;
        let mut stepper = Stepper {
            problem,
            policy: policy.clone(),
            rng: &mut *rng,
            batch_size: cfg.batch_size,
            step: offset,
        };
        for _ in 0..cfg.steps_per_target {
            samples.extend(
                stepper.step(cfg.temperature, Phase::Search, &targets, |_, o| {
                    scalarized(o, &specs)
                })?,
            );
        }
        offset = stepper.step;
    }
    let entries: Vec<ArchiveEntry> = samples
        .iter()
        .map(|s| ArchiveEntry::new(s.encoding.clone(), s.objectives.clone()))
        .collect();
    Ok(RunRecord {
        algorithm: Algorithm::Mdf,
        final_front: extract_pareto_front(&entries, &problem.objective_spec())?,
        samples,
        seed: None,
        fingerprint: fingerprint(&format!("{cfg:?}{:?}", problem.space.seed())),
    })
}

/// The exact front by enumerating the whole space. Refuses noisy
/// evaluators and spaces above `cap`.
pub fn brute_force_front(problem: &Problem, cap: u128) -> Result<ParetoArchive> {
    if !problem.evaluator.is_deterministic() {
        return Err(Error::invalid(
            "evaluator",
            "the oracle needs a noise-free evaluator",
        ));
    }
    let spec = problem.objective_spec();
    // a deterministic evaluator never draws; the stream only satisfies the signature
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut entries = Vec::new();
    for e in problem.space.enumerate(cap)? {
        let v = problem.evaluate(&e, &mut rng)?;
        entries.push(ArchiveEntry::new(e, v));
    }
    extract_pareto_front(&entries, &spec)
}
