//! Decision-sequence search spaces, their cost models and evaluators.
//!
//! A candidate is a fixed-length [`Encoding`]; position `t` picks one of
//! `K_t` choices. Each choice carries a parameter cost, an optional FLOP cost
//! and a merit. Quality is a logistic squash of the summed merit, optionally
//! perturbed per evaluation to mimic a noisy proxy of true accuracy.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objectives::{ObjectiveSpec, ObjectiveVector, Orientation};

/// Default enumeration cap (2^20 encodings).
pub const DEFAULT_ENUMERATION_CAP: u128 = 1 << 20;

/// Default objective ranges: parameters in millions, FLOPs in billions.
pub const DEFAULT_PARAMS_RANGE: (f64, f64) = (0.1, 2.0);
pub const DEFAULT_FLOPS_RANGE: (f64, f64) = (0.02, 0.31);

const CALIBRATION_SAMPLES: usize = 10_000;
const CALIBRATION_SALT: u64 = 0x9e37_79b9_7f4a_7c15;

/// One candidate: the chosen index at every position.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Encoding(Vec<usize>);

impl Encoding {
    pub fn new(decisions: Vec<usize>) -> Self {
        Encoding(decisions)
    }

    pub fn decisions(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl core::fmt::Display for Encoding {
    /// Dash-joined decisions, e.g. `0-3-1-2`.
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        for (i, d) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("-")?;
            }
            write!(f, "{d}")?;
        }
        Ok(())
    }
}

impl core::str::FromStr for Encoding {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.split('-')
            .map(|p| {
                p.parse::<usize>()
                    .map_err(|_| Error::invalid("encoding", alloc::format!("bad decision {p:?}")))
            })
            .collect::<Result<Vec<_>>>()
            .map(Encoding)
    }
}

/// Objective ranges used for target annealing and normalization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ranges {
    pub params: (f64, f64),
    /// Present when FLOPs are an objective (three-objective problems).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flops: Option<(f64, f64)>,
}

impl Default for Ranges {
    fn default() -> Self {
        Ranges {
            params: DEFAULT_PARAMS_RANGE,
            flops: None,
        }
    }
}

/// Shareable description of a synthetic benchmark. Everything else is
/// regenerated from the seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkDef {
    pub seed: u64,
    #[serde(rename = "L")]
    pub positions: usize,
    pub arities: Vec<usize>,
    #[serde(default)]
    pub ranges: Ranges,
    pub correlation_strength: f64,
    #[serde(default)]
    pub sigma: f64,
}

impl BenchmarkDef {
    /// The L=8, K=4 two-objective benchmark used throughout the tests.
    pub fn standard(seed: u64) -> Self {
        BenchmarkDef {
            seed,
            positions: 8,
            arities: vec![4; 8],
            ranges: Ranges::default(),
            correlation_strength: 0.05,
            sigma: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.positions == 0 {
            return Err(Error::invalid("L", "need at least one position"));
        }
        if self.arities.len() != self.positions {
            return Err(Error::DimensionMismatch {
                expected: self.positions,
                found: self.arities.len(),
            });
        }
        if self.arities.contains(&0) {
            return Err(Error::invalid(
                "arities",
                "every position needs at least one choice",
            ));
        }
        let check = |name: &'static str, (lo, hi): (f64, f64)| {
            if lo.is_finite() && hi.is_finite() && 0.0 <= lo && lo < hi {
                Ok(())
            } else {
                Err(Error::invalid(name, "need finite 0 <= lo < hi"))
            }
        };
        check("ranges.params", self.ranges.params)?;
        if let Some(f) = self.ranges.flops {
            check("ranges.flops", f)?;
        }
        if !(self.correlation_strength >= 0.0 && self.correlation_strength.is_finite()) {
            return Err(Error::invalid(
                "correlation_strength",
                "must be finite and >= 0",
            ));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::invalid("sigma", "must be finite and >= 0"));
        }
        Ok(())
    }
}

/// Per-position, per-choice tables of a decision-sequence space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceSpace {
    arities: Vec<usize>,
    cost_table: Vec<Vec<f64>>,
    flop_table: Option<Vec<Vec<f64>>>,
    merit_table: Vec<Vec<f64>>,
    ranges: Ranges,
    seed: u64,
}

impl SequenceSpace {
    /// Builds a space from explicit tables.
    pub fn from_tables(
        cost_table: Vec<Vec<f64>>,
        flop_table: Option<Vec<Vec<f64>>>,
        merit_table: Vec<Vec<f64>>,
        ranges: Ranges,
        seed: u64,
    ) -> Result<Self> {
        let arities: Vec<usize> = cost_table.iter().map(Vec::len).collect();
        if arities.is_empty() || arities.contains(&0) {
            return Err(Error::invalid(
                "cost_table",
                "need at least one choice per position",
            ));
        }
        let same_shape = |t: &[Vec<f64>]| {
            t.len() == arities.len() && t.iter().zip(&arities).all(|(row, &k)| row.len() == k)
        };
        if !same_shape(&merit_table) {
            return Err(Error::invalid(
                "merit_table",
                "shape differs from cost_table",
            ));
        }
        let non_negative = |t: &[Vec<f64>]| t.iter().flatten().all(|v| *v >= 0.0 && v.is_finite());
        if !non_negative(&cost_table) {
            return Err(Error::invalid(
                "cost_table",
                "entries must be finite and >= 0",
            ));
        }
        if let Some(f) = &flop_table {
            if !same_shape(f) {
                return Err(Error::invalid(
                    "flop_table",
                    "shape differs from cost_table",
                ));
            }
            if !non_negative(f) {
                return Err(Error::invalid(
                    "flop_table",
                    "entries must be finite and >= 0",
                ));
            }
        }
        if !merit_table.iter().flatten().all(|v| v.is_finite()) {
            return Err(Error::invalid("merit_table", "entries must be finite"));
        }
        if ranges.flops.is_some() && flop_table.is_none() {
            return Err(Error::invalid(
                "flop_table",
                "a FLOPs range needs a FLOP table",
            ));
        }
        Ok(SequenceSpace {
            arities,
            cost_table,
            flop_table,
            merit_table,
            ranges,
            seed,
        })
    }

    pub fn positions(&self) -> usize {
        self.arities.len()
    }

    pub fn arities(&self) -> &[usize] {
        &self.arities
    }

    pub fn cost_table(&self) -> &[Vec<f64>] {
        &self.cost_table
    }

    pub fn flop_table(&self) -> Option<&[Vec<f64>]> {
        self.flop_table.as_deref()
    }

    pub fn merit_table(&self) -> &[Vec<f64>] {
        &self.merit_table
    }

    pub fn ranges(&self) -> &Ranges {
        &self.ranges
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Number of objectives: quality, parameters and, if present, FLOPs.
    pub fn objective_count(&self) -> usize {
        if self.ranges.flops.is_some() {
            3
        } else {
            2
        }
    }

    /// Total number of encodings, saturating at `u128::MAX`.
    pub fn cardinality(&self) -> u128 {
        self.arities
            .iter()
            .try_fold(1u128, |acc, &k| acc.checked_mul(k as u128))
            .unwrap_or(u128::MAX)
    }

    pub fn validate(&self, e: &Encoding) -> Result<()> {
        if e.len() != self.positions() {
            return Err(Error::DimensionMismatch {
                expected: self.positions(),
                found: e.len(),
            });
        }
        for (position, (&value, &arity)) in e.decisions().iter().zip(&self.arities).enumerate() {
            if value >= arity {
                return Err(Error::InvalidDecision {
                    position,
                    value,
                    arity,
                });
            }
        }
        Ok(())
    }

    fn table_sum(table: &[Vec<f64>], e: &Encoding) -> f64 {
        table
            .iter()
            .zip(e.decisions())
            .map(|(row, &d)| row[d])
            .sum()
    }

    /// Parameter count in millions.
    pub fn cost(&self, e: &Encoding) -> Result<f64> {
        self.validate(e)?;
        Ok(Self::table_sum(&self.cost_table, e))
    }

    /// FLOPs in billions; zero when the space has no FLOP table.
    pub fn flops(&self, e: &Encoding) -> Result<f64> {
        self.validate(e)?;
        Ok(self
            .flop_table
            .as_ref()
            .map_or(0.0, |t| Self::table_sum(t, e)))
    }

    pub fn merit(&self, e: &Encoding) -> Result<f64> {
        self.validate(e)?;
        Ok(Self::table_sum(&self.merit_table, e))
    }

    /// Every encoding in lexicographic order, refusing spaces above `cap`.
    pub fn enumerate(&self, cap: u128) -> Result<Enumerate<'_>> {
        let cardinality = self.cardinality();
        if cardinality > cap {
            return Err(Error::CardinalityCap { cardinality, cap });
        }
        Ok(Enumerate {
            arities: &self.arities,
            next: Some(vec![0; self.positions()]),
        })
    }

    /// Uniform random encoding.
    pub fn random_encoding<R: RngCore + ?Sized>(&self, rng: &mut R) -> Encoding {
        Encoding(
            self.arities
                .iter()
                .map(|&k| rng.random_range(0..k))
                .collect(),
        )
    }
}

/// Lexicographic odometer over a space.
#[derive(Debug, Clone)]
pub struct Enumerate<'a> {
    arities: &'a [usize],
    next: Option<Vec<usize>>,
}

impl Iterator for Enumerate<'_> {
    type Item = Encoding;

    fn next(&mut self) -> Option<Encoding> {
        let current = self.next.take()?;
        let mut succ = current.clone();
        let mut t = succ.len();
        loop {
            if t == 0 {
                break;
            }
            t -= 1;
            succ[t] += 1;
            if succ[t] < self.arities[t] {
                self.next = Some(succ);
                break;
            }
            succ[t] = 0;
        }
        Some(Encoding(current))
    }
}

/// Draws a reproducible benchmark.
///
/// Raw costs are uniform in [0, 1) and then affinely rescaled so the cheapest
/// encoding costs exactly `ranges.params.0` and the priciest exactly
/// `ranges.params.1`. Merit is the scaled cost plus Gaussian noise of standard
/// deviation `correlation_strength`, so pricier choices are usually but not
/// always better. FLOPs, when requested, are drawn last from the same stream
/// and scaled the same way.
pub fn make_benchmark(def: &BenchmarkDef) -> Result<SequenceSpace> {
    def.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(def.seed);
    let draw_uniform = |rng: &mut ChaCha8Rng| -> Vec<Vec<f64>> {
        def.arities
            .iter()
            .map(|&k| (0..k).map(|_| rng.random::<f64>()).collect())
            .collect()
    };
    let cost_table = scale_table(draw_uniform(&mut rng), def.ranges.params);
    let merit_table = cost_table
        .iter()
        .map(|row| {
            row.iter()
                .map(|&w| {
                    let eta: f64 = StandardNormal.sample(&mut rng);
                    w + def.correlation_strength * eta
                })
                .collect()
        })
        .collect();
    let flop_table = def
        .ranges
        .flops
        .map(|range| scale_table(draw_uniform(&mut rng), range));
    SequenceSpace::from_tables(cost_table, flop_table, merit_table, def.ranges, def.seed)
}

fn scale_table(raw: Vec<Vec<f64>>, (lo, hi): (f64, f64)) -> Vec<Vec<f64>> {
    let l = raw.len() as f64;
    let mins: Vec<f64> = raw
        .iter()
        .map(|r| r.iter().copied().fold(f64::INFINITY, f64::min))
        .collect();
    let spread: f64 = raw
        .iter()
        .zip(&mins)
        .map(|(r, &m)| r.iter().copied().fold(f64::NEG_INFINITY, f64::max) - m)
        .sum();
    let scale = if spread > 0.0 {
        (hi - lo) / spread
    } else {
        0.0
    };
    raw.iter()
        .zip(&mins)
        .map(|(r, &m)| r.iter().map(|&v| lo / l + (v - m) * scale).collect())
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EvaluatorKind {
    Deterministic,
    NoisySurrogate { sigma: f64 },
}

/// Maps an encoding to a quality in [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Evaluator {
    pub kind: EvaluatorKind,
    /// Logistic midpoint in merit units.
    pub mu: f64,
    /// Logistic scale in merit units.
    pub s: f64,
}

impl Evaluator {
    pub fn new(kind: EvaluatorKind, mu: f64, s: f64) -> Result<Self> {
        if !(s > 0.0 && s.is_finite()) || !mu.is_finite() {
            return Err(Error::invalid("evaluator", "need finite mu and s > 0"));
        }
        if let EvaluatorKind::NoisySurrogate { sigma } = kind {
            if !(sigma >= 0.0 && sigma.is_finite()) {
                return Err(Error::invalid("sigma", "must be finite and >= 0"));
            }
        }
        Ok(Evaluator { kind, mu, s })
    }

    /// Sets `mu` and `s` to the mean and standard deviation of the summed
    /// merit over 10^4 encodings drawn from a stream derived from the space
    /// seed.
    pub fn calibrated(space: &SequenceSpace, kind: EvaluatorKind) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(space.seed() ^ CALIBRATION_SALT);
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for _ in 0..CALIBRATION_SAMPLES {
            let e = space.random_encoding(&mut rng);
            let u = SequenceSpace::table_sum(space.merit_table(), &e);
            sum += u;
            sum_sq += u * u;
        }
        let n = CALIBRATION_SAMPLES as f64;
        let mu = sum / n;
        let var = (sum_sq / n - mu * mu).max(0.0);
        let s = libm::sqrt(var);
        Evaluator::new(kind, mu, if s > 0.0 { s } else { 1.0 })
    }

    pub fn is_deterministic(&self) -> bool {
        match self.kind {
            EvaluatorKind::Deterministic => true,
            EvaluatorKind::NoisySurrogate { sigma } => sigma == 0.0,
        }
    }

    /// The same logistic calibration without noise.
    pub fn deterministic(&self) -> Self {
        Evaluator {
            kind: EvaluatorKind::Deterministic,
            ..*self
        }
    }

    fn logistic(&self, merit: f64) -> f64 {
        1.0 / (1.0 + libm::exp(-(merit - self.mu) / self.s))
    }

    /// Quality in [0, 1]. Only the noisy kind draws from `rng`.
    pub fn quality<R: RngCore + ?Sized>(
        &self,
        space: &SequenceSpace,
        e: &Encoding,
        rng: &mut R,
    ) -> Result<f64> {
        let q = self.logistic(space.merit(e)?);
        Ok(match self.kind {
            EvaluatorKind::Deterministic => q,
            EvaluatorKind::NoisySurrogate { sigma } => {
                let z: f64 = StandardNormal.sample(rng);
                (q + sigma * z).clamp(0.0, 1.0)
            }
        })
    }

    /// Noise level at which noisy quality has Pearson correlation
    /// `target` with the deterministic quality, found by bisection over
    /// `n` encodings with fixed common random numbers.
    pub fn calibrate_sigma(
        space: &SequenceSpace,
        base: &Evaluator,
        target: f64,
        n: usize,
        seed: u64,
    ) -> Result<f64> {
        if !(target > 0.0 && target <= 1.0) {
            return Err(Error::invalid("target correlation", "must lie in (0, 1]"));
        }
        if n < 3 {
            return Err(Error::invalid("n", "need at least three samples"));
        }
        if target == 1.0 {
            return Ok(0.0);
        }
        let det = base.deterministic();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut truth = Vec::with_capacity(n);
        let mut noise = Vec::with_capacity(n);
        for _ in 0..n {
            let e = space.random_encoding(&mut rng);
            truth.push(det.quality(space, &e, &mut rng)?);
            noise.push(StandardNormal.sample(&mut rng));
        }
        let corr_at = |sigma: f64| {
            let noisy: Vec<f64> = truth
                .iter()
                .zip(&noise)
                .map(|(q, z): (&f64, &f64)| (q + sigma * z).clamp(0.0, 1.0))
                .collect();
            pearson(&truth, &noisy)
        };
        let (mut lo, mut hi) = (0.0, 1.0);
        while corr_at(hi) > target && hi < 1e6 {
            hi *= 2.0;
        }
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if corr_at(mid) > target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

/// Pearson correlation of two equal-length samples; zero if either is constant.
pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len()) as f64;
    if n == 0.0 {
        return 0.0;
    }
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa == 0.0 || sbb == 0.0 {
        0.0
    } else {
        sab / libm::sqrt(saa * sbb)
    }
}

/// A space together with the evaluator that scores it: the full objective
/// function of a search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Problem {
    pub space: SequenceSpace,
    pub evaluator: Evaluator,
}

impl Problem {
    pub fn new(space: SequenceSpace, evaluator: Evaluator) -> Self {
        Problem { space, evaluator }
    }

    /// Benchmark from its definition with a calibrated evaluator; a positive
    /// `sigma` selects the noisy surrogate.
    pub fn from_def(def: &BenchmarkDef) -> Result<Self> {
        let space = make_benchmark(def)?;
        let kind = if def.sigma > 0.0 {
            EvaluatorKind::NoisySurrogate { sigma: def.sigma }
        } else {
            EvaluatorKind::Deterministic
        };
        let evaluator = Evaluator::calibrated(&space, kind)?;
        Ok(Problem { space, evaluator })
    }

    /// Quality (maximized), parameters and optionally FLOPs (minimized).
    pub fn objective_spec(&self) -> ObjectiveSpec {
        let mut orientations = vec![Orientation::Maximize, Orientation::Minimize];
        let mut names: Vec<String> = vec!["quality".into(), "params".into()];
        let mut ranges = vec![(0.0, 1.0), self.space.ranges.params];
        if let Some(f) = self.space.ranges.flops {
            orientations.push(Orientation::Minimize);
            names.push("flops".into());
            ranges.push(f);
        }
        ObjectiveSpec::new(orientations, names, ranges).expect("benchmark ranges are validated")
    }

    /// Native ranges of the constrained (non-quality) objectives.
    pub fn constrained_ranges(&self) -> Vec<(f64, f64)> {
        let mut r = vec![self.space.ranges.params];
        r.extend(self.space.ranges.flops);
        r
    }

    pub fn objective_count(&self) -> usize {
        self.space.objective_count()
    }

    pub fn evaluate<R: RngCore + ?Sized>(
        &self,
        e: &Encoding,
        rng: &mut R,
    ) -> Result<ObjectiveVector> {
        let q = self.evaluator.quality(&self.space, e, rng)?;
        let mut v = vec![q, self.space.cost(e)?];
        if self.space.ranges.flops.is_some() {
            v.push(self.space.flops(e)?);
        }
        ObjectiveVector::new(v)
    }
}
