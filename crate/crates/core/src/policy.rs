//! Factored categorical policy over decision sequences.
//!
//! Position `t` draws choice `k` with probability proportional to
//! `exp(c * tanh(z[t][k] / T))`, where `c` is the tanh constant and `T` the
//! Boltzmann temperature. Positions are independent, so the log-probability
//! of an encoding and its gradient are available in closed form.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::space::Encoding;

pub const DEFAULT_TANH_CONSTANT: f64 = 1.5;
pub const DEFAULT_BASELINE_DECAY: f64 = 0.95;
pub const ADF_LEARNING_RATE: f64 = 0.001;
pub const ADC_LEARNING_RATE: f64 = 0.002;

/// How the REINFORCE gradient is turned into a parameter step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OptimizerKind {
    /// Plain gradient ascent: `z += lr * g`.
    #[default]
    Sgd,
    /// Adam-style adaptive moments.
    Adam { beta1: f64, beta2: f64, eps: f64 },
}

impl OptimizerKind {
    pub fn adam() -> Self {
        OptimizerKind::Adam {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Hyperparameters of a fresh policy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolicyConfig {
    pub learning_rate: f64,
    pub baseline_decay: f64,
    pub tanh_constant: f64,
    #[serde(default)]
    pub optimizer: OptimizerKind,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        PolicyConfig {
            learning_rate: ADF_LEARNING_RATE,
            baseline_decay: DEFAULT_BASELINE_DECAY,
            tanh_constant: DEFAULT_TANH_CONSTANT,
            optimizer: OptimizerKind::Sgd,
        }
    }
}

impl PolicyConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid("learning_rate", "must be finite and > 0"));
        }
        if !(self.baseline_decay > 0.0 && self.baseline_decay < 1.0) {
            return Err(Error::invalid("baseline_decay", "must lie in (0, 1)"));
        }
        if !(self.tanh_constant > 0.0 && self.tanh_constant.is_finite()) {
            return Err(Error::invalid("tanh_constant", "must be finite and > 0"));
        }
        if let OptimizerKind::Adam { beta1, beta2, eps } = self.optimizer {
            let unit = |b: f64| (0.0..1.0).contains(&b);
            if !unit(beta1) || !unit(beta2) || !(eps > 0.0) {
                return Err(Error::invalid(
                    "optimizer",
                    "adam needs betas in [0, 1) and eps > 0",
                ));
            }
        }
        Ok(())
    }
}

/// Logit table, reward baseline and optimizer state of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyParams {
    logits: Vec<Vec<f64>>,
    pub baseline: f64,
    pub baseline_decay: f64,
    pub learning_rate: f64,
    pub tanh_constant: f64,
    pub optimizer: OptimizerKind,
    /// Number of updates applied so far.
    pub step: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    moments: Option<Moments>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Moments {
    first: Vec<Vec<f64>>,
    second: Vec<Vec<f64>>,
}

impl PolicyParams {
    /// Zero logits (the uniform policy) and a zero baseline.
    pub fn new(arities: &[usize], config: PolicyConfig) -> Result<Self> {
        config.validate()?;
        if arities.is_empty() || arities.contains(&0) {
            return Err(Error::invalid(
                "arities",
                "need at least one choice per position",
            ));
        }
        Ok(PolicyParams {
            logits: arities.iter().map(|&k| vec![0.0; k]).collect(),
            baseline: 0.0,
            baseline_decay: config.baseline_decay,
            learning_rate: config.learning_rate,
            tanh_constant: config.tanh_constant,
            optimizer: config.optimizer,
            step: 0,
            moments: None,
        })
    }

    pub fn with_logits(mut self, logits: Vec<Vec<f64>>) -> Result<Self> {
        let same = logits.len() == self.logits.len()
            && logits
                .iter()
                .zip(&self.logits)
                .all(|(a, b)| a.len() == b.len());
        if !same {
            return Err(Error::invalid("logits", "shape differs from the policy"));
        }
        if !logits.iter().flatten().all(|v| v.is_finite()) {
            return Err(Error::invalid("logits", "entries must be finite"));
        }
        self.logits = logits;
        Ok(self)
    }

    pub fn logits(&self) -> &[Vec<f64>] {
        &self.logits
    }

    pub fn positions(&self) -> usize {
        self.logits.len()
    }

    fn check_temperature(temperature: f64) -> Result<()> {
        if temperature > 0.0 && !temperature.is_nan() {
            Ok(())
        } else {
            Err(Error::InvalidTemperature(temperature))
        }
    }

    fn check_encoding(&self, e: &Encoding) -> Result<()> {
        if e.len() != self.positions() {
            return Err(Error::DimensionMismatch {
                expected: self.positions(),
                found: e.len(),
            });
        }
        for (position, (&value, row)) in e.decisions().iter().zip(&self.logits).enumerate() {
            if value >= row.len() {
                return Err(Error::InvalidDecision {
                    position,
                    value,
                    arity: row.len(),
                });
            }
        }
        Ok(())
    }

    fn probabilities(&self, t: usize, temperature: f64) -> Vec<f64> {
        let c = self.tanh_constant;
        let zeta: Vec<f64> = self.logits[t]
            .iter()
            .map(|&z| c * libm::tanh(z / temperature))
            .collect();
        let max = zeta.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut p: Vec<f64> = zeta.iter().map(|&v| libm::exp(v - max)).collect();
        let sum: f64 = p.iter().sum();
        for v in &mut p {
            *v /= sum;
        }
        p
    }

    /// Choice probabilities at position `t` under temperature `T`.
    pub fn action_distribution(&self, t: usize, temperature: f64) -> Result<Vec<f64>> {
        Self::check_temperature(temperature)?;
        if t >= self.positions() {
            return Err(Error::DimensionMismatch {
                expected: self.positions(),
                found: t,
            });
        }
        Ok(self.probabilities(t, temperature))
    }

    /// Draws one encoding and returns it with its log-probability.
    pub fn sample<R: RngCore + ?Sized>(
        &self,
        temperature: f64,
        rng: &mut R,
    ) -> Result<(Encoding, f64)> {
        Self::check_temperature(temperature)?;
        let mut decisions = Vec::with_capacity(self.positions());
        let mut log_prob = 0.0;
        for t in 0..self.positions() {
            let p = self.probabilities(t, temperature);
            let u: f64 = rng.random();
            let mut acc = 0.0;
            let mut choice = p.len() - 1;
            for (k, &pk) in p.iter().enumerate() {
                acc += pk;
                if u < acc {
                    choice = k;
                    break;
                }
            }
            log_prob += libm::log(p[choice]);
            decisions.push(choice);
        }
        Ok((Encoding::new(decisions), log_prob))
    }

    pub fn log_prob(&self, e: &Encoding, temperature: f64) -> Result<f64> {
        Self::check_temperature(temperature)?;
        self.check_encoding(e)?;
        Ok(e.decisions()
            .iter()
            .enumerate()
            .map(|(t, &k)| libm::log(self.probabilities(t, temperature)[k]))
            .sum())
    }

    /// Gradient of `log pi(e)` with respect to every logit:
    /// `(1[j = e_t] - pi_t(j)) * c * (1 - tanh^2(z[t][j] / T)) / T`.
    pub fn grad_log_prob(&self, e: &Encoding, temperature: f64) -> Result<Vec<Vec<f64>>> {
        Self::check_temperature(temperature)?;
        self.check_encoding(e)?;
        let c = self.tanh_constant;
        Ok(self
            .logits
            .iter()
            .enumerate()
            .map(|(t, row)| {
                let p = self.probabilities(t, temperature);
                let chosen = e.decisions()[t];
                row.iter()
                    .zip(&p)
                    .enumerate()
                    .map(|(j, (&z, &pj))| {
                        let th = libm::tanh(z / temperature);
                        let indicator = if j == chosen { 1.0 } else { 0.0 };
                        (indicator - pj) * c * (1.0 - th * th) / temperature
                    })
                    .collect()
            })
            .collect())
    }

    /// One REINFORCE step. The advantage uses the baseline from before this
    /// call; the baseline then moves toward `reward`.
    pub fn reinforce_update(&mut self, e: &Encoding, reward: f64, temperature: f64) -> Result<()> {
        self.reinforce_update_batch(core::slice::from_ref(&(e.clone(), reward)), temperature)
    }

    /// REINFORCE over a mini-batch: the step follows the mean of
    /// `advantage * grad log pi` across the batch, all advantages measured
    /// against the pre-update baseline. The baseline then absorbs the
    /// rewards in order.
    pub fn reinforce_update_batch(
        &mut self,
        batch: &[(Encoding, f64)],
        temperature: f64,
    ) -> Result<()> {
        if batch.is_empty() {
            return Ok(());
        }
        if let Some((_, r)) = batch.iter().find(|(_, r)| !r.is_finite()) {
            return Err(Error::invalid(
                "reward",
                alloc::format!("non-finite reward {r}"),
            ));
        }
        let n = batch.len() as f64;
        let mut direction: Vec<Vec<f64>> = self.logits.iter().map(|r| vec![0.0; r.len()]).collect();
        for (e, reward) in batch {
            let advantage = reward - self.baseline;
            if advantage == 0.0 {
                self.check_encoding(e)?;
                continue;
            }
            let g = self.grad_log_prob(e, temperature)?;
            for (drow, grow) in direction.iter_mut().zip(&g) {
                for (d, gv) in drow.iter_mut().zip(grow) {
                    *d += advantage * gv / n;
                }
            }
        }
        self.apply(&direction);
        for (_, reward) in batch {
            self.baseline =
                self.baseline_decay * self.baseline + (1.0 - self.baseline_decay) * reward;
        }
        self.step += 1;
        Ok(())
    }

    fn apply(&mut self, direction: &[Vec<f64>]) {
        let lr = self.learning_rate;
        match self.optimizer {
            OptimizerKind::Sgd => {
                for (zrow, drow) in self.logits.iter_mut().zip(direction) {
                    for (z, d) in zrow.iter_mut().zip(drow) {
                        *z += lr * d;
                    }
                }
            }
            OptimizerKind::Adam { beta1, beta2, eps } => {
                let shape: Vec<usize> = self.logits.iter().map(Vec::len).collect();
                let moments = self.moments.get_or_insert_with(|| Moments {
                    first: shape.iter().map(|&k| vec![0.0; k]).collect(),
                    second: shape.iter().map(|&k| vec![0.0; k]).collect(),
                });
                let t = (self.step + 1) as i32;
                let c1 = 1.0 - libm::pow(beta1, t as f64);
                let c2 = 1.0 - libm::pow(beta2, t as f64);
                for (t_idx, drow) in direction.iter().enumerate() {
                    for (j, &g) in drow.iter().enumerate() {
                        let m = &mut moments.first[t_idx][j];
                        let v = &mut moments.second[t_idx][j];
                        *m = beta1 * *m + (1.0 - beta1) * g;
                        *v = beta2 * *v + (1.0 - beta2) * g * g;
                        let step = lr * (*m / c1) / (libm::sqrt(*v / c2) + eps);
                        self.logits[t_idx][j] += step;
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn policy(arities: &[usize]) -> PolicyParams {
        PolicyParams::new(arities, PolicyConfig::default()).unwrap()
    }

    fn random_policy(arities: &[usize], rng: &mut ChaCha8Rng, scale: f64) -> PolicyParams {
        let logits = arities
            .iter()
            .map(|&k| {
                (0..k)
                    .map(|_| (rng.random::<f64>() * 2.0 - 1.0) * scale)
                    .collect()
            })
            .collect();
        policy(arities).with_logits(logits).unwrap()
    }

    // softmax of c * tanh(z / T), written out independently
    fn oracle_probs(z: &[f64], c: f64, t: f64) -> Vec<f64> {
        let e: Vec<f64> = z.iter().map(|v| (c * (v / t).tanh()).exp()).collect();
        let s: f64 = e.iter().sum();
        e.iter().map(|v| v / s).collect()
    }

    #[test]
    fn uniform_for_equal_logits_and_high_temperature() {
        let p = policy(&[4]).with_logits(vec![vec![0.7; 4]]).unwrap();
        for v in p.action_distribution(0, 1.0).unwrap() {
            assert!((v - 0.25).abs() < 1e-15);
        }
        let p = policy(&[3])
            .with_logits(vec![vec![5.0, -2.0, 0.3]])
            .unwrap();
        for v in p.action_distribution(0, 1e9).unwrap() {
            assert!((v - 1.0 / 3.0).abs() < 1e-6);
        }
    }

    #[test]
    fn two_choice_closed_form() {
        let p = policy(&[2]).with_logits(vec![vec![2.0, 0.0]]).unwrap();
        let d = p.action_distribution(0, 1.0).unwrap();
        // 1.5 * tanh(2) = 1.446_041_...; logistic of that
        let zeta = 1.5 * 2.0f64.tanh();
        let expect = 1.0 / (1.0 + (-zeta).exp());
        assert!((d[0] - expect).abs() < 1e-15);
        assert!((d[0] - 0.8094).abs() < 1e-4, "{}", d[0]);
        assert!((d[1] - 0.1906).abs() < 1e-4);
    }

    #[test]
    fn temperature_must_be_positive() {
        let p = policy(&[2]);
        assert_eq!(
            p.action_distribution(0, 0.0),
            Err(Error::InvalidTemperature(0.0))
        );
        assert!(p.action_distribution(0, -1.0).is_err());
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(p.sample(0.0, &mut rng).is_err());
    }

    #[test]
    fn saturated_logits_sample_deterministically() {
        let mut logits = vec![vec![0.0; 4]; 3];
        let target = [2usize, 0, 3];
        for (row, &k) in logits.iter_mut().zip(&target) {
            row[k] = 1e6;
        }
        let p = PolicyParams::new(
            &[4, 4, 4],
            PolicyConfig {
                tanh_constant: 50.0,
                ..Default::default()
            },
        )
        .unwrap()
        .with_logits(logits)
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let (e, lp) = p.sample(1.0, &mut rng).unwrap();
            assert_eq!(e.decisions(), &target);
            assert!(lp > -1e-9);
        }
    }

    #[test]
    fn uniform_sampling_frequencies() {
        let p = policy(&[2, 2]);
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let mut counts = [0usize; 4];
        let n = 10_000;
        for _ in 0..n {
            let (e, _) = p.sample(1.0, &mut rng).unwrap();
            counts[e.decisions()[0] * 2 + e.decisions()[1]] += 1;
        }
        for c in counts {
            assert!((c as f64 / n as f64 - 0.25).abs() < 0.02, "{counts:?}");
        }
    }

    #[test]
    fn sample_log_prob_matches_recomputation() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let arities = [3, 4, 2, 5];
        let p = random_policy(&arities, &mut rng, 3.0);
        for _ in 0..50 {
            let (e, lp) = p.sample(2.0, &mut rng).unwrap();
            let expect: f64 = e
                .decisions()
                .iter()
                .enumerate()
                .map(|(t, &k)| oracle_probs(&p.logits()[t], 1.5, 2.0)[k].ln())
                .sum();
            assert!((lp - expect).abs() < 1e-12);
            assert!((p.log_prob(&e, 2.0).unwrap() - lp).abs() < 1e-12);
        }
    }

    #[test]
    fn gradient_at_uniform_logits() {
        let p = policy(&[4]);
        let g = p.grad_log_prob(&Encoding::new(vec![1]), 1.0).unwrap();
        assert!((g[0][1] - 1.125).abs() < 1e-15);
        for j in [0, 2, 3] {
            assert!((g[0][j] + 0.375).abs() < 1e-15);
        }
    }

    #[test]
    fn gradient_vanishes_for_saturated_logit() {
        let p = policy(&[3])
            .with_logits(vec![vec![400.0, 0.0, 0.0]])
            .unwrap();
        let g = p.grad_log_prob(&Encoding::new(vec![1]), 1.0).unwrap();
        assert!(g[0][0].abs() < 1e-100);
        assert!(g[0][1].abs() > 0.1);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let arities = [3, 4, 2];
        let h = 1e-5;
        for _ in 0..20 {
            let p = random_policy(&arities, &mut rng, 4.0);
            let temp = 1.0 + rng.random::<f64>() * 24.0;
            let (e, _) = p.sample(temp, &mut rng).unwrap();
            let g = p.grad_log_prob(&e, temp).unwrap();
            for t in 0..arities.len() {
                for j in 0..arities[t] {
                    let mut plus = p.logits().to_vec();
                    plus[t][j] += h;
                    let mut minus = p.logits().to_vec();
                    minus[t][j] -= h;
                    let lp = |l: Vec<Vec<f64>>| -> f64 {
                        e.decisions()
                            .iter()
                            .enumerate()
                            .map(|(s, &k)| oracle_probs(&l[s], 1.5, temp)[k].ln())
                            .sum()
                    };
                    let fd = (lp(plus) - lp(minus)) / (2.0 * h);
                    let err = (g[t][j] - fd).abs() / fd.abs().max(1e-3);
                    assert!(err < 1e-6, "t={t} j={j} analytic={} fd={fd}", g[t][j]);
                }
            }
        }
    }

    #[test]
    fn zero_advantage_leaves_policy_unchanged() {
        let mut p = policy(&[3, 3]);
        p.baseline = 0.4;
        let before = p.clone();
        p.reinforce_update(&Encoding::new(vec![1, 2]), 0.4, 5.0)
            .unwrap();
        assert_eq!(p.logits(), before.logits());
        assert_eq!(p.baseline, 0.4);
    }

    #[test]
    fn positive_advantage_raises_sampled_probability() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut p = random_policy(&[4, 4, 4], &mut rng, 1.0);
        let e = Encoding::new(vec![3, 1, 0]);
        let before = p.log_prob(&e, 2.0).unwrap();
        p.reinforce_update(&e, 1.0, 2.0).unwrap();
        assert!(p.log_prob(&e, 2.0).unwrap() > before);
    }

    #[test]
    fn two_step_trace_matches_hand_rolled_recursion() {
        let cfg = PolicyConfig {
            learning_rate: 0.1,
            baseline_decay: 0.9,
            tanh_constant: 1.5,
            optimizer: OptimizerKind::Sgd,
        };
        let mut p = PolicyParams::new(&[2, 3], cfg).unwrap();
        let steps = [
            (Encoding::new(vec![1, 2]), 0.8, 2.0),
            (Encoding::new(vec![0, 2]), 0.3, 1.5),
        ];

        let mut z = vec![vec![0.0; 2], vec![0.0; 3]];
        let mut b = 0.0;
        for (e, r, temp) in &steps {
            let adv = r - b;
            let mut next = z.clone();
            for t in 0..2 {
                let pr = oracle_probs(&z[t], 1.5, *temp);
                for j in 0..z[t].len() {
                    let th = (z[t][j] / temp).tanh();
                    let ind = if e.decisions()[t] == j { 1.0 } else { 0.0 };
                    next[t][j] += 0.1 * adv * (ind - pr[j]) * 1.5 * (1.0 - th * th) / temp;
                }
            }
            z = next;
            b = 0.9 * b + 0.1 * r;
            p.reinforce_update(e, *r, *temp).unwrap();
        }
        for t in 0..2 {
            for j in 0..z[t].len() {
                assert!((p.logits()[t][j] - z[t][j]).abs() < 1e-15);
            }
        }
        assert!((p.baseline - b).abs() < 1e-15);
        assert_eq!(p.step, 2);
    }

    #[test]
    fn adam_moves_toward_rewarded_encoding() {
        let cfg = PolicyConfig {
            optimizer: OptimizerKind::adam(),
            ..Default::default()
        };
        let mut p = PolicyParams::new(&[4, 4], cfg).unwrap();
        let e = Encoding::new(vec![2, 3]);
        let before = p.log_prob(&e, 1.0).unwrap();
        for _ in 0..10 {
            p.reinforce_update(&e, 1.0, 1.0).unwrap();
        }
        assert!(p.log_prob(&e, 1.0).unwrap() > before);
    }

    #[test]
    fn non_finite_reward_rejected() {
        let mut p = policy(&[2]);
        assert!(p
            .reinforce_update(&Encoding::new(vec![0]), f64::NAN, 1.0)
            .is_err());
    }

    proptest! {
        #[test]
        fn distribution_sums_to_one(z in prop::collection::vec(-50.0f64..50.0, 1..8), t in 0.01f64..100.0) {
            let k = z.len();
            let p = policy(&[k]).with_logits(vec![z]).unwrap();
            let d = p.action_distribution(0, t).unwrap();
            prop_assert!((d.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
            prop_assert!(d.iter().all(|&v| v > 0.0));
        }

        #[test]
        fn equal_logits_stay_uniform(v in -20.0f64..20.0, k in 1usize..9, t in 0.01f64..100.0) {
            let p = policy(&[k]).with_logits(vec![vec![v; k]]).unwrap();
            for x in p.action_distribution(0, t).unwrap() {
                prop_assert!((x - 1.0 / k as f64).abs() < 1e-12);
            }
        }

        #[test]
        fn update_is_deterministic(seed in 0u64..1000, reward in -1.0f64..1.0, t in 0.5f64..25.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let p = random_policy(&[3, 2, 4], &mut rng, 2.0);
            let (e, _) = p.sample(t, &mut rng).unwrap();
            let mut a = p.clone();
            let mut b = p;
            a.reinforce_update(&e, reward, t).unwrap();
            b.reinforce_update(&e, reward, t).unwrap();
            prop_assert_eq!(a, b);
        }
    }
}
