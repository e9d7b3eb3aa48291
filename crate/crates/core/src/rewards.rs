//! Non-stationary reward functions.
//!
//! The annealing desirability reward multiplies quality by a triangular
//! "target is best" score per constrained objective. The dominance credit
//! reward scores a candidate against the archive as it stood before the
//! candidate is inserted.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objectives::{ObjectiveVector, ParetoArchive};

/// Target and half-width of a triangular desirability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DesirabilitySpec {
    pub tau: f64,
    pub delta: f64,
}

impl DesirabilitySpec {
    pub fn new(tau: f64, delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta.is_finite()) || !tau.is_finite() {
            return Err(Error::invalid("delta", "need finite tau and delta > 0"));
        }
        Ok(DesirabilitySpec { tau, delta })
    }
}

/// `1 - |tau - f2| / delta` inside the band, zero outside.
pub fn desirability(f2: f64, d: &DesirabilitySpec) -> f64 {
    let gap = (d.tau - f2).abs();
    if gap <= d.delta {
        1.0 - gap / d.delta
    } else {
        0.0
    }
}

/// Quality times the product of one desirability per constrained objective.
pub fn adf_reward(quality: f64, constrained: &[f64], specs: &[DesirabilitySpec]) -> Result<f64> {
    if constrained.len() != specs.len() {
        return Err(Error::DimensionMismatch {
            expected: specs.len(),
            found: constrained.len(),
        });
    }
    Ok(constrained
        .iter()
        .zip(specs)
        .fold(quality, |acc, (&f, d)| acc * desirability(f, d)))
}

/// Density radii and tanh scale of the dominance credit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdcSpec {
    /// Per-axis box radii in native units, one per objective.
    pub epsilon: alloc::vec::Vec<f64>,
    pub c: f64,
}

pub const DEFAULT_ADC_SCALE: f64 = 10.0;

impl AdcSpec {
    pub fn new(epsilon: alloc::vec::Vec<f64>, c: f64) -> Result<Self> {
        let s = AdcSpec { epsilon, c };
        s.validate()?;
        Ok(s)
    }

    /// Zero radius on quality, 0.1 M parameters and 0.02 B FLOPs.
    pub fn default_for(m: usize) -> Self {
        let mut epsilon = alloc::vec![0.0, 0.1];
        if m >= 3 {
            epsilon.push(0.02);
        }
        epsilon.resize(m, 0.0);
        AdcSpec {
            epsilon,
            c: DEFAULT_ADC_SCALE,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::invalid("adc.c", "must be finite and > 0"));
        }
        if self.epsilon.iter().any(|e| !(*e >= 0.0 && e.is_finite())) {
            return Err(Error::invalid(
                "adc.epsilon",
                "radii must be finite and >= 0",
            ));
        }
        Ok(())
    }
}

/// Dominance credit of `candidate` against the current archive:
/// `-tanh((N_dominators + density) / C)` when dominated, otherwise
/// `tanh((N + N_dominated) / C)`.
pub fn adc_reward(
    candidate: &ObjectiveVector,
    archive: &ParetoArchive,
    spec: &AdcSpec,
) -> Result<f64> {
    let st = archive.stats(candidate, &spec.epsilon)?;
    Ok(if st.n_dominators > 0 {
        -libm::tanh((st.n_dominators + st.density) as f64 / spec.c)
    } else {
        libm::tanh((archive.len() + st.n_dominated) as f64 / spec.c)
    })
}
