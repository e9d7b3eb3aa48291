//! Temperature schedules, target annealing and grid traversals.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Cosine decay from `t_max` to `t_min` over `period + 1` steps, then a
/// warm restart back at `t_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TemperatureSchedule {
    pub t_min: f64,
    pub t_max: f64,
    pub period: u64,
}

impl TemperatureSchedule {
    pub fn new(t_min: f64, t_max: f64, period: u64) -> Result<Self> {
        let s = TemperatureSchedule {
            t_min,
            t_max,
            period,
        };
        s.validate()?;
        Ok(s)
    }

    /// A constant temperature.
    pub fn fixed(t: f64) -> Result<Self> {
        Self::new(t, t, 1)
    }

    /// 10 -> 5 with period 50.
    pub fn adf_default() -> Self {
        TemperatureSchedule {
            t_min: 5.0,
            t_max: 10.0,
            period: 50,
        }
    }

    /// 25 -> 1 with period 1200.
    pub fn adc_default() -> Self {
        TemperatureSchedule {
            t_min: 1.0,
            t_max: 25.0,
            period: 1200,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_min > 0.0 && self.t_min <= self.t_max && self.t_max.is_finite()) {
            return Err(Error::invalid("schedule", "need 0 < t_min <= t_max"));
        }
        if self.period == 0 {
            return Err(Error::invalid("schedule.period", "must be at least 1"));
        }
        Ok(())
    }

    pub fn temperature_at(&self, step: u64) -> f64 {
        let phase = (step % (self.period + 1)) as f64 / self.period as f64;
        self.t_min
            + (self.t_max - self.t_min) / 2.0 * (1.0 + libm::cos(core::f64::consts::PI * phase))
    }
}

/// Linear target annealing: `tau_min + (tau_max - tau_min) / n_anneal * step`.
pub fn target_at(tau_min: f64, tau_max: f64, n_anneal: usize, step: usize) -> Result<f64> {
    if !(tau_min < tau_max) {
        return Err(Error::invalid("tau", "need tau_min < tau_max"));
    }
    if step == 0 || step > n_anneal {
        return Err(Error::StepOutOfRange {
            step,
            max: n_anneal,
        });
    }
    if step == n_anneal {
        return Ok(tau_max);
    }
    Ok(tau_min + (tau_max - tau_min) / n_anneal as f64 * step as f64)
}

/// `n` evenly spaced points from `lo` to `hi` inclusive; `[lo]` when `n == 1`.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|i| {
                if i == n - 1 {
                    hi
                } else {
                    lo + (hi - lo) * i as f64 / (n - 1) as f64
                }
            })
            .collect(),
    }
}

/// Visits a `rows x cols` grid by anti-diagonal strips of alternating
/// direction. Consecutive cells are at most one step apart in each index.
pub fn zigzag_traversal(rows: usize, cols: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(rows * cols);
    if rows == 0 || cols == 0 {
        return out;
    }
    for d in 0..rows + cols - 1 {
        let i_lo = d.saturating_sub(cols - 1);
        let i_hi = d.min(rows - 1);
        if d % 2 == 1 {
            for i in (i_lo..=i_hi).rev() {
                out.push((i, d - i));
            }
        } else {
            for i in i_lo..=i_hi {
                out.push((i, d - i));
            }
        }
    }
    out
}

/// Snake order over an arbitrary-rank grid: the last index sweeps back and
/// forth while outer indices advance one at a time.
fn boustrophedon(dims: &[usize]) -> Vec<Vec<usize>> {
    match dims {
        [] => vec![Vec::new()],
        [n] => (0..*n).map(|i| vec![i]).collect(),
        [first, rest @ ..] => {
            let inner = boustrophedon(rest);
            let mut out = Vec::with_capacity(first * inner.len());
            for i in 0..*first {
                let iter: alloc::boxed::Box<dyn Iterator<Item = &Vec<usize>>> = if i % 2 == 0 {
                    alloc::boxed::Box::new(inner.iter())
                } else {
                    alloc::boxed::Box::new(inner.iter().rev())
                };
                for tail in iter {
                    let mut idx = Vec::with_capacity(dims.len());
                    idx.push(i);
                    idx.extend_from_slice(tail);
                    out.push(idx);
                }
            }
            out
        }
    }
}

/// Locality-preserving order over a grid of any rank. One dimension is a
/// plain sweep, two are zig-zag, more use a zig-zag over the last two
/// dimensions nested inside a snake over the outer ones.
pub fn grid_traversal(dims: &[usize]) -> Vec<Vec<usize>> {
    if dims.contains(&0) {
        return Vec::new();
    }
    match dims.len() {
        0 => Vec::new(),
        1 => (0..dims[0]).map(|i| vec![i]).collect(),
        n => {
            let (outer, inner) = dims.split_at(n - 2);
            let plane = zigzag_traversal(inner[0], inner[1]);
            let mut out = Vec::with_capacity(dims.iter().product());
            for (block, prefix) in boustrophedon(outer).into_iter().enumerate() {
                let push = |out: &mut Vec<Vec<usize>>, &(i, j): &(usize, usize)| {
                    let mut idx = prefix.clone();
                    idx.push(i);
                    idx.push(j);
                    out.push(idx);
                };
                if block % 2 == 0 {
                    plane.iter().for_each(|c| push(&mut out, c));
                } else {
                    plane.iter().rev().for_each(|c| push(&mut out, c));
                }
            }
            out
        }
    }
}

/// Targets on a regular grid plus the order in which they are visited.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetGrid {
    axes: Vec<Vec<f64>>,
    order: Vec<Vec<usize>>,
}

impl TargetGrid {
    /// `counts[i]` evenly spaced targets over `ranges[i]`, endpoints included,
    /// traversed with [`grid_traversal`].
    pub fn regular(ranges: &[(f64, f64)], counts: &[usize]) -> Result<Self> {
        if ranges.len() != counts.len() || ranges.is_empty() {
            return Err(Error::DimensionMismatch {
                expected: ranges.len(),
                found: counts.len(),
            });
        }
        if counts.contains(&0) {
            return Err(Error::invalid(
                "grid",
                "every axis needs at least one target",
            ));
        }
        if ranges.iter().any(|&(lo, hi)| !(lo < hi)) {
            return Err(Error::invalid("grid", "need lo < hi on every axis"));
        }
        let axes = ranges
            .iter()
            .zip(counts)
            .map(|(&(lo, hi), &n)| linspace(lo, hi, n))
            .collect();
        Ok(TargetGrid {
            axes,
            order: grid_traversal(counts),
        })
    }

    pub fn axes(&self) -> &[Vec<f64>] {
        &self.axes
    }

    pub fn order(&self) -> &[Vec<usize>] {
        &self.order
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// Target values of the `i`-th visited grid point.
    pub fn targets(&self, i: usize) -> Vec<f64> {
        self.order[i]
            .iter()
            .zip(&self.axes)
            .map(|(&k, axis)| axis[k])
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::collections::BTreeSet;
    use proptest::prelude::*;

    fn linf(a: &[usize], b: &[usize]) -> usize {
        a.iter()
            .zip(b)
            .map(|(x, y)| x.abs_diff(*y))
            .max()
            .unwrap_or(0)
    }

    #[test]
    fn temperature_examples() {
        let s = TemperatureSchedule::new(5.0, 10.0, 50).unwrap();
        assert_eq!(s.temperature_at(0), 10.0);
        assert_eq!(s.temperature_at(50), 5.0);
        assert!((s.temperature_at(25) - 7.5).abs() < 1e-12);
        assert_eq!(s.temperature_at(51), 10.0);
    }

    #[test]
    fn schedule_validation() {
        assert!(TemperatureSchedule::new(0.0, 1.0, 5).is_err());
        assert!(TemperatureSchedule::new(2.0, 1.0, 5).is_err());
        assert!(TemperatureSchedule::new(1.0, 2.0, 0).is_err());
        let f = TemperatureSchedule::fixed(5.0).unwrap();
        assert!((0..10).all(|s| f.temperature_at(s) == 5.0));
    }

    #[test]
    fn target_examples() {
        assert_eq!(target_at(0.1, 2.0, 6000, 6000).unwrap(), 2.0);
        assert!((target_at(0.1, 2.0, 6000, 3000).unwrap() - 1.05).abs() < 1e-12);
        assert_eq!(target_at(0.1, 2.0, 1, 1).unwrap(), 2.0);
        assert_eq!(
            target_at(0.1, 2.0, 10, 0),
            Err(Error::StepOutOfRange { step: 0, max: 10 })
        );
        assert!(target_at(0.1, 2.0, 10, 11).is_err());
        assert!(target_at(2.0, 0.1, 10, 1).is_err());
    }

    #[test]
    fn target_strictly_increasing() {
        let v: Vec<f64> = (1..=6000)
            .map(|s| target_at(0.1, 2.0, 6000, s).unwrap())
            .collect();
        assert!(v.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn zigzag_small_cases() {
        assert_eq!(zigzag_traversal(1, 1), vec![(0, 0)]);
        assert_eq!(zigzag_traversal(2, 2), vec![(0, 0), (1, 0), (0, 1), (1, 1)]);
        let big = zigzag_traversal(110, 109);
        assert_eq!(big.len(), 11990);
    }

    #[test]
    fn zigzag_exhaustive_up_to_20() {
        for r in 1..=20 {
            for c in 1..=20 {
                let t = zigzag_traversal(r, c);
                let set: BTreeSet<_> = t.iter().copied().collect();
                assert_eq!(set.len(), r * c);
                assert!(t.iter().all(|&(i, j)| i < r && j < c));
                for w in t.windows(2) {
                    assert!(linf(&[w[0].0, w[0].1], &[w[1].0, w[1].1]) <= 1, "{r}x{c}");
                }
            }
        }
    }

    #[test]
    fn higher_rank_traversal_is_local_permutation() {
        for dims in [vec![3, 4, 5], vec![2, 3, 2, 4], vec![5], vec![1, 1, 7]] {
            let t = grid_traversal(&dims);
            let set: BTreeSet<_> = t.iter().cloned().collect();
            assert_eq!(set.len(), dims.iter().product::<usize>());
            for w in t.windows(2) {
                assert!(linf(&w[0], &w[1]) <= 1, "{dims:?} {:?}", w);
            }
        }
    }

    #[test]
    fn grid_targets_hit_endpoints() {
        let g = TargetGrid::regular(&[(0.1, 2.0), (0.02, 0.31)], &[110, 109]).unwrap();
        assert_eq!(g.len(), 11990);
        assert_eq!(g.targets(0), vec![0.1, 0.02]);
        assert_eq!(g.targets(g.len() - 1), vec![2.0, 0.31]);
        assert_eq!(linspace(0.0, 1.0, 1), vec![0.0]);
        assert_eq!(linspace(0.1, 2.0, 10)[9], 2.0);
    }

    proptest! {
        #[test]
        fn temperature_bounded_and_periodic(lo in 0.1f64..10.0, span in 0.0f64..30.0, period in 1u64..2000, step in 0u64..100_000) {
            let s = TemperatureSchedule::new(lo, lo + span, period).unwrap();
            let t = s.temperature_at(step);
            prop_assert!(t >= s.t_min - 1e-12 && t <= s.t_max + 1e-12);
            prop_assert_eq!(t, s.temperature_at(step + period + 1));
        }
    }
}
