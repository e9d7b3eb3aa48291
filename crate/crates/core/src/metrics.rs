//! Front-quality metrics and sampling histograms.
//!
//! All metrics work in a normalized space where every axis is maximized and
//! lies in [0, 1]: maximized objectives map `lo -> 0, hi -> 1`, minimized
//! ones `hi -> 0, lo -> 1`. Values outside the range are clamped.

use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::algorithms::RunRecord;
use crate::error::{Error, Result};
use crate::objectives::{ObjectiveSpec, Orientation, ParetoArchive};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisNormalization {
    pub lo: f64,
    pub hi: f64,
    pub orientation: Orientation,
}

impl AxisNormalization {
    pub fn apply(&self, v: f64) -> f64 {
        let x = (v - self.lo) / (self.hi - self.lo);
        let x = match self.orientation {
            Orientation::Maximize => x,
            Orientation::Minimize => 1.0 - x,
        };
        x.clamp(0.0, 1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationSpec {
    pub axes: Vec<AxisNormalization>,
}

impl NormalizationSpec {
    pub fn new(axes: Vec<AxisNormalization>) -> Result<Self> {
        if axes.iter().any(|a| !(a.lo < a.hi)) {
            return Err(Error::invalid(
                "normalization",
                "need lo < hi on every axis",
            ));
        }
        Ok(NormalizationSpec { axes })
    }

    /// Uses the objective spec's native ranges.
    pub fn from_spec(spec: &ObjectiveSpec) -> Self {
        NormalizationSpec {
            axes: spec
                .ranges()
                .iter()
                .zip(spec.orientations())
                .map(|(&(lo, hi), &orientation)| AxisNormalization {
                    lo,
                    hi,
                    orientation,
                })
                .collect(),
        }
    }

    pub fn m(&self) -> usize {
        self.axes.len()
    }

    pub fn normalize(&self, v: &[f64]) -> Vec<f64> {
        v.iter().zip(&self.axes).map(|(&x, a)| a.apply(x)).collect()
    }

    fn normalized_front(&self, front: &ParetoArchive) -> Result<Vec<Vec<f64>>> {
        if front.spec().m() != self.m() {
            return Err(Error::DimensionMismatch {
                expected: self.m(),
                found: front.spec().m(),
            });
        }
        Ok(front
            .iter()
            .map(|e| self.normalize(e.objectives.values()))
            .collect())
    }
}

fn desc(a: f64, b: f64) -> Ordering {
    b.partial_cmp(&a).unwrap_or(Ordering::Equal)
}

/// Area of the union of boxes `[ref, p]` for maximized 2-D points that all
/// weakly dominate `reference`.
fn area_2d(points: &mut [[f64; 2]], reference: [f64; 2]) -> f64 {
    points.sort_by(|a, b| desc(a[0], b[0]).then(desc(a[1], b[1])));
    let mut area = 0.0;
    let mut top = reference[1];
    for p in points.iter() {
        if p[1] > top {
            area += (p[0] - reference[0]) * (p[1] - top);
            top = p[1];
        }
    }
    area
}

/// Fraction of the unit square dominated by the normalized front, computed
/// with a sorted rectangle sweep. Zero for an empty front.
pub fn dominated_area_2d(front: &ParetoArchive, norm: &NormalizationSpec) -> Result<f64> {
    if norm.m() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: norm.m(),
        });
    }
    let mut pts: Vec<[f64; 2]> = norm
        .normalized_front(front)?
        .into_iter()
        .map(|v| [v[0], v[1]])
        .collect();
    Ok(area_2d(&mut pts, [0.0, 0.0]))
}

/// Hypervolume of maximized points relative to `reference`, for two or
/// three axes. Every point must weakly dominate the reference.
pub fn hypervolume_points(points: &[Vec<f64>], reference: &[f64]) -> Result<f64> {
    let m = reference.len();
    if !(2..=3).contains(&m) {
        return Err(Error::invalid(
            "hypervolume",
            "only two or three objectives are supported",
        ));
    }
    for p in points {
        if p.len() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                found: p.len(),
            });
        }
        if p.iter().zip(reference).any(|(x, r)| x < r) {
            return Err(Error::ReferenceNotDominated);
        }
    }
    if m == 2 {
        let mut pts: Vec<[f64; 2]> = points.iter().map(|p| [p[0], p[1]]).collect();
        return Ok(area_2d(&mut pts, [reference[0], reference[1]]));
    }
    // slice along the third axis, highest first; each slab's cross-section
    // is the 2-D area of every point reaching at least that high
    let mut sorted: Vec<&Vec<f64>> = points.iter().collect();
    sorted.sort_by(|a, b| desc(a[2], b[2]));
    let mut volume = 0.0;
    let mut active: Vec<[f64; 2]> = Vec::with_capacity(sorted.len());
    let mut i = 0;
    while i < sorted.len() {
        let z = sorted[i][2];
        while i < sorted.len() && sorted[i][2] == z {
            active.push([sorted[i][0], sorted[i][1]]);
            i += 1;
        }
        let next = if i < sorted.len() {
            sorted[i][2]
        } else {
            reference[2]
        };
        let section = area_2d(&mut active, [reference[0], reference[1]]);
        volume += section * (z - next);
    }
    Ok(volume)
}

/// Hypervolume of the normalized front against a normalized reference point
/// (the origin corner by default).
pub fn hypervolume(
    front: &ParetoArchive,
    reference: Option<&[f64]>,
    norm: &NormalizationSpec,
) -> Result<f64> {
    let pts = norm.normalized_front(front)?;
    let origin = vec![0.0; norm.m()];
    hypervolume_points(&pts, reference.unwrap_or(&origin))
}

/// Counts of samples per equal-width bin over the axis's native range.
/// Values outside the range land in the edge bins.
pub fn histogram(
    values: impl IntoIterator<Item = f64>,
    range: (f64, f64),
    bins: usize,
) -> Result<Vec<usize>> {
    if bins == 0 {
        return Err(Error::invalid("bins", "must be at least 1"));
    }
    let (lo, hi) = range;
    if !(lo < hi) {
        return Err(Error::invalid("range", "need lo < hi"));
    }
    let mut counts = vec![0usize; bins];
    for v in values {
        let x = libm::floor((v - lo) / (hi - lo) * bins as f64);
        let b = if x.is_nan() || x < 0.0 {
            0
        } else {
            (x as usize).min(bins - 1)
        };
        counts[b] += 1;
    }
    Ok(counts)
}

/// Histogram of every recorded sample along objective `axis`.
pub fn sample_histogram(
    record: &RunRecord,
    axis: usize,
    bins: usize,
    norm: &NormalizationSpec,
) -> Result<Vec<usize>> {
    let a = norm.axes.get(axis).ok_or(Error::DimensionMismatch {
        expected: norm.m(),
        found: axis,
    })?;
    histogram(
        record.samples.iter().map(|s| s.objectives[axis]),
        (a.lo, a.hi),
        bins,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::{extract_pareto_front, ArchiveEntry, ObjectiveVector};
    use crate::space::Encoding;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn spec(m: usize) -> ObjectiveSpec {
        let mut o = vec![Orientation::Maximize];
        o.resize(m, Orientation::Minimize);
        ObjectiveSpec::new(
            o,
            (0..m).map(|i| alloc::format!("f{i}")).collect(),
            vec![(0.0, 1.0); m],
        )
        .unwrap()
    }

    fn front(points: &[Vec<f64>]) -> ParetoArchive {
        let m = points[0].len();
        let entries: Vec<ArchiveEntry> = points
            .iter()
            .enumerate()
            .map(|(i, p)| {
                ArchiveEntry::new(
                    Encoding::new(vec![i]),
                    ObjectiveVector::new(p.clone()).unwrap(),
                )
            })
            .collect();
        extract_pareto_front(&entries, &spec(m)).unwrap()
    }

    #[test]
    fn rectangle_cases() {
        let s = spec(2);
        let n = NormalizationSpec::from_spec(&s);
        // (quality, cost) in native units
        assert_eq!(
            dominated_area_2d(&front(&[vec![1.0, 0.0]]), &n).unwrap(),
            1.0
        );
        assert_eq!(
            dominated_area_2d(&front(&[vec![0.5, 0.5]]), &n).unwrap(),
            0.25
        );
        let a = dominated_area_2d(&front(&[vec![0.4, 0.2], vec![0.9, 0.6]]), &n).unwrap();
        assert!((a - 0.52).abs() < 1e-15, "{a}");
        assert_eq!(dominated_area_2d(&ParetoArchive::new(s), &n).unwrap(), 0.0);
    }

    #[test]
    fn three_d_box() {
        let n = NormalizationSpec::new(vec![
            AxisNormalization {
                lo: 0.0,
                hi: 1.0,
                orientation: Orientation::Maximize
            };
            3
        ])
        .unwrap();
        let s = ObjectiveSpec::new(
            vec![Orientation::Maximize; 3],
            vec!["a".into(), "b".into(), "c".into()],
            vec![(0.0, 1.0); 3],
        )
        .unwrap();
        let f = extract_pareto_front(
            &[ArchiveEntry::new(
                Encoding::new(vec![0]),
                ObjectiveVector::new(vec![0.5, 0.5, 0.5]).unwrap(),
            )],
            &s,
        )
        .unwrap();
        assert_eq!(hypervolume(&f, None, &n).unwrap(), 0.125);
    }

    #[test]
    fn reference_must_be_dominated() {
        assert_eq!(
            hypervolume_points(&[vec![0.5, 0.5]], &[0.6, 0.0]),
            Err(Error::ReferenceNotDominated)
        );
        assert!(hypervolume_points(&[vec![0.5; 4]], &[0.0; 4]).is_err());
    }

    #[test]
    fn hypervolume_2d_equals_dominated_area() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let n = NormalizationSpec::from_spec(&spec(2));
        for _ in 0..100 {
            let k = rng.random_range(1..30);
            let pts: Vec<Vec<f64>> = (0..k).map(|_| vec![rng.random(), rng.random()]).collect();
            let f = front(&pts);
            assert_eq!(
                hypervolume(&f, None, &n).unwrap(),
                dominated_area_2d(&f, &n).unwrap()
            );
        }
    }

    #[test]
    fn hypervolume_3d_inclusion_exclusion() {
        // two overlapping boxes: 0.5*0.5*1 + 1*0.5*0.5 - 0.5*0.5*0.5
        let v = hypervolume_points(&[vec![0.5, 0.5, 1.0], vec![1.0, 0.5, 0.5]], &[0.0; 3]).unwrap();
        assert!((v - 0.375).abs() < 1e-15);
    }

    #[test]
    fn histogram_basics() {
        assert_eq!(
            histogram([0.3; 10], (0.0, 1.0), 4).unwrap(),
            vec![0, 10, 0, 0]
        );
        assert_eq!(
            histogram([-1.0, 1.0, 2.0, 0.999], (0.0, 1.0), 2).unwrap(),
            vec![1, 3]
        );
        assert!(histogram([0.1], (0.0, 1.0), 0).is_err());

        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = 20_000;
        let bins = 10;
        let counts = histogram((0..n).map(|_| rng.random::<f64>()), (0.0, 1.0), bins).unwrap();
        assert_eq!(counts.iter().sum::<usize>(), n);
        let p = 1.0 / bins as f64;
        let sd = (n as f64 * p * (1.0 - p)).sqrt();
        for c in counts {
            assert!((c as f64 - n as f64 * p).abs() < 3.0 * sd);
        }
    }

    proptest! {
        #[test]
        fn adding_a_point_never_shrinks_area(
            pts in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 1..20),
            extra in (0.0f64..1.0, 0.0f64..1.0),
        ) {
            let n = NormalizationSpec::from_spec(&spec(2));
            let base: Vec<Vec<f64>> = pts.iter().map(|&(a, b)| vec![a, b]).collect();
            let mut more = base.clone();
            more.push(vec![extra.0, extra.1]);
            prop_assert!(dominated_area_2d(&front(&more), &n).unwrap() >= dominated_area_2d(&front(&base), &n).unwrap());
        }

        #[test]
        fn hypervolume_ignores_order_and_dominated_points(
            pts in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0, 0.0f64..1.0), 1..25),
        ) {
            let raw: Vec<Vec<f64>> = pts.iter().map(|&(a, b, c)| vec![a, b, c]).collect();
            let mut rev = raw.clone();
            rev.reverse();
            let all = hypervolume_points(&raw, &[0.0; 3]).unwrap();
            prop_assert!((all - hypervolume_points(&rev, &[0.0; 3]).unwrap()).abs() < 1e-12);
            let s = ObjectiveSpec::new(vec![Orientation::Maximize; 3], vec!["a".into(), "b".into(), "c".into()], vec![(0.0, 1.0); 3]).unwrap();
            let entries: Vec<ArchiveEntry> = raw.iter().enumerate()
                .map(|(i, p)| ArchiveEntry::new(Encoding::new(vec![i]), ObjectiveVector::new(p.clone()).unwrap()))
                .collect();
            let f = extract_pareto_front(&entries, &s).unwrap();
            let kept: Vec<Vec<f64>> = f.iter().map(|e| e.objectives.values().to_vec()).collect();
            prop_assert!((all - hypervolume_points(&kept, &[0.0; 3]).unwrap()).abs() < 1e-12);
        }
    }
}
