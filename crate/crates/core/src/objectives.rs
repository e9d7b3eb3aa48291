//! Objective vectors, Pareto dominance and the live front archive.

use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::space::Encoding;

/// Direction in which an objective improves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    Maximize,
    Minimize,
}

impl Orientation {
    /// `Greater` when `a` is better than `b` along this axis.
    #[inline]
    pub fn compare(self, a: f64, b: f64) -> Ordering {
        let ord = a.partial_cmp(&b).unwrap_or(Ordering::Equal);
        match self {
            Orientation::Maximize => ord,
            Orientation::Minimize => ord.reverse(),
        }
    }
}

/// Names, orientations and native ranges of the m objectives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSpec", into = "RawSpec")]
pub struct ObjectiveSpec {
    orientations: Vec<Orientation>,
    names: Vec<String>,
    ranges: Vec<(f64, f64)>,
}

#[derive(Serialize, Deserialize)]
struct RawSpec {
    m: usize,
    orientations: Vec<Orientation>,
    names: Vec<String>,
    ranges: Vec<(f64, f64)>,
}

impl TryFrom<RawSpec> for ObjectiveSpec {
    type Error = Error;

    fn try_from(raw: RawSpec) -> Result<Self> {
        let spec = ObjectiveSpec::new(raw.orientations, raw.names, raw.ranges)?;
        if spec.m() != raw.m {
            return Err(Error::DimensionMismatch {
                expected: raw.m,
                found: spec.m(),
            });
        }
        Ok(spec)
    }
}

impl From<ObjectiveSpec> for RawSpec {
    fn from(spec: ObjectiveSpec) -> Self {
        RawSpec {
            m: spec.m(),
            orientations: spec.orientations,
            names: spec.names,
            ranges: spec.ranges,
        }
    }
}

impl ObjectiveSpec {
    pub fn new(
        orientations: Vec<Orientation>,
        names: Vec<String>,
        ranges: Vec<(f64, f64)>,
    ) -> Result<Self> {
        let m = orientations.len();
        if m < 2 {
            return Err(Error::invalid(
                "objectives",
                "at least two objectives are required",
            ));
        }
        for len in [names.len(), ranges.len()] {
            if len != m {
                return Err(Error::DimensionMismatch {
                    expected: m,
                    found: len,
                });
            }
        }
        if ranges
            .iter()
            .any(|&(lo, hi)| !(lo < hi) || !lo.is_finite() || !hi.is_finite())
        {
            return Err(Error::invalid("ranges", "every range needs finite lo < hi"));
        }
        Ok(ObjectiveSpec {
            orientations,
            names,
            ranges,
        })
    }

    pub fn m(&self) -> usize {
        self.orientations.len()
    }

    pub fn orientations(&self) -> &[Orientation] {
        &self.orientations
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn ranges(&self) -> &[(f64, f64)] {
        &self.ranges
    }

    pub fn check(&self, v: &ObjectiveVector) -> Result<()> {
        if v.len() != self.m() {
            return Err(Error::DimensionMismatch {
                expected: self.m(),
                found: v.len(),
            });
        }
        Ok(())
    }
}

/// Objective values in native units. Always finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ObjectiveVector(Vec<f64>);

impl ObjectiveVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(axis) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { axis });
        }
        Ok(ObjectiveVector(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl TryFrom<Vec<f64>> for ObjectiveVector {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        ObjectiveVector::new(values)
    }
}

impl From<ObjectiveVector> for Vec<f64> {
    fn from(v: ObjectiveVector) -> Self {
        v.0
    }
}

impl core::ops::Index<usize> for ObjectiveVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Whether `a` dominates `b`: no worse on every axis, strictly better on one.
pub fn dominates(a: &ObjectiveVector, b: &ObjectiveVector, spec: &ObjectiveSpec) -> Result<bool> {
    spec.check(a)?;
    spec.check(b)?;
    Ok(dominates_unchecked(
        a.values(),
        b.values(),
        spec.orientations(),
    ))
}

pub(crate) fn dominates_unchecked(a: &[f64], b: &[f64], orientations: &[Orientation]) -> bool {
    let mut strictly = false;
    for ((&x, &y), o) in a.iter().zip(b).zip(orientations) {
        match o.compare(x, y) {
            Ordering::Less => return false,
            Ordering::Greater => strictly = true,
            Ordering::Equal => {}
        }
    }
    strictly
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchiveEntry {
    pub encoding: Encoding,
    pub objectives: ObjectiveVector,
}

impl ArchiveEntry {
    pub fn new(encoding: Encoding, objectives: ObjectiveVector) -> Self {
        ArchiveEntry {
            encoding,
            objectives,
        }
    }
}

/// Result of offering a candidate to the archive.
#[derive(Debug, Clone, PartialEq)]
pub enum InsertOutcome {
    /// Some entry dominates the candidate; the archive is unchanged.
    Dominated,
    /// The candidate was added. `removed` holds the entries it displaced,
    /// including a stale entry with the same encoding.
    Inserted { removed: Vec<ArchiveEntry> },
}

impl InsertOutcome {
    pub fn is_inserted(&self) -> bool {
        matches!(self, InsertOutcome::Inserted { .. })
    }
}

/// Dominance counts of a candidate against an archive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ArchiveStats {
    /// Entries that dominate the candidate.
    pub n_dominators: usize,
    /// Entries the candidate dominates.
    pub n_dominated: usize,
    /// Entries inside the per-axis epsilon box around the candidate.
    pub density: usize,
}

/// A set of mutually non-dominated entries, unique by encoding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParetoArchive {
    spec: ObjectiveSpec,
    entries: Vec<ArchiveEntry>,
}

impl ParetoArchive {
    pub fn new(spec: ObjectiveSpec) -> Self {
        ParetoArchive {
            spec,
            entries: Vec::new(),
        }
    }

    /// Rebuilds an archive from stored entries, verifying its invariants.
    pub fn from_entries(spec: ObjectiveSpec, entries: Vec<ArchiveEntry>) -> Result<Self> {
        for e in &entries {
            spec.check(&e.objectives)?;
        }
        let archive = ParetoArchive { spec, entries };
        let o = archive.spec.orientations();
        for (i, a) in archive.entries.iter().enumerate() {
            for b in &archive.entries[i + 1..] {
                if a.encoding == b.encoding {
                    return Err(Error::invalid("entries", "duplicate encoding"));
                }
                if dominates_unchecked(a.objectives.values(), b.objectives.values(), o)
                    || dominates_unchecked(b.objectives.values(), a.objectives.values(), o)
                {
                    return Err(Error::invalid(
                        "entries",
                        "entries are not mutually non-dominated",
                    ));
                }
            }
        }
        Ok(archive)
    }

    pub fn spec(&self) -> &ObjectiveSpec {
        &self.spec
    }

    pub fn entries(&self) -> &[ArchiveEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> core::slice::Iter<'_, ArchiveEntry> {
        self.entries.iter()
    }

    /// Offers a candidate. Entries it dominates are dropped; a previous entry
    /// with the same encoding is replaced when the candidate survives.
    pub fn insert(&mut self, candidate: ArchiveEntry) -> Result<InsertOutcome> {
        self.spec.check(&candidate.objectives)?;
        let o = self.spec.orientations();
        let c = candidate.objectives.values();
        if self
            .entries
            .iter()
            .any(|p| dominates_unchecked(p.objectives.values(), c, o))
        {
            return Ok(InsertOutcome::Dominated);
        }
        let mut removed = Vec::new();
        let mut kept = Vec::with_capacity(self.entries.len() + 1);
        for p in self.entries.drain(..) {
            if p.encoding == candidate.encoding || dominates_unchecked(c, p.objectives.values(), o)
            {
                removed.push(p);
            } else {
                kept.push(p);
            }
        }
        kept.push(candidate);
        self.entries = kept;
        Ok(InsertOutcome::Inserted { removed })
    }

    /// Dominator, dominated and epsilon-box counts for `candidate`.
    pub fn stats(&self, candidate: &ObjectiveVector, epsilon: &[f64]) -> Result<ArchiveStats> {
        self.spec.check(candidate)?;
        if epsilon.len() != self.spec.m() {
            return Err(Error::DimensionMismatch {
                expected: self.spec.m(),
                found: epsilon.len(),
            });
        }
        if epsilon.iter().any(|e| !(*e >= 0.0)) {
            return Err(Error::invalid("epsilon", "radii must be non-negative"));
        }
        let o = self.spec.orientations();
        let c = candidate.values();
        let mut stats = ArchiveStats::default();
        for p in &self.entries {
            let v = p.objectives.values();
            if dominates_unchecked(v, c, o) {
                stats.n_dominators += 1;
            } else if dominates_unchecked(c, v, o) {
                stats.n_dominated += 1;
            }
            if v.iter()
                .zip(c)
                .zip(epsilon)
                .all(|((a, b), e)| (a - b).abs() <= *e)
            {
                stats.density += 1;
            }
        }
        Ok(stats)
    }

    /// Whether some entry dominates `candidate`.
    pub fn dominates_candidate(&self, candidate: &ObjectiveVector) -> bool {
        let o = self.spec.orientations();
        self.entries
            .iter()
            .any(|p| dominates_unchecked(p.objectives.values(), candidate.values(), o))
    }

    /// Entries sorted by encoding; two archives hold the same set exactly
    /// when their canonical forms are equal.
    pub fn canonical(&self) -> Vec<ArchiveEntry> {
        let mut v = self.entries.clone();
        v.sort_by(|a, b| a.encoding.cmp(&b.encoding));
        v
    }

    pub fn same_set(&self, other: &ParetoArchive) -> bool {
        self.spec == other.spec && self.canonical() == other.canonical()
    }
}

impl<'a> IntoIterator for &'a ParetoArchive {
    type Item = &'a ArchiveEntry;
    type IntoIter = core::slice::Iter<'a, ArchiveEntry>;

    fn into_iter(self) -> Self::IntoIter {
        self.entries.iter()
    }
}

/// Keeps exactly the points no other point dominates. Points with equal
/// vectors are all kept; a repeated encoding keeps its last occurrence.
pub fn extract_pareto_front(
    points: &[ArchiveEntry],
    spec: &ObjectiveSpec,
) -> Result<ParetoArchive> {
    for p in points {
        spec.check(&p.objectives)?;
    }
    let o = spec.orientations();
    // Sorting on the first axis (best first) means only earlier points can
    // dominate later ones, so survivors are checked against survivors only.
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&i, &j| {
        o[0].compare(points[j].objectives[0], points[i].objectives[0])
            .then_with(|| {
                // lexicographic tie-break on remaining axes, best first
                for (k, ok) in o.iter().enumerate().skip(1) {
                    let c = ok.compare(points[j].objectives[k], points[i].objectives[k]);
                    if c != Ordering::Equal {
                        return c;
                    }
                }
                Ordering::Equal
            })
    });
    let mut front: Vec<usize> = Vec::new();
    for i in order {
        let v = points[i].objectives.values();
        if !front
            .iter()
            .any(|&j| dominates_unchecked(points[j].objectives.values(), v, o))
        {
            front.push(i);
        }
    }
    front.sort_unstable();
    let mut entries: Vec<ArchiveEntry> = Vec::with_capacity(front.len());
    for &i in front.iter().rev() {
        if !entries.iter().any(|e| e.encoding == points[i].encoding) {
            entries.push(points[i].clone());
        }
    }
    entries.reverse();
    Ok(ParetoArchive {
        spec: spec.clone(),
        entries,
    })
}
