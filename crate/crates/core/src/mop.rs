//! Multi-objective primitives: vectors, Pareto relations, scalarization and
//! the bounded non-dominated archive.
//!
//! All objectives are minimized. `a` dominates `b` when `a` is no worse in
//! every objective and strictly better in at least one.

use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point in decision space, in problem units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DecisionVector(pub Vec<f64>);

/// A point in objective space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ObjectiveVector(pub Vec<f64>);

impl Deref for DecisionVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl Deref for ObjectiveVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for DecisionVector {
    fn from(v: Vec<f64>) -> Self {
        DecisionVector(v)
    }
}

impl From<Vec<f64>> for ObjectiveVector {
    fn from(v: Vec<f64>) -> Self {
        ObjectiveVector(v)
    }
}

/// Population member. `fitness` is the weighted sum of `objectives` under
/// the run's active weights; unevaluated individuals carry empty objectives
/// and a NaN fitness.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Individual {
    pub genes: DecisionVector,
    pub objectives: ObjectiveVector,
    pub fitness: f64,
}

impl Individual {
    pub fn unevaluated(genes: DecisionVector) -> Self {
        Individual {
            genes,
            objectives: ObjectiveVector(Vec::new()),
            fitness: f64::NAN,
        }
    }

    pub fn is_evaluated(&self) -> bool {
        !self.objectives.is_empty()
    }
}

/// Axis-aligned box `[lower[i], upper[i]]` of the decision space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl Bounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::contract(format!(
                "bounds length mismatch: {} lower vs {} upper",
                lower.len(),
                upper.len()
            )));
        }
        if lower.is_empty() {
            return Err(Error::contract("bounds must have at least one dimension"));
        }
        for (i, (lo, hi)) in lower.iter().zip(&upper).enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::contract(format!(
                    "invalid bounds in dimension {i}: [{lo}, {hi}]"
                )));
            }
        }
        Ok(Bounds { lower, upper })
    }

    /// The same interval in each of `n` dimensions.
    pub fn uniform(n: usize, lower: f64, upper: f64) -> Result<Self> {
        Bounds::new(vec![lower; n], vec![upper; n])
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (lo, hi))| *v >= *lo && *v <= *hi)
    }
}

/// Convex combination weights for scalarizing an objective vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    pub const SUM_TOLERANCE: f64 = 1e-12;

    /// Weights must be non-negative and sum to one.
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        Self::check_entries(&weights)?;
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > Self::SUM_TOLERANCE {
            return Err(Error::contract(format!("weights sum to {sum}, expected 1")));
        }
        Ok(WeightVector(weights))
    }

    /// Rescales arbitrary non-negative weights onto the unit simplex.
    pub fn normalized(weights: Vec<f64>) -> Result<Self> {
        Self::check_entries(&weights)?;
        let sum: f64 = weights.iter().sum();
        Ok(WeightVector(weights.into_iter().map(|w| w / sum).collect()))
    }

    pub fn uniform(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::contract("weight vector must be non-empty"));
        }
        Ok(WeightVector(vec![1.0 / m as f64; m]))
    }

    fn check_entries(weights: &[f64]) -> Result<()> {
        if weights.is_empty() {
            return Err(Error::contract("weight vector must be non-empty"));
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return Err(Error::contract(format!("invalid weight {w}")));
        }
        if weights.iter().all(|w| *w == 0.0) {
            return Err(Error::contract("all-zero weight vector"));
        }
        Ok(())
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

fn check_same_len(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::contract(format!(
            "objective vectors differ in length: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    Ok(())
}

pub(crate) fn dominates_unchecked(a: &[f64], b: &[f64]) -> bool {
    let mut strictly_better = false;
    for (x, y) in a.iter().zip(b) {
        if x > y {
            return false;
        }
        if x < y {
            strictly_better = true;
        }
    }
    strictly_better
}

/// Pareto dominance under minimization.
pub fn dominates(a: &[f64], b: &[f64]) -> Result<bool> {
    check_same_len(a, b)?;
    Ok(dominates_unchecked(a, b))
}

/// `a` dominates `b` or the two are equal elementwise.
pub fn covers(a: &[f64], b: &[f64]) -> Result<bool> {
    check_same_len(a, b)?;
    Ok(a == b || dominates_unchecked(a, b))
}

/// Points not dominated by any other input point, in input order.
/// Duplicates do not dominate each other and are all kept.
pub fn non_dominated_filter(points: &[ObjectiveVector]) -> Result<Vec<ObjectiveVector>> {
    if let Some(first) = points.first() {
        for p in points {
            check_same_len(first, p)?;
        }
    }
    Ok(points
        .iter()
        .filter(|p| !points.iter().any(|q| dominates_unchecked(q, p)))
        .cloned()
        .collect())
}

/// Fast path for two objectives: indices of the non-dominated points of
/// `points`, in input order. Used for the dense grid fronts.
pub(crate) fn non_dominated_indices_2d(points: &[[f64; 2]]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&i, &j| {
        points[i][0]
            .total_cmp(&points[j][0])
            .then(points[i][1].total_cmp(&points[j][1]))
    });
    let mut keep = Vec::new();
    // Smallest f2 among points with strictly smaller f1.
    let mut best_before = f64::INFINITY;
    let mut start = 0;
    while start < order.len() {
        let f1 = points[order[start]][0];
        let mut end = start;
        while end < order.len() && points[order[end]][0] == f1 {
            end += 1;
        }
        // Sorted by f2 within a group, so the group minimum is first.
        let group_min = points[order[start]][1];
        if group_min < best_before {
            keep.extend(
                order[start..end]
                    .iter()
                    .copied()
                    .take_while(|&i| points[i][1] == group_min),
            );
        }
        best_before = best_before.min(group_min);
        start = end;
    }
    keep.sort_unstable();
    keep
}

/// Scalarized fitness `Σ w_i f_i`.
pub fn weighted_sum(objectives: &[f64], weights: &WeightVector) -> Result<f64> {
    if objectives.len() != weights.len() {
        return Err(Error::contract(format!(
            "{} objectives but {} weights",
            objectives.len(),
            weights.len()
        )));
    }
    Ok(objectives
        .iter()
        .zip(weights.as_slice())
        .map(|(f, w)| f * w)
        .sum())
}

/// Projects each gene onto its interval.
pub fn clamp_to_bounds(genes: &DecisionVector, bounds: &Bounds) -> Result<DecisionVector> {
    if genes.len() != bounds.dim() {
        return Err(Error::contract(format!(
            "decision vector has {} genes, bounds have {} dimensions",
            genes.len(),
            bounds.dim()
        )));
    }
    Ok(DecisionVector(
        genes
            .iter()
            .zip(bounds.lower().iter().zip(bounds.upper()))
            .map(|(v, (lo, hi))| v.clamp(*lo, *hi))
            .collect(),
    ))
}

/// External store of mutually non-dominated individuals with a size cap.
///
/// When an insertion would exceed the cap, the member with the smallest
/// nearest-neighbour distance in objective space is dropped (oldest first on
/// ties). Nearest-neighbour distances are maintained incrementally.
#[derive(Debug, Clone, Serialize)]
pub struct Archive {
    members: Vec<Individual>,
    capacity: usize,
    /// (squared distance, index) of each member's nearest neighbour.
    #[serde(skip)]
    nearest: Vec<(f64, usize)>,
    /// Member objectives, row-major.
    #[serde(skip)]
    points: Vec<f64>,
    #[serde(skip)]
    dim: usize,
}

impl PartialEq for Archive {
    fn eq(&self, other: &Self) -> bool {
        self.capacity == other.capacity && self.members == other.members
    }
}

impl Archive {
    pub const DEFAULT_CAPACITY: usize = 500;

    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::config("archive capacity must be positive"));
        }
        Ok(Archive {
            members: Vec::new(),
            capacity,
            nearest: Vec::new(),
            points: Vec::new(),
            dim: 0,
        })
    }

    pub fn members(&self) -> &[Individual] {
        &self.members
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn objectives(&self) -> Vec<ObjectiveVector> {
        self.members.iter().map(|m| m.objectives.clone()).collect()
    }

    fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    /// Offers `candidate` to the archive. Returns whether it was kept
    /// (it may still be the member pruned for crowding, in which case
    /// `false` is returned).
    pub fn insert(&mut self, candidate: Individual) -> bool {
        debug_assert!(candidate.is_evaluated());
        if self.members.is_empty() {
            self.dim = candidate.objectives.len();
        }
        debug_assert_eq!(candidate.objectives.len(), self.dim);
        let mut dominated = Vec::new();
        for (i, p) in self.points.chunks_exact(self.dim).enumerate() {
            if dominates_unchecked(p, &candidate.objectives) {
                return false;
            }
            if dominates_unchecked(&candidate.objectives, p) {
                dominated.push(i);
            }
        }
        match dominated.as_slice() {
            [] => {}
            [i] => self.remove_one(*i),
            _ => self.remove_indices(&dominated),
        }

        let new_idx = self.members.len();
        let mut own = (f64::INFINITY, usize::MAX);
        for (i, p) in self.points.chunks_exact(self.dim).enumerate() {
            let d = squared_distance(p, &candidate.objectives);
            if d < own.0 {
                own = (d, i);
            }
            if d < self.nearest[i].0 {
                self.nearest[i] = (d, new_idx);
            }
        }
        self.points.extend_from_slice(&candidate.objectives);
        self.members.push(candidate);
        self.nearest.push(own);

        if self.members.len() > self.capacity {
            let mut victim = 0;
            for (i, (d, _)) in self.nearest.iter().enumerate() {
                if *d < self.nearest[victim].0 {
                    victim = i;
                }
            }
            self.remove_one(victim);
            return victim != new_idx;
        }
        true
    }

    fn remove_one(&mut self, victim: usize) {
        self.members.remove(victim);
        self.nearest.remove(victim);
        self.points
            .drain(victim * self.dim..(victim + 1) * self.dim);
        for k in 0..self.members.len() {
            let nb = self.nearest[k].1;
            if nb == victim {
                self.nearest[k] = self.scan_nearest(k);
            } else if nb > victim && nb != usize::MAX {
                self.nearest[k].1 = nb - 1;
            }
        }
    }

    /// Removes the members at the (ascending) `indices` and repairs the
    /// nearest-neighbour table.
    fn remove_indices(&mut self, indices: &[usize]) {
        let mut remap = vec![usize::MAX; self.members.len()];
        let mut next = 0;
        let mut removed = indices.iter().peekable();
        for (i, slot) in remap.iter_mut().enumerate() {
            if removed.peek() == Some(&&i) {
                removed.next();
            } else {
                *slot = next;
                next += 1;
            }
        }
        let keep = |i: usize| remap[i] != usize::MAX;
        let mut i = 0;
        self.members.retain(|_| {
            i += 1;
            keep(i - 1)
        });
        let mut i = 0;
        self.nearest.retain(|_| {
            i += 1;
            keep(i - 1)
        });
        let dim = self.dim;
        let mut i = 0;
        self.points.retain(|_| {
            i += 1;
            keep((i - 1) / dim)
        });
        for k in 0..self.members.len() {
            let (_, nb) = self.nearest[k];
            if nb != usize::MAX && remap[nb] != usize::MAX {
                self.nearest[k].1 = remap[nb];
            } else {
                self.nearest[k] = self.scan_nearest(k);
            }
        }
    }

    fn scan_nearest(&self, k: usize) -> (f64, usize) {
        let own = self.point(k);
        let mut best = (f64::INFINITY, usize::MAX);
        for (i, p) in self.points.chunks_exact(self.dim).enumerate() {
            if i == k {
                continue;
            }
            let d = squared_distance(p, own);
            if d < best.0 {
                best = (d, i);
            }
        }
        best
    }
}

pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}
