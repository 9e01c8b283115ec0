//! Reliable-sample selection: cohesion scores, belief-ratio thresholding,
//! CCN/CCD splitting, and the monotone reliability state.
//!
//! Cohesion of a sample is its distance to the centroid of its assigned
//! cluster; smaller means more reliable. Each iteration, every cluster
//! contributes its Δ-fraction of *closest* active members (at least one) to
//! the reliable set. Once a sample is reliable its pseudo-label is frozen
//! forever: the reliable sets form an inclusion chain with strictly
//! increasing cardinality — violations are surfaced as invariant errors,
//! not repaired.
//!
//! Indices inside [`CohesionScores`] are positions into the scored feature
//! matrix (the caller decides whether that is the full dataset or the
//! active pool); [`ReliabilityState`] always works in dataset-global
//! indices.

use std::collections::BTreeMap;

use crate::cluster::{distance, ClusterModel};
use crate::data::config::Distance;
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;

/// Per-sample cohesion plus per-cluster descending-sorted score vectors ρ.
#[derive(Debug, Clone)]
pub struct CohesionScores {
    scores: Vec<f64>,
    /// Per cluster: (score, position) sorted by score descending; equal
    /// scores sort by descending position so the vector tail holds the
    /// smallest scores with the lowest positions last-first.
    rho: Vec<Vec<(f64, usize)>>,
    empty_clusters: Vec<usize>,
}

impl CohesionScores {
    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    /// Cluster c's sorted score vector (descending).
    pub fn rho(&self, c: usize) -> &[(f64, usize)] {
        &self.rho[c]
    }

    pub fn n_clusters(&self) -> usize {
        self.rho.len()
    }

    /// Clusters with no members in the scored set.
    pub fn empty_clusters(&self) -> &[usize] {
        &self.empty_clusters
    }
}

/// Scores every row of `f` against the centroid of its assigned cluster.
pub fn cohesion(
    f: &FeatureMatrix,
    model: &ClusterModel,
    metric: Distance,
) -> Result<CohesionScores> {
    if model.labels().len() != f.n() {
        return Err(Error::dim(format!(
            "model assigns {} samples, feature matrix has {}",
            model.labels().len(),
            f.n()
        )));
    }
    if model.dim() != f.dim() {
        return Err(Error::dim(format!(
            "model dimension {} vs feature dimension {}",
            model.dim(),
            f.dim()
        )));
    }
    let scores: Vec<f64> = (0..f.n())
        .map(|i| distance(metric, f.row(i), model.centroids().row(model.labels()[i])))
        .collect();
    let mut rho: Vec<Vec<(f64, usize)>> = vec![Vec::new(); model.k()];
    for (i, &l) in model.labels().iter().enumerate() {
        rho[l].push((scores[i], i));
    }
    for v in &mut rho {
        v.sort_by(|a, b| {
            b.0.partial_cmp(&a.0)
                .expect("finite scores")
                .then(b.1.cmp(&a.1))
        });
    }
    let empty_clusters = (0..model.k()).filter(|&c| rho[c].is_empty()).collect();
    Ok(CohesionScores {
        scores,
        rho,
        empty_clusters,
    })
}

/// Marks reliable the m = max(1, ⌊Δ·n_c⌋) smallest-cohesion members of each
/// nonempty cluster; ties on equal scores go to the lower position. Returns
/// the selected positions, ascending.
pub fn select_ccn(scores: &CohesionScores, delta: f64) -> Result<Vec<usize>> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::invalid(format!(
            "belief ratio must lie in (0, 1], got {delta}"
        )));
    }
    let mut selected = Vec::new();
    for rho in &scores.rho {
        let n_c = rho.len();
        if n_c == 0 {
            continue;
        }
        // The epsilon absorbs cases like 0.3·10 = 2.999…96 where the exact
        // product is integral but the float rounds just below it.
        let m = ((delta * n_c as f64 + 1e-9).floor() as usize).clamp(1, n_c);
        selected.extend(rho[n_c - m..].iter().map(|&(_, i)| i));
    }
    selected.sort_unstable();
    Ok(selected)
}

/// Δ ← min(1, Δ + δ).
pub fn advance_delta(delta: f64, small_delta: f64) -> f64 {
    (delta + small_delta).min(1.0)
}

/// The binary reliability vector v, frozen pseudo-labels for X_l, and the
/// per-iteration history of v.
#[derive(Debug, Clone)]
pub struct ReliabilityState {
    v: Vec<bool>,
    frozen: BTreeMap<usize, usize>,
    history: Vec<Vec<bool>>,
}

impl ReliabilityState {
    pub fn new(n: usize) -> Self {
        ReliabilityState {
            v: vec![false; n],
            frozen: BTreeMap::new(),
            history: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.v.len()
    }

    pub fn is_empty(&self) -> bool {
        self.v.is_empty()
    }

    pub fn is_reliable(&self, i: usize) -> bool {
        self.v[i]
    }

    /// ‖v‖₁.
    pub fn reliable_count(&self) -> usize {
        self.frozen.len()
    }

    /// X_s: indices with v = 0, ascending.
    pub fn active_indices(&self) -> Vec<usize> {
        (0..self.v.len()).filter(|&i| !self.v[i]).collect()
    }

    /// Frozen pseudo-labels of X_l (index → label), ascending by index.
    pub fn frozen_labels(&self) -> &BTreeMap<usize, usize> {
        &self.frozen
    }

    /// Freezes pseudo-labels for newly selected samples. Re-freezing an
    /// already reliable sample is an invariant violation.
    pub fn freeze(&mut self, items: &[(usize, usize)]) -> Result<()> {
        for &(i, label) in items {
            if i >= self.v.len() {
                return Err(Error::invariant(format!("sample index {i} out of range")));
            }
            if self.v[i] {
                return Err(Error::invariant(format!(
                    "sample {i} is already reliable; its label cannot be rewritten"
                )));
            }
            self.v[i] = true;
            self.frozen.insert(i, label);
        }
        Ok(())
    }

    /// Splits the pre-selection active pool into (X_st, X_ss): the members
    /// that just became reliable and those still active. The two sets are
    /// disjoint and partition `prev_active`.
    pub fn split(&self, prev_active: &[usize]) -> (Vec<usize>, Vec<usize>) {
        let mut ccn = Vec::new();
        let mut ccd = Vec::new();
        for &i in prev_active {
            if self.v[i] {
                ccn.push(i);
            } else {
                ccd.push(i);
            }
        }
        (ccn, ccd)
    }

    /// Records the end-of-iteration snapshot of v, enforcing the chain
    /// constraints: inclusion in the previous snapshot and strictly larger
    /// cardinality.
    pub fn commit_snapshot(&mut self) -> Result<()> {
        if let Some(prev) = self.history.last() {
            let prev_count = prev.iter().filter(|&&b| b).count();
            if let Some(i) = (0..self.v.len()).find(|&i| prev[i] && !self.v[i]) {
                return Err(Error::invariant(format!(
                    "reliable sample {i} was dropped from the reliable set"
                )));
            }
            if self.reliable_count() <= prev_count {
                return Err(Error::invariant(format!(
                    "reliable set did not grow: {} -> {}",
                    prev_count,
                    self.reliable_count()
                )));
            }
        } else if self.reliable_count() == 0 {
            return Err(Error::invariant("first snapshot must select something"));
        }
        self.history.push(self.v.clone());
        Ok(())
    }

    pub fn history(&self) -> &[Vec<bool>] {
        &self.history
    }
}
