//! Clustering evaluation: pair-counting indices (JC, FMI, ARI), normalized
//! mutual information, optimally matched accuracy, the Davies–Bouldin
//! index with its boot-normalized ratio, and the feature-sensitivity
//! index τ.

use serde::{Deserialize, Serialize};

use crate::cluster::distance;
use crate::data::config::Distance;
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;

/// Sample-pair counts between two partitions of the same N samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairConfusion {
    /// Pairs together in both partitions.
    pub tp: u64,
    /// Together in `pred` only.
    pub fp: u64,
    /// Together in `truth` only.
    pub fn_: u64,
    /// Apart in both.
    pub tn: u64,
}

/// One row of evaluation indices. `dbi` fields are optional because they
/// need a feature space, not just label vectors.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct EvalReport {
    pub jc: f64,
    pub fmi: f64,
    pub nmi: f64,
    pub ari: f64,
    pub acc: f64,
    pub dbi: Option<f64>,
    pub dbi_normalized: Option<f64>,
}

impl EvalReport {
    /// All label-based indices; DBI left unset.
    pub fn external(truth: &[usize], pred: &[usize]) -> Result<EvalReport> {
        let pc = pair_confusion(truth, pred)?;
        Ok(EvalReport {
            jc: jc(&pc),
            fmi: fmi(&pc),
            nmi: nmi(truth, pred)?,
            ari: ari(truth, pred)?,
            acc: acc(truth, pred)?,
            dbi: None,
            dbi_normalized: None,
        })
    }
}

/// Contingency table with compacted cluster ids plus the marginals.
struct Contingency {
    counts: Vec<Vec<u64>>,
    rows: Vec<u64>,
    cols: Vec<u64>,
    n: u64,
}

fn contingency(truth: &[usize], pred: &[usize]) -> Result<Contingency> {
    if truth.len() != pred.len() {
        return Err(Error::dim(format!(
            "{} truth labels vs {} predictions",
            truth.len(),
            pred.len()
        )));
    }
    if truth.is_empty() {
        return Err(Error::invalid("label vectors are empty"));
    }
    let compact = |labels: &[usize]| -> (Vec<usize>, usize) {
        let mut map = std::collections::BTreeMap::new();
        let ids = labels
            .iter()
            .map(|&l| {
                let next = map.len();
                *map.entry(l).or_insert(next)
            })
            .collect();
        (ids, map.len())
    };
    let (t_ids, kt) = compact(truth);
    let (p_ids, kp) = compact(pred);
    let mut counts = vec![vec![0u64; kt]; kp];
    for (&p, &t) in p_ids.iter().zip(&t_ids) {
        counts[p][t] += 1;
    }
    let rows: Vec<u64> = counts.iter().map(|r| r.iter().sum()).collect();
    let mut cols = vec![0u64; kt];
    for r in &counts {
        for (j, &v) in r.iter().enumerate() {
            cols[j] += v;
        }
    }
    Ok(Contingency {
        counts,
        rows,
        cols,
        n: truth.len() as u64,
    })
}

fn choose2(n: u64) -> u64 {
    n * n.saturating_sub(1) / 2
}

/// Closed-form pair counts from the contingency table, O(N + cells).
pub fn pair_confusion(truth: &[usize], pred: &[usize]) -> Result<PairConfusion> {
    if truth.len() < 2 {
        return Err(Error::invalid("need at least 2 samples for pair counts"));
    }
    let ct = contingency(truth, pred)?;
    let tp: u64 = ct
        .counts
        .iter()
        .flat_map(|r| r.iter())
        .map(|&v| choose2(v))
        .sum();
    let sum_rows: u64 = ct.rows.iter().map(|&v| choose2(v)).sum();
    let sum_cols: u64 = ct.cols.iter().map(|&v| choose2(v)).sum();
    let total = choose2(ct.n);
    let fp = sum_rows - tp;
    let fn_ = sum_cols - tp;
    let tn = total - tp - fp - fn_;
    Ok(PairConfusion { tp, fp, fn_, tn })
}

/// Jaccard coefficient tp/(tp+fp+fn); two all-singleton partitions agree
/// trivially and score 1.
pub fn jc(pc: &PairConfusion) -> f64 {
    let denom = pc.tp + pc.fp + pc.fn_;
    if denom == 0 {
        1.0
    } else {
        pc.tp as f64 / denom as f64
    }
}

/// Fowlkes–Mallows tp/√((tp+fp)(tp+fn)); 0 when one factor vanishes, 1
/// when the pair problem is empty (all singletons in both).
pub fn fmi(pc: &PairConfusion) -> f64 {
    if pc.tp + pc.fp + pc.fn_ == 0 {
        return 1.0;
    }
    if pc.fp == 0 && pc.fn_ == 0 {
        return 1.0; // tp/√(tp·tp), kept exact
    }
    let a = pc.tp + pc.fp;
    let b = pc.tp + pc.fn_;
    if a == 0 || b == 0 {
        return 0.0;
    }
    pc.tp as f64 / (a as f64 * b as f64).sqrt()
}

/// Adjusted Rand index; the degenerate 0/0 case (e.g. both partitions all
/// singletons or both one cluster) scores 1.
pub fn ari(truth: &[usize], pred: &[usize]) -> Result<f64> {
    if truth.len() < 2 {
        return Err(Error::invalid("need at least 2 samples for ARI"));
    }
    let ct = contingency(truth, pred)?;
    let index: f64 = ct
        .counts
        .iter()
        .flat_map(|r| r.iter())
        .map(|&v| choose2(v) as f64)
        .sum();
    let sum_rows: f64 = ct.rows.iter().map(|&v| choose2(v) as f64).sum();
    let sum_cols: f64 = ct.cols.iter().map(|&v| choose2(v) as f64).sum();
    let total = choose2(ct.n) as f64;
    let expected = sum_rows * sum_cols / total;
    let max_index = 0.5 * (sum_rows + sum_cols);
    if (max_index - expected).abs() < 1e-12 {
        return Ok(1.0);
    }
    Ok((index - expected) / (max_index - expected))
}

/// NMI with geometric-mean normalization I/√(H·H), natural logarithms.
/// Both entropies zero → 1; exactly one zero → 0. Identical partitions
/// short-circuit to exactly 1 (the two summations would otherwise land a
/// rounding ulp apart).
pub fn nmi(truth: &[usize], pred: &[usize]) -> Result<f64> {
    let ct = contingency(truth, pred)?;
    if ct.counts.len() == ct.cols.len()
        && ct
            .counts
            .iter()
            .all(|row| row.iter().filter(|&&v| v > 0).count() <= 1)
        && ct.cols.len() > 1
    {
        // Every pred cluster maps into exactly one truth class and the
        // cluster counts match: the partitions coincide.
        return Ok(1.0);
    }
    let n = ct.n as f64;
    let entropy = |marginal: &[u64]| -> f64 {
        marginal
            .iter()
            .filter(|&&c| c > 0)
            .map(|&c| {
                let p = c as f64 / n;
                -p * p.ln()
            })
            .sum()
    };
    let h_t = entropy(&ct.cols);
    let h_p = entropy(&ct.rows);
    if h_t == 0.0 && h_p == 0.0 {
        return Ok(1.0);
    }
    if h_t == 0.0 || h_p == 0.0 {
        return Ok(0.0);
    }
    let mut mi = 0.0;
    for (i, row) in ct.counts.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            if v > 0 {
                let p_ij = v as f64 / n;
                mi += p_ij * (n * v as f64 / (ct.rows[i] as f64 * ct.cols[j] as f64)).ln();
            }
        }
    }
    Ok((mi / (h_t * h_p).sqrt()).clamp(0.0, 1.0))
}

/// Clustering accuracy: best one-to-one cluster→class matching (optimal
/// assignment on the padded-square count matrix), matched fraction of N.
pub fn acc(truth: &[usize], pred: &[usize]) -> Result<f64> {
    let ct = contingency(truth, pred)?;
    let k = ct.counts.len().max(ct.cols.len());
    // Pad to square; maximize counts ⇒ minimize (max_entry − count).
    let max_entry = ct
        .counts
        .iter()
        .flat_map(|r| r.iter())
        .cloned()
        .max()
        .unwrap_or(0) as i64;
    let mut cost = vec![vec![max_entry; k]; k];
    for (i, row) in ct.counts.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            cost[i][j] = max_entry - v as i64;
        }
    }
    let assignment = hungarian_min(&cost);
    let matched: u64 = assignment
        .iter()
        .enumerate()
        .filter(|&(i, &j)| i < ct.counts.len() && j < ct.cols.len())
        .map(|(i, &j)| ct.counts[i][j])
        .sum();
    Ok(matched as f64 / ct.n as f64)
}

/// Minimum-cost perfect matching on a square cost matrix (potentials
/// method, O(k³)). Returns the column assigned to each row.
fn hungarian_min(cost: &[Vec<i64>]) -> Vec<usize> {
    let k = cost.len();
    // 1-indexed potentials over rows (u) and columns (v); way[j] remembers
    // the augmenting path's predecessor column.
    let mut u = vec![0i64; k + 1];
    let mut v = vec![0i64; k + 1];
    let mut p = vec![0usize; k + 1]; // p[j] = row matched to column j
    let mut way = vec![0usize; k + 1];
    for i in 1..=k {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![i64::MAX; k + 1];
        let mut used = vec![false; k + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = i64::MAX;
            let mut j1 = 0usize;
            for j in 1..=k {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=k {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0usize; k];
    for j in 1..=k {
        if p[j] > 0 {
            assignment[p[j] - 1] = j - 1;
        }
    }
    assignment
}

/// Davies–Bouldin index: (1/K) Σ_k max_{j≠k} (S_k + S_j)/M_kj with S the
/// mean member–centroid Euclidean distance and M the centroid distance.
pub fn dbi(f: &FeatureMatrix, labels: &[usize]) -> Result<f64> {
    if labels.len() != f.n() {
        return Err(Error::dim(format!(
            "{} labels for {} feature rows",
            labels.len(),
            f.n()
        )));
    }
    let k = labels.iter().max().map_or(0, |m| m + 1);
    if k < 2 {
        return Err(Error::invalid("DBI needs at least 2 clusters"));
    }
    let mut counts = vec![0usize; k];
    for &l in labels {
        counts[l] += 1;
    }
    if let Some(c) = counts.iter().position(|&c| c == 0) {
        return Err(Error::invalid(format!("cluster {c} is empty")));
    }
    let mut centroids = ndarray::Array2::<f64>::zeros((k, f.dim()));
    for (i, &l) in labels.iter().enumerate() {
        let mut row = centroids.row_mut(l);
        row += &f.row(i);
    }
    for (c, &n_c) in counts.iter().enumerate() {
        let mut row = centroids.row_mut(c);
        row /= n_c as f64;
    }
    let mut scatter = vec![0.0f64; k];
    for (i, &l) in labels.iter().enumerate() {
        scatter[l] += distance(Distance::Euclidean, f.row(i), centroids.row(l));
    }
    for (c, s) in scatter.iter_mut().enumerate() {
        *s /= counts[c] as f64;
    }
    let mut total = 0.0;
    for a in 0..k {
        let mut worst = f64::NEG_INFINITY;
        for b in 0..k {
            if a == b {
                continue;
            }
            let m = distance(Distance::Euclidean, centroids.row(a), centroids.row(b));
            if m == 0.0 {
                return Err(Error::invalid(format!(
                    "clusters {a} and {b} share a centroid; DBI is undefined"
                )));
            }
            worst = worst.max((scatter[a] + scatter[b]) / m);
        }
        total += worst;
    }
    Ok(total / k as f64)
}

/// Ratio of the final-stage DBI (learned features) to the boot-stage DBI
/// (boot features); < 1 signals tighter clusters than the boot stage.
pub fn dbi_normalized(dbi_final: f64, dbi_boot: f64) -> Result<f64> {
    if !dbi_boot.is_finite() || dbi_boot <= 0.0 {
        return Err(Error::invalid(format!(
            "boot DBI must be positive, got {dbi_boot}"
        )));
    }
    Ok(dbi_final / dbi_boot)
}

/// Standard-deviation convention for τ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StdMode {
    /// Divisor n−1.
    #[default]
    Sample,
    /// Divisor n.
    Population,
}

/// Index difference rate τ = σ(eta)/E(eta): dispersion of one evaluation
/// index across feature variants.
pub fn tau(eta: &[f64], mode: StdMode) -> Result<f64> {
    if eta.len() < 2 {
        return Err(Error::invalid("tau needs at least 2 values"));
    }
    if let Some(bad) = eta.iter().find(|v| !v.is_finite()) {
        return Err(Error::invalid(format!("non-finite tau input {bad}")));
    }
    let n = eta.len() as f64;
    let mean = eta.iter().sum::<f64>() / n;
    if mean.abs() < 1e-12 {
        return Err(Error::invalid("tau undefined for zero-mean input"));
    }
    let ss: f64 = eta.iter().map(|v| (v - mean) * (v - mean)).sum();
    let var = match mode {
        StdMode::Sample => ss / (n - 1.0),
        StdMode::Population => ss / n,
    };
    Ok(var.sqrt() / mean)
}
