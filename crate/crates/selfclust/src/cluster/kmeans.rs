//! Lloyd's k-means with k-means++ seeding and restarts.
//!
//! The minimized objective depends on the metric: Σd² for Euclidean (mean
//! update), Σd for city-block (coordinate-median update — the per-cluster
//! L1 minimizer). Both pairs make the post-assignment objective trace
//! provably nonincreasing, including across empty-cluster reseeds (a reseed
//! only adds a better-or-equal option for every sample). Chessboard uses
//! the mean update as a documented heuristic — the L∞ sum has no
//! closed-form minimizer — so its trace is not asserted monotone;
//! termination is still guaranteed by the shift tolerance and max_iter.

use ndarray::Array2;
use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;

use crate::cluster::{assign_to_centroids, distance, ClusterModel};
use crate::data::config::{ClusterParams, Clusterer, Distance};
use crate::data::{SeededRng, StreamPurpose};
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;

pub fn kmeans_fit(
    f: &FeatureMatrix,
    k: usize,
    metric: Distance,
    rng: &SeededRng,
    params: ClusterParams,
) -> Result<ClusterModel> {
    Ok(kmeans_fit_traced(f, k, metric, rng, params)?.0)
}

/// As `kmeans_fit`, additionally returning the winning restart's objective
/// trace (one entry per assignment step).
pub fn kmeans_fit_traced(
    f: &FeatureMatrix,
    k: usize,
    metric: Distance,
    rng: &SeededRng,
    params: ClusterParams,
) -> Result<(ClusterModel, Vec<f64>)> {
    if k < 2 {
        return Err(Error::invalid(format!("k must be >= 2, got {k}")));
    }
    if k > f.n() {
        return Err(Error::invalid(format!(
            "k = {k} exceeds sample count {}",
            f.n()
        )));
    }
    if params.max_iter == 0 || params.restarts == 0 {
        return Err(Error::invalid("max_iter and restarts must be >= 1"));
    }

    let mut best: Option<(f64, Array2<f64>, Vec<f64>)> = None;
    for restart in 0..params.restarts {
        let mut r = rng.substream(StreamPurpose::InitCentroids, restart as u64);
        let mut centroids = seed_plus_plus(f, k, metric, &mut r);
        let mut trace = Vec::new();
        let mut prev_labels: Option<Vec<usize>> = None;
        for _ in 0..params.max_iter {
            let (labels, dists) = assign_to_centroids(f, &centroids, metric);
            trace.push(objective(metric, &dists));
            let converged_labels = prev_labels.as_deref() == Some(&labels);
            prev_labels = Some(labels.clone());
            let shift = update_centroids(f, &labels, &dists, &mut centroids, metric);
            if converged_labels || shift < params.tol {
                break;
            }
        }
        let obj = *trace.last().expect("max_iter >= 1");
        if best.as_ref().is_none_or(|(b, _, _)| obj < *b) {
            best = Some((obj, centroids, trace));
        }
    }

    let (_, centroids, trace) = best.expect("restarts >= 1");
    let (labels, dists) = assign_to_centroids(f, &centroids, metric);
    let model = ClusterModel::new(centroids, labels, dists, Clusterer::Kmeans)?;
    Ok((model, trace))
}

/// Lloyd objective for the metric: Σd² (euclidean) or Σd (others).
fn objective(metric: Distance, dists: &[f64]) -> f64 {
    match metric {
        Distance::Euclidean => dists.iter().map(|d| d * d).sum(),
        Distance::Cityblock | Distance::Chessboard => dists.iter().sum(),
    }
}

/// k-means++: first centroid uniform, then samples weighted by squared
/// distance (under `metric`) to the nearest chosen centroid.
fn seed_plus_plus(f: &FeatureMatrix, k: usize, metric: Distance, r: &mut impl Rng) -> Array2<f64> {
    let n = f.n();
    let mut centroids = Array2::zeros((k, f.dim()));
    let first = r.gen_range(0..n);
    centroids.row_mut(0).assign(&f.row(first));
    let mut nearest_sq: Vec<f64> = (0..n)
        .map(|i| distance(metric, f.row(i), centroids.row(0)).powi(2))
        .collect();
    for c in 1..k {
        let total: f64 = nearest_sq.iter().sum();
        let pick = if total > 0.0 {
            WeightedIndex::new(&nearest_sq)
                .expect("positive total weight")
                .sample(r)
        } else {
            // All points coincide with chosen centroids; any sample works.
            r.gen_range(0..n)
        };
        centroids.row_mut(c).assign(&f.row(pick));
        for (i, slot) in nearest_sq.iter_mut().enumerate() {
            let d = distance(metric, f.row(i), centroids.row(c)).powi(2);
            if d < *slot {
                *slot = d;
            }
        }
    }
    centroids
}

/// In-place centroid update; returns the largest centroid shift (under
/// `metric`). Empty clusters are reseeded to the currently farthest sample.
fn update_centroids(
    f: &FeatureMatrix,
    labels: &[usize],
    dists: &[f64],
    centroids: &mut Array2<f64>,
    metric: Distance,
) -> f64 {
    let k = centroids.nrows();
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (i, &l) in labels.iter().enumerate() {
        members[l].push(i);
    }
    let mut max_shift = 0.0f64;
    for (c, idx) in members.iter().enumerate() {
        let new = if idx.is_empty() {
            let farthest = dists
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.partial_cmp(b.1).expect("finite distances"))
                .map(|(i, _)| i)
                .expect("nonempty dataset");
            f.row(farthest).to_owned()
        } else {
            match metric {
                Distance::Euclidean | Distance::Chessboard => {
                    let mut mean = ndarray::Array1::zeros(f.dim());
                    for &i in idx {
                        mean += &f.row(i);
                    }
                    mean / idx.len() as f64
                }
                Distance::Cityblock => coordinate_median(f, idx),
            }
        };
        let shift = distance(metric, centroids.row(c), new.view());
        max_shift = max_shift.max(shift);
        centroids.row_mut(c).assign(&new);
    }
    max_shift
}

/// Per-coordinate median of the members (midpoint of the two central order
/// statistics for even counts) — the minimizer of the within-cluster L1 sum.
fn coordinate_median(f: &FeatureMatrix, idx: &[usize]) -> ndarray::Array1<f64> {
    let mut out = ndarray::Array1::zeros(f.dim());
    let mut column: Vec<f64> = Vec::with_capacity(idx.len());
    for j in 0..f.dim() {
        column.clear();
        column.extend(idx.iter().map(|&i| f.row(i)[j]));
        column.sort_by(|a, b| a.partial_cmp(b).expect("finite features"));
        let m = column.len();
        out[j] = if m % 2 == 1 {
            column[m / 2]
        } else {
            0.5 * (column[m / 2 - 1] + column[m / 2])
        };
    }
    out
}
