//! Base clustering: distance models, cluster-model bookkeeping, k-means,
//! and diagonal-covariance Gaussian mixtures.

pub mod gmm;
pub mod kmeans;

pub use gmm::{gmm_fit, GmmParams};
pub use kmeans::kmeans_fit;

use ndarray::{Array2, ArrayView1};

use crate::data::config::{Clusterer, Distance};
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;

/// Distance d(a, b) under the configured measurement model.
pub fn distance(metric: Distance, a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> f64 {
    match metric {
        Distance::Euclidean => a
            .iter()
            .zip(b.iter())
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt(),
        Distance::Cityblock => a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()).sum(),
        Distance::Chessboard => a
            .iter()
            .zip(b.iter())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max),
    }
}

/// Centroids M (row per cluster), assignments, and per-sample distances to
/// the assigned centroid.
#[derive(Debug, Clone)]
pub struct ClusterModel {
    centroids: Array2<f64>,
    labels: Vec<usize>,
    distances: Vec<f64>,
    inertia: f64,
    method: Clusterer,
}

impl ClusterModel {
    /// Validating constructor: labels in range, shapes consistent, K ≥ 2.
    /// Inertia is derived as the sum of the distances.
    pub fn new(
        centroids: Array2<f64>,
        labels: Vec<usize>,
        distances: Vec<f64>,
        method: Clusterer,
    ) -> Result<Self> {
        let k = centroids.nrows();
        if k < 2 {
            return Err(Error::invalid(format!(
                "cluster count must be >= 2, got {k}"
            )));
        }
        if labels.len() != distances.len() {
            return Err(Error::dim(format!(
                "{} labels vs {} distances",
                labels.len(),
                distances.len()
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= k) {
            return Err(Error::invariant(format!("label {bad} out of range 0..{k}")));
        }
        let inertia = distances.iter().sum();
        Ok(ClusterModel {
            centroids,
            labels,
            distances,
            inertia,
            method,
        })
    }

    /// Builds a model from given centroids and an externally fixed label
    /// vector (e.g. pseudo-labels); distances are computed to the assigned
    /// centroid under `metric`.
    pub fn from_labels(
        f: &FeatureMatrix,
        centroids: Array2<f64>,
        labels: Vec<usize>,
        metric: Distance,
        method: Clusterer,
    ) -> Result<Self> {
        if centroids.ncols() != f.dim() {
            return Err(Error::dim(format!(
                "centroid dimension {} vs feature dimension {}",
                centroids.ncols(),
                f.dim()
            )));
        }
        if labels.len() != f.n() {
            return Err(Error::dim(format!(
                "{} labels for {} samples",
                labels.len(),
                f.n()
            )));
        }
        let distances = labels
            .iter()
            .enumerate()
            .map(|(i, &l)| {
                if l >= centroids.nrows() {
                    Err(Error::invariant(format!("label {l} out of range")))
                } else {
                    Ok(distance(metric, f.row(i), centroids.row(l)))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        ClusterModel::new(centroids, labels, distances, method)
    }

    pub fn k(&self) -> usize {
        self.centroids.nrows()
    }

    pub fn dim(&self) -> usize {
        self.centroids.ncols()
    }

    pub fn centroids(&self) -> &Array2<f64> {
        &self.centroids
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn distances(&self) -> &[f64] {
        &self.distances
    }

    pub fn inertia(&self) -> f64 {
        self.inertia
    }

    pub fn method(&self) -> Clusterer {
        self.method
    }
}

/// Nearest-centroid labels and distances under `metric`; ties broken by
/// lower cluster index.
pub fn assign(
    f: &FeatureMatrix,
    model: &ClusterModel,
    metric: Distance,
) -> Result<(Vec<usize>, Vec<f64>)> {
    if f.dim() != model.dim() {
        return Err(Error::dim(format!(
            "feature dimension {} vs model dimension {}",
            f.dim(),
            model.dim()
        )));
    }
    Ok(assign_to_centroids(f, model.centroids(), metric))
}

/// Assignment against a raw centroid matrix (K×D).
pub(crate) fn assign_to_centroids(
    f: &FeatureMatrix,
    centroids: &Array2<f64>,
    metric: Distance,
) -> (Vec<usize>, Vec<f64>) {
    let mut labels = Vec::with_capacity(f.n());
    let mut dists = Vec::with_capacity(f.n());
    for i in 0..f.n() {
        let row = f.row(i);
        let mut best = 0usize;
        let mut best_d = f64::INFINITY;
        for (c, centroid) in centroids.rows().into_iter().enumerate() {
            let d = distance(metric, row, centroid);
            if d < best_d {
                best_d = d;
                best = c;
            }
        }
        labels.push(best);
        dists.push(best_d);
    }
    (labels, dists)
}
