//! Diagonal-covariance Gaussian mixtures fitted by EM.
//!
//! Responsibilities are computed in log space (log-sum-exp), the M-step
//! clamps every variance at the floor 1e-6 — the clamped update is the
//! exact maximizer of the EM surrogate under the constraint σ² ≥ floor, so
//! the log-likelihood trace stays nondecreasing — and components that lose
//! all responsibility keep their previous mean and variance. Initialization
//! comes from a k-means fit.

use ndarray::{Array1, Array2};

use crate::cluster::{distance, kmeans_fit, ClusterModel};
use crate::data::config::{ClusterParams, Clusterer, Distance};
use crate::data::SeededRng;
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;

pub const VARIANCE_FLOOR: f64 = 1e-6;
const LN_2PI: f64 = 1.837877066409345483560659472811;

#[derive(Debug, Clone)]
pub struct GmmParams {
    /// Mixing weights on the K-simplex.
    weights: Array1<f64>,
    /// K×D component means.
    means: Array2<f64>,
    /// K×D diagonal covariances, each ≥ VARIANCE_FLOOR.
    variances: Array2<f64>,
    /// Total log-likelihood after every E-step.
    log_likelihood_trace: Vec<f64>,
}

impl GmmParams {
    pub fn weights(&self) -> &Array1<f64> {
        &self.weights
    }

    pub fn means(&self) -> &Array2<f64> {
        &self.means
    }

    pub fn variances(&self) -> &Array2<f64> {
        &self.variances
    }

    pub fn log_likelihood_trace(&self) -> &[f64] {
        &self.log_likelihood_trace
    }

    /// Per-sample responsibilities (N×K) under these parameters.
    pub fn responsibilities(&self, f: &FeatureMatrix) -> Result<Array2<f64>> {
        if f.dim() != self.means.ncols() {
            return Err(Error::dim(format!(
                "feature dimension {} vs model dimension {}",
                f.dim(),
                self.means.ncols()
            )));
        }
        Ok(e_step(f, self).1)
    }
}

pub fn gmm_fit(
    f: &FeatureMatrix,
    k: usize,
    rng: &SeededRng,
    params: ClusterParams,
) -> Result<(ClusterModel, GmmParams)> {
    if k > f.n() {
        return Err(Error::invalid(format!(
            "k = {k} exceeds sample count {}",
            f.n()
        )));
    }
    let n = f.n();

    // Initialize from k-means: means = centroids, variances = within-
    // cluster per-dimension spread, weights = cluster shares.
    let km = kmeans_fit(f, k, Distance::Euclidean, rng, params)?;
    let mut gmm = init_from_kmeans(f, &km);

    let mut prev_ll = f64::NEG_INFINITY;
    for _ in 0..params.max_iter {
        let (ll, resp) = e_step(f, &gmm);
        gmm.log_likelihood_trace.push(ll);
        m_step(f, &resp, &mut gmm);
        if (ll - prev_ll).abs() < params.tol && prev_ll.is_finite() {
            break;
        }
        prev_ll = ll;
    }
    // Final E-step so labels reflect the last parameter update.
    let (ll, resp) = e_step(f, &gmm);
    gmm.log_likelihood_trace.push(ll);

    // Hard assignment: argmax responsibility, ties to the lower index;
    // distances are Euclidean to the assigned mean so downstream cohesion
    // treats both clusterers uniformly.
    let mut labels = Vec::with_capacity(n);
    let mut dists = Vec::with_capacity(n);
    for i in 0..n {
        let mut best = 0usize;
        let mut best_r = f64::NEG_INFINITY;
        for c in 0..k {
            if resp[(i, c)] > best_r {
                best_r = resp[(i, c)];
                best = c;
            }
        }
        labels.push(best);
        dists.push(distance(Distance::Euclidean, f.row(i), gmm.means.row(best)));
    }
    let model = ClusterModel::new(gmm.means.clone(), labels, dists, Clusterer::Gmm)?;
    Ok((model, gmm))
}

fn init_from_kmeans(f: &FeatureMatrix, km: &ClusterModel) -> GmmParams {
    let k = km.k();
    let d = f.dim();
    let n = f.n();
    let mut counts = vec![0usize; k];
    for &l in km.labels() {
        counts[l] += 1;
    }
    let mut variances = Array2::from_elem((k, d), 0.0);
    for (i, &l) in km.labels().iter().enumerate() {
        for j in 0..d {
            let diff = f.row(i)[j] - km.centroids()[(l, j)];
            variances[(l, j)] += diff * diff;
        }
    }
    for c in 0..k {
        for j in 0..d {
            variances[(c, j)] = if counts[c] > 0 {
                (variances[(c, j)] / counts[c] as f64).max(VARIANCE_FLOOR)
            } else {
                1.0
            };
        }
    }
    let weights = Array1::from_iter(counts.iter().map(|&c| (c as f64 / n as f64).max(1e-12)));
    let wsum = weights.sum();
    GmmParams {
        weights: weights / wsum,
        means: km.centroids().clone(),
        variances,
        log_likelihood_trace: Vec::new(),
    }
}

/// Returns (total log-likelihood, N×K responsibilities).
fn e_step(f: &FeatureMatrix, gmm: &GmmParams) -> (f64, Array2<f64>) {
    let n = f.n();
    let d = f.dim();
    let k = gmm.weights.len();
    // Per-component constants: log w_c − ½Σ_j log(2π σ²_cj).
    let base: Vec<f64> = (0..k)
        .map(|c| {
            gmm.weights[c].ln()
                - 0.5
                    * (0..d)
                        .map(|j| LN_2PI + gmm.variances[(c, j)].ln())
                        .sum::<f64>()
        })
        .collect();
    let mut resp = Array2::zeros((n, k));
    let mut total_ll = 0.0;
    let mut log_p = vec![0.0f64; k];
    for i in 0..n {
        let row = f.row(i);
        for c in 0..k {
            let mut quad = 0.0;
            for j in 0..d {
                let diff = row[j] - gmm.means[(c, j)];
                quad += diff * diff / gmm.variances[(c, j)];
            }
            log_p[c] = base[c] - 0.5 * quad;
        }
        let max = log_p.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let sum_exp: f64 = log_p.iter().map(|&v| (v - max).exp()).sum();
        let ll_i = max + sum_exp.ln();
        total_ll += ll_i;
        for c in 0..k {
            resp[(i, c)] = (log_p[c] - ll_i).exp();
        }
    }
    (total_ll, resp)
}

fn m_step(f: &FeatureMatrix, resp: &Array2<f64>, gmm: &mut GmmParams) {
    let n = f.n();
    let d = f.dim();
    let k = gmm.weights.len();
    for c in 0..k {
        let nk: f64 = (0..n).map(|i| resp[(i, c)]).sum();
        if nk < 1e-12 {
            // Dead component: keep previous mean/variance, weight ≈ 0.
            gmm.weights[c] = nk / n as f64;
            continue;
        }
        gmm.weights[c] = nk / n as f64;
        for j in 0..d {
            let mu: f64 = (0..n).map(|i| resp[(i, c)] * f.row(i)[j]).sum::<f64>() / nk;
            gmm.means[(c, j)] = mu;
        }
        for j in 0..d {
            let var: f64 = (0..n)
                .map(|i| {
                    let diff = f.row(i)[j] - gmm.means[(c, j)];
                    resp[(i, c)] * diff * diff
                })
                .sum::<f64>()
                / nk;
            gmm.variances[(c, j)] = var.max(VARIANCE_FLOOR);
        }
    }
    // Σ_c nk = N up to rounding; renormalize to keep the simplex exact.
    let wsum = gmm.weights.sum();
    gmm.weights.mapv_inplace(|w| w / wsum);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::synth::gen_synth_blobs;
    use crate::features::extract_raw;

    fn params() -> ClusterParams {
        ClusterParams::default()
    }

    #[test]
    fn separated_blobs_recovered() {
        // Separation 50, jitter ≤ 2: component means land on the empirical
        // blob means and responsibilities are essentially hard.
        let master = SeededRng::new(42);
        let ds = gen_synth_blobs(2, 100, 2, 0, 50.0, 1.0, &master).unwrap();
        let f = extract_raw(&ds);
        let (model, gmm) = gmm_fit(&f, 2, &master, params()).unwrap();
        let truth = ds.true_labels().unwrap();

        // Empirical class means.
        let mut emp = Array2::<f64>::zeros((2, 2));
        let mut counts = [0.0f64; 2];
        for (i, &c) in truth.iter().enumerate() {
            counts[c] += 1.0;
            for j in 0..2 {
                emp[(c, j)] += f.row(i)[j];
            }
        }
        for c in 0..2 {
            for j in 0..2 {
                emp[(c, j)] /= counts[c];
            }
        }
        // Match components to classes via the first sample's assignment.
        let comp_of_class0 = model.labels()[0];
        let comp_of_class1 = 1 - comp_of_class0;
        for (class, comp) in [(0, comp_of_class0), (1, comp_of_class1)] {
            for j in 0..2 {
                let diff = (gmm.means()[(comp, j)] - emp[(class, j)]).abs();
                assert!(diff < 0.1, "component {comp} dim {j}: off by {diff}");
            }
        }
        // Responsibilities ≥ 0.99 on own blob.
        let resp = gmm.responsibilities(&f).unwrap();
        for (i, &c) in truth.iter().enumerate() {
            let comp = if c == 0 {
                comp_of_class0
            } else {
                comp_of_class1
            };
            assert!(resp[(i, comp)] >= 0.99, "sample {i}: {}", resp[(i, comp)]);
        }
    }

    #[test]
    fn log_likelihood_trace_nondecreasing() {
        for seed in 0..6u64 {
            let master = SeededRng::new(300 + seed);
            let ds = gen_synth_blobs(3, 15, 3, 2, 2.0, 1.0, &master).unwrap();
            let f = extract_raw(&ds);
            let (_, gmm) = gmm_fit(&f, 3, &master, params()).unwrap();
            let trace = gmm.log_likelihood_trace();
            assert!(trace.len() >= 2);
            for w in trace.windows(2) {
                assert!(
                    w[1] >= w[0] - 1e-9,
                    "seed {seed}: log-likelihood fell {} -> {}",
                    w[0],
                    w[1]
                );
            }
        }
    }

    #[test]
    fn variance_floor_holds_under_collapse() {
        // Three identical points form one component: its ML variance is 0,
        // clamped to the floor.
        let data = ndarray::array![
            [0.0, 0.0],
            [0.0, 0.0],
            [0.0, 0.0],
            [10.0, 10.0],
            [10.2, 9.8],
            [9.8, 10.2]
        ];
        let f = FeatureMatrix::new("t", data).unwrap();
        let (_, gmm) = gmm_fit(&f, 2, &SeededRng::new(1), params()).unwrap();
        for v in gmm.variances().iter() {
            assert!(*v >= VARIANCE_FLOOR);
        }
    }

    #[test]
    fn weights_on_simplex() {
        let master = SeededRng::new(8);
        let ds = gen_synth_blobs(3, 20, 4, 0, 3.0, 1.0, &master).unwrap();
        let f = extract_raw(&ds);
        let (_, gmm) = gmm_fit(&f, 3, &master, params()).unwrap();
        assert!((gmm.weights().sum() - 1.0).abs() < 1e-12);
        assert!(gmm.weights().iter().all(|&w| w >= 0.0));
    }

    #[test]
    fn labels_and_distances_consistent() {
        let master = SeededRng::new(15);
        let ds = gen_synth_blobs(2, 30, 3, 0, 10.0, 1.0, &master).unwrap();
        let f = extract_raw(&ds);
        let (model, _) = gmm_fit(&f, 2, &master, params()).unwrap();
        // Distances are Euclidean to the assigned component mean.
        for i in 0..f.n() {
            let expect = distance(
                Distance::Euclidean,
                f.row(i),
                model.centroids().row(model.labels()[i]),
            );
            assert!((model.distances()[i] - expect).abs() < 1e-12);
        }
        assert!((model.inertia() - model.distances().iter().sum::<f64>()).abs() < 1e-9);
    }

    #[test]
    fn k_exceeding_n_rejected() {
        let f = FeatureMatrix::new("t", ndarray::array![[0.0], [1.0]]).unwrap();
        assert!(gmm_fit(&f, 3, &SeededRng::new(0), params()).is_err());
    }
}
