//! Principal component analysis as the linear post-mapping t(·).
//!
//! Covariance uses the sample (N−1) convention. The eigenproblem is solved
//! on the smaller side: the D×D covariance when D ≤ N, otherwise the N×N
//! Gram matrix with eigenvectors mapped back through the data (identical
//! nonzero spectrum). Deterministic sign convention: the largest-magnitude
//! coefficient of every component is positive. When the data rank is below
//! the requested dimension, the remaining components are filled with an
//! orthonormal complement (explained variance 0) so `d = D` always yields a
//! complete basis.

use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;

/// Numerical rank cutoff relative to the dominant eigenvalue.
const RANK_REL_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct PcaModel {
    mean: Array1<f64>,
    /// d×D, rows orthonormal.
    components: Array2<f64>,
    /// Nonincreasing, nonnegative.
    explained_variance: Array1<f64>,
}

impl PcaModel {
    pub fn mean(&self) -> &Array1<f64> {
        &self.mean
    }

    pub fn components(&self) -> &Array2<f64> {
        &self.components
    }

    pub fn explained_variance(&self) -> &Array1<f64> {
        &self.explained_variance
    }

    /// Input dimension D.
    pub fn input_dim(&self) -> usize {
        self.mean.len()
    }

    /// Output dimension d.
    pub fn output_dim(&self) -> usize {
        self.components.nrows()
    }
}

pub fn fit_pca(f: &FeatureMatrix, d: usize) -> Result<PcaModel> {
    let (n, dim) = (f.n(), f.dim());
    if n < 2 {
        return Err(Error::invalid("PCA needs at least 2 samples"));
    }
    if d < 1 || d > n.min(dim) {
        return Err(Error::invalid(format!(
            "PCA dimension {d} out of range 1..={}",
            n.min(dim)
        )));
    }

    let mean: Array1<f64> = f.data().mean_axis(ndarray::Axis(0)).expect("n >= 2");
    let centered = f.data() - &mean.view().insert_axis(ndarray::Axis(0));
    let a = DMatrix::from_row_iterator(n, dim, centered.iter().cloned());
    let denom = (n - 1) as f64;

    // Eigenpairs (value desc, unit column vectors in R^dim).
    let mut pairs: Vec<(f64, Vec<f64>)> = if dim <= n {
        let cov = a.transpose() * &a / denom;
        let eig = SymmetricEigen::new(cov);
        (0..dim)
            .map(|j| {
                (
                    eig.eigenvalues[j].max(0.0),
                    eig.eigenvectors.column(j).iter().cloned().collect(),
                )
            })
            .collect()
    } else {
        // Gram trick: AAᵀ w = λ w ⇒ Aᵀw/‖Aᵀw‖ is an eigenvector of AᵀA/denom.
        let gram = &a * a.transpose() / denom;
        let eig = SymmetricEigen::new(gram);
        let lambda_max = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
        (0..n)
            .filter(|&j| eig.eigenvalues[j] > RANK_REL_TOL * lambda_max.max(1e-300))
            .map(|j| {
                let v = a.transpose() * eig.eigenvectors.column(j);
                let norm = v.norm();
                (eig.eigenvalues[j], v.iter().map(|x| x / norm).collect())
            })
            .collect()
    };
    pairs.sort_by(|x, y| y.0.partial_cmp(&x.0).expect("finite eigenvalues"));

    // Keep numerically meaningful directions; fill the rest orthonormally.
    let lambda_max = pairs.first().map_or(0.0, |p| p.0);
    let mut components: Vec<Vec<f64>> = Vec::with_capacity(d);
    let mut variance = Vec::with_capacity(d);
    for (lam, v) in pairs.into_iter().take(d) {
        if lam > RANK_REL_TOL * lambda_max.max(1e-300) {
            components.push(v);
            variance.push(lam);
        }
    }
    fill_orthonormal_complement(&mut components, d, dim);
    variance.resize(d, 0.0);

    // Sign convention: largest-|coefficient| entry positive.
    for comp in &mut components {
        let lead = comp
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().partial_cmp(&b.1.abs()).expect("finite"))
            .map(|(i, _)| i)
            .expect("nonempty component");
        if comp[lead] < 0.0 {
            comp.iter_mut().for_each(|x| *x = -*x);
        }
    }

    let mut comp_mat = Array2::zeros((d, dim));
    for (r, comp) in components.iter().enumerate() {
        for (c, &v) in comp.iter().enumerate() {
            comp_mat[(r, c)] = v;
        }
    }
    Ok(PcaModel {
        mean,
        components: comp_mat,
        explained_variance: Array1::from_vec(variance),
    })
}

/// Extends `components` to `d` mutually orthonormal vectors in R^dim by
/// Gram–Schmidt against canonical basis vectors.
fn fill_orthonormal_complement(components: &mut Vec<Vec<f64>>, d: usize, dim: usize) {
    let mut basis_try = 0;
    while components.len() < d && basis_try < dim {
        let mut v = vec![0.0; dim];
        v[basis_try] = 1.0;
        basis_try += 1;
        for comp in components.iter() {
            let dot: f64 = v.iter().zip(comp).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(comp).for_each(|(a, b)| *a -= dot * b);
        }
        let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-8 {
            v.iter_mut().for_each(|x| *x /= norm);
            components.push(v);
        }
    }
    assert_eq!(components.len(), d, "complement fill must reach d");
}

/// Projects rows to the component space: (f_i − mean)·componentsᵀ, D → d.
pub fn apply_pca(model: &PcaModel, f: &FeatureMatrix) -> Result<FeatureMatrix> {
    if f.dim() != model.input_dim() {
        return Err(Error::dim(format!(
            "PCA model expects dimension {}, got {}",
            model.input_dim(),
            f.dim()
        )));
    }
    let centered = f.data() - &model.mean.view().insert_axis(ndarray::Axis(0));
    let projected = centered.dot(&model.components.t());
    FeatureMatrix::new(format!("{}_pca", f.feature_name()), projected)
}
