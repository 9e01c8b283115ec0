//! Synthetic Gaussian-blob datasets.
//!
//! Desk-scale stand-in for full image corpora: k classes in a
//! `dim_signal`-dimensional signal subspace padded with `dim_noise` pure
//! noise coordinates, emitted as 1×D "images" (H=1). Class means sit at the
//! vertices of a regular simplex with edge `separation` whenever the signal
//! space is large enough (k ≤ dim_signal), so every pair of classes is
//! equally hard; for larger k they are drawn at random and rescaled so the
//! minimum pairwise distance equals `separation` exactly. Either way the
//! geometry of the problem is a direct function of the parameters.
//!
//! Classes are mildly heteroscedastic: class c's signal jitter is
//! `noise_scale × SPREAD[c mod 3]` with SPREAD = [1.0, 1.3, 1.6], so no
//! distance threshold is exactly right for every class.
//!
//! On top of the class structure, every sample is displaced along one
//! shared direction of the signal subspace by `NUISANCE_GAIN × noise_scale`
//! of zero-mean Gaussian jitter. The displacement is label-independent — a
//! global nuisance factor, the vector analog of illumination or exposure in
//! real images — and its direction is a median of the mean constellation,
//! overlapping class-discriminative structure without collapsing any single
//! class pair (a direction orthogonal to every inter-class axis would leave
//! nearest-centroid assignments untouched and be invisible to clustering).
//! It flips nearest-centroid assignments for strongly displaced samples,
//! degrading any raw-distance clustering; samples with mild displacement
//! remain label-pure, so a classifier trained on the most cluster-cohesive
//! samples learns boundaries that cut across the nuisance axis and recovers
//! the samples the raw-space clustering misassigns.

use ndarray::Array2;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::data::rng::{SeededRng, StreamPurpose};
use crate::data::Dataset;
use crate::error::{Error, Result};

/// Per-class signal jitter multipliers, cycled by class index.
const SPREAD: [f64; 3] = [1.0, 1.3, 1.6];

/// Amplitude of the shared nuisance displacement in the signal subspace,
/// as a multiple of `noise_scale`.
const NUISANCE_GAIN: f64 = 6.0;

#[allow(clippy::too_many_arguments)]
pub fn gen_synth_blobs(
    k: usize,
    per_class: usize,
    dim_signal: usize,
    dim_noise: usize,
    separation: f64,
    noise_scale: f64,
    rng: &SeededRng,
) -> Result<Dataset> {
    if k == 0 || per_class == 0 || dim_signal == 0 {
        return Err(Error::invalid(
            "k, per_class and dim_signal must be positive",
        ));
    }
    if !separation.is_finite() || separation <= 0.0 {
        return Err(Error::invalid("separation must be > 0"));
    }
    if noise_scale < 0.0 {
        return Err(Error::invalid("noise_scale must be >= 0"));
    }

    let mut r = rng.substream(StreamPurpose::SynthData, 0);

    // Class means. When the signal space can hold a regular simplex the
    // means sit at its vertices — every pair exactly `separation` apart, so
    // the difficulty of each class boundary is identical and controlled by
    // the parameters alone. Otherwise (k > dim_signal) fall back to an
    // i.i.d. normal draw rescaled so the closest pair is `separation` apart.
    let mut means = Array2::<f64>::zeros((k, dim_signal));
    if k > 1 && k <= dim_signal {
        // Scaled standard-basis simplex, centered: ‖e_a − e_b‖ = √2.
        let edge = separation / std::f64::consts::SQRT_2;
        for c in 0..k {
            means[(c, c)] = edge;
        }
        let centroid = edge / k as f64;
        for c in 0..k {
            for j in 0..k {
                means[(c, j)] -= centroid;
            }
        }
    } else if k > 1 {
        for v in means.iter_mut() {
            *v = r.sample(StandardNormal);
        }
        let mut min_d2 = f64::INFINITY;
        for a in 0..k {
            for b in (a + 1)..k {
                let d2: f64 = (0..dim_signal)
                    .map(|j| (means[(a, j)] - means[(b, j)]).powi(2))
                    .sum();
                min_d2 = min_d2.min(d2);
            }
        }
        if min_d2 <= f64::EPSILON {
            return Err(Error::invariant("degenerate blob means: coincident draw"));
        }
        let scale = separation / min_d2.sqrt();
        means.mapv_inplace(|v| v * scale);
    }

    // Unit vector spanning the shared nuisance direction: a median of the
    // mean constellation — the direction from a random class mean to the
    // centroid of the others. A median is equidistant from the inter-class
    // axes it perturbs, so the nuisance degrades those boundaries without
    // collapsing any single pair (a direction aligned with one inter-class
    // axis would make that pair irrecoverable for any method). Falls back
    // to a random signal direction when there is a single class.
    let nuisance_dir: Vec<f64> = {
        let mut v = vec![0.0; dim_signal];
        if k > 1 {
            let c = r.gen_range(0..k);
            let sign = if r.gen_bool(0.5) { 1.0 } else { -1.0 };
            for (j, vj) in v.iter_mut().enumerate() {
                let others: f64 = (0..k)
                    .filter(|&o| o != c)
                    .map(|o| means[(o, j)])
                    .sum::<f64>()
                    / (k - 1) as f64;
                *vj = sign * (others - means[(c, j)]);
            }
        } else {
            for vj in v.iter_mut() {
                *vj = r.sample(StandardNormal);
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm <= f64::EPSILON {
            return Err(Error::invariant("degenerate nuisance direction draw"));
        }
        v.iter_mut().for_each(|x| *x /= norm);
        v
    };

    let n = k * per_class;
    let dim = dim_signal + dim_noise;
    let mut images = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    let mut names = Vec::with_capacity(n);
    for c in 0..k {
        let sigma = noise_scale * SPREAD[c % SPREAD.len()];
        for i in 0..per_class {
            let mut row = Vec::with_capacity(dim);
            let shared: f64 = r.sample(StandardNormal);
            let shift = NUISANCE_GAIN * noise_scale * shared;
            for (j, dir) in nuisance_dir.iter().enumerate() {
                let z: f64 = r.sample(StandardNormal);
                row.push(means[(c, j)] + sigma * z + shift * dir);
            }
            for _ in 0..dim_noise {
                let z: f64 = r.sample(StandardNormal);
                row.push(noise_scale * z);
            }
            images.push(Array2::from_shape_vec((1, dim), row).expect("len==dim"));
            labels.push(c);
            names.push(format!("blob-c{c}-{i:04}"));
        }
    }

    Dataset::new(images, Some(labels), names)
}
