//! Iterative self-training image clustering.
//!
//! The engine starts from a handcrafted-feature clustering of the images
//! (raw pixels, oriented-gradient histograms, Gabor filter banks, or a PCA
//! projection, grouped by k-means or a Gaussian mixture). It then alternates
//! between selecting the most reliable samples of each cluster as pseudo-
//! labeled data, training a small neural network on them with a warm start,
//! re-predicting the remaining samples, and re-extracting features from the
//! network's hidden layer — growing the trusted set each round until every
//! sample is labeled or the iteration budget runs out.
//!
//! Module map:
//! - [`data`]: datasets, loaders (IDX, image directories), synthetic blobs,
//!   deterministic RNG streams, run configuration.
//! - [`features`]: raw / HOG / Gabor / PCA feature extraction.
//! - [`cluster`]: k-means and diagonal-covariance Gaussian mixtures.
//! - [`sampler`]: cohesion scores and reliability-ranked sample selection.
//! - [`learner`]: the MLP classifier with warm-start checkpoints.
//! - [`metrics`]: external/internal clustering quality measures.
//! - [`pipeline`]: the full training loop, reports, and parameter sweeps.

pub mod cluster;
pub mod data;
pub mod error;
pub mod features;
pub mod learner;
pub mod metrics;
pub mod pipeline;
pub mod sampler;

pub use error::{Error, Result};
