//! Run configuration: clustering, feature, learner, and loop parameters.
//!
//! The JSON config files consumed by the CLI mirror these field names
//! one-to-one. Every field except `k` has a default, so a minimal config is
//! `{"k": 3}`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Boot-stage handcrafted feature family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BootFeature {
    Raw,
    Hog,
    Gabor,
    RawPca,
}

impl BootFeature {
    pub const ALL: [BootFeature; 4] = [
        BootFeature::Raw,
        BootFeature::Hog,
        BootFeature::Gabor,
        BootFeature::RawPca,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BootFeature::Raw => "raw",
            BootFeature::Hog => "hog",
            BootFeature::Gabor => "gabor",
            BootFeature::RawPca => "raw_pca",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "raw" => Ok(BootFeature::Raw),
            "hog" => Ok(BootFeature::Hog),
            "gabor" => Ok(BootFeature::Gabor),
            "raw_pca" => Ok(BootFeature::RawPca),
            other => Err(Error::invalid(format!(
                "unknown boot feature '{other}' (expected raw|hog|gabor|raw_pca)"
            ))),
        }
    }
}

/// Base clustering method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Clusterer {
    Kmeans,
    Gmm,
}

/// Distance measurement model for assignment and cohesion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Distance {
    Euclidean,
    Cityblock,
    Chessboard,
}

/// Classifier hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LearnerParams {
    /// Hidden layer width h.
    pub hidden: usize,
    /// Training epochs per iteration.
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
}

impl Default for LearnerParams {
    fn default() -> Self {
        LearnerParams {
            hidden: 128,
            epochs: 60,
            learning_rate: 0.05,
            batch_size: 32,
        }
    }
}

/// HOG extractor parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct HogParams {
    pub cell: usize,
    pub block: usize,
    pub bins: usize,
}

impl Default for HogParams {
    fn default() -> Self {
        HogParams {
            cell: 7,
            block: 2,
            bins: 9,
        }
    }
}

/// Gabor bank parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct GaborParams {
    pub scales: usize,
    pub orients: usize,
}

impl Default for GaborParams {
    fn default() -> Self {
        GaborParams {
            scales: 4,
            orients: 6,
        }
    }
}

/// Clustering solver controls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClusterParams {
    /// k-means restarts; best inertia kept.
    pub restarts: usize,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for ClusterParams {
    fn default() -> Self {
        ClusterParams {
            restarts: 3,
            max_iter: 100,
            tol: 1e-6,
        }
    }
}

/// Full run configuration for the self-training loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    /// Cluster count K.
    pub k: usize,
    /// Initial belief ratio Δ ∈ (0, 1].
    pub delta: f64,
    /// Relaxation δ ∈ [0, 1] added to Δ each iteration (clamped at 1).
    pub small_delta: f64,
    /// Maximum iteration count; the loop runs while the iteration index k
    /// satisfies k ≤ k_max has NOT been exceeded (see pipeline docs).
    pub k_max: usize,
    pub boot_feature: BootFeature,
    pub clusterer: Clusterer,
    pub distance: Distance,
    pub learner: LearnerParams,
    /// When true, the classifier consumes boot feature vectors instead of
    /// raw flattened pixels (ablation switch).
    pub learner_on_boot_features: bool,
    pub hog: HogParams,
    pub gabor: GaborParams,
    /// PCA target dimension for `raw_pca`; None → min(50, N−1).
    pub pca_dims: Option<usize>,
    pub cluster_params: ClusterParams,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            k: 2,
            delta: 0.2,
            small_delta: 0.1,
            k_max: 8,
            boot_feature: BootFeature::Raw,
            clusterer: Clusterer::Kmeans,
            distance: Distance::Euclidean,
            learner: LearnerParams::default(),
            learner_on_boot_features: false,
            hog: HogParams::default(),
            gabor: GaborParams::default(),
            pca_dims: None,
            cluster_params: ClusterParams::default(),
            seed: 0,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k < 2 {
            return Err(Error::invalid(format!("k must be >= 2, got {}", self.k)));
        }
        if !(self.delta > 0.0 && self.delta <= 1.0) {
            return Err(Error::invalid(format!(
                "delta must lie in (0, 1], got {}",
                self.delta
            )));
        }
        if !(0.0..=1.0).contains(&self.small_delta) {
            return Err(Error::invalid(format!(
                "small_delta must lie in [0, 1], got {}",
                self.small_delta
            )));
        }
        if self.learner.hidden == 0 {
            return Err(Error::invalid("learner hidden width must be positive"));
        }
        if self.learner.batch_size == 0 {
            return Err(Error::invalid("learner batch size must be positive"));
        }
        if !self.learner.learning_rate.is_finite() || self.learner.learning_rate <= 0.0 {
            return Err(Error::invalid("learning rate must be positive"));
        }
        if self.hog.cell == 0 || self.hog.block == 0 || self.hog.bins == 0 {
            return Err(Error::invalid("hog parameters must be positive"));
        }
        if self.gabor.scales == 0 || self.gabor.orients == 0 {
            return Err(Error::invalid("gabor parameters must be positive"));
        }
        if self.cluster_params.restarts == 0 || self.cluster_params.max_iter == 0 {
            return Err(Error::invalid("cluster restarts/max_iter must be positive"));
        }
        if let Some(d) = self.pca_dims {
            if d == 0 {
                return Err(Error::invalid("pca_dims must be positive"));
            }
        }
        Ok(())
    }

    pub fn from_json_file(path: &std::path::Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)?;
        let cfg: RunConfig = serde_json::from_str(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }
}
