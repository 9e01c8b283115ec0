//! The trainable feature function: a one-hidden-layer rectified classifier
//! trained with mini-batch SGD on softmax cross-entropy.
//!
//! Besides prediction it exposes its hidden-layer activations as learned
//! features and warm-starts from a previous model — the desk-scale analog
//! of fine-tuning a pre-trained network. Inputs are standardized per
//! dimension with statistics computed from the first training set and
//! stored in the model, so prediction and feature extraction are
//! self-contained; a warm start keeps the stored statistics (the
//! standardization is part of the inherited parameters).

use ndarray::{Array1, Array2, Axis};
use rand::distributions::Uniform;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::config::LearnerParams;
use crate::data::{SeededRng, StreamPurpose};
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;

/// Floor for per-dimension standard deviations (constant inputs).
const STD_FLOOR: f64 = 1e-6;
const CHECKPOINT_VERSION: u32 = 1;

/// Pseudo-labeled training data.
#[derive(Debug, Clone)]
pub struct TrainSet {
    features: Array2<f64>,
    labels: Vec<usize>,
    weights: Vec<f64>,
}

impl TrainSet {
    /// Unit sample weights.
    pub fn new(features: Array2<f64>, labels: Vec<usize>) -> Result<Self> {
        let weights = vec![1.0; labels.len()];
        TrainSet::with_weights(features, labels, weights)
    }

    pub fn with_weights(
        features: Array2<f64>,
        labels: Vec<usize>,
        weights: Vec<f64>,
    ) -> Result<Self> {
        if features.nrows() == 0 {
            return Err(Error::invalid("training set is empty"));
        }
        if labels.len() != features.nrows() || weights.len() != features.nrows() {
            return Err(Error::dim(format!(
                "{} rows vs {} labels vs {} weights",
                features.nrows(),
                labels.len(),
                weights.len()
            )));
        }
        if weights.iter().any(|w| !w.is_finite() || *w <= 0.0) {
            return Err(Error::invalid("sample weights must be positive finite"));
        }
        Ok(TrainSet {
            features,
            labels,
            weights,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn features(&self) -> &Array2<f64> {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }
}

/// Parameter gradients, shaped like the model parameters.
#[derive(Debug, Clone)]
pub struct LearnerGradients {
    pub w1: Array2<f64>,
    pub b1: Array1<f64>,
    pub w2: Array2<f64>,
    pub b2: Array1<f64>,
}

#[derive(Debug, Clone)]
pub struct LearnerModel {
    /// h×Din input→hidden weights.
    w1: Array2<f64>,
    b1: Array1<f64>,
    /// K×h hidden→output weights.
    w2: Array2<f64>,
    b2: Array1<f64>,
    /// Per-dimension standardization statistics.
    mean: Array1<f64>,
    std: Array1<f64>,
    /// Full-training-set loss before training and after every epoch.
    loss_trace: Vec<f64>,
}

impl LearnerModel {
    pub fn input_dim(&self) -> usize {
        self.w1.ncols()
    }

    pub fn hidden_dim(&self) -> usize {
        self.w1.nrows()
    }

    pub fn n_classes(&self) -> usize {
        self.w2.nrows()
    }

    pub fn loss_trace(&self) -> &[f64] {
        &self.loss_trace
    }

    fn standardize(&self, x: &Array2<f64>) -> Array2<f64> {
        let centered = x - &self.mean;
        centered / &self.std
    }

    /// Forward pass: (hidden activations, logits).
    fn forward(&self, x_std: &Array2<f64>) -> (Array2<f64>, Array2<f64>) {
        let a1 = (x_std.dot(&self.w1.t()) + &self.b1).mapv(|z| z.max(0.0));
        let logits = a1.dot(&self.w2.t()) + &self.b2;
        (a1, logits)
    }

    /// Weighted mean softmax cross-entropy on `ts`.
    pub fn loss(&self, ts: &TrainSet) -> Result<f64> {
        self.check_input(ts)?;
        let x = self.standardize(&ts.features);
        let (_, logits) = self.forward(&x);
        let mut total = 0.0;
        let mut wsum = 0.0;
        for (i, (&y, &w)) in ts.labels.iter().zip(&ts.weights).enumerate() {
            total += w * cross_entropy(logits.row(i), y);
            wsum += w;
        }
        Ok(total / wsum)
    }

    /// Loss together with analytic gradients over all of `ts`.
    pub fn loss_and_grad(&self, ts: &TrainSet) -> Result<(f64, LearnerGradients)> {
        self.check_input(ts)?;
        let x = self.standardize(&ts.features);
        let (a1, logits) = self.forward(&x);
        let n = ts.len();
        let wsum: f64 = ts.weights.iter().sum();

        let mut dlogits = Array2::zeros((n, self.n_classes()));
        let mut total = 0.0;
        for i in 0..n {
            let y = ts.labels[i];
            let w = ts.weights[i] / wsum;
            total += ts.weights[i] * cross_entropy(logits.row(i), y);
            let p = softmax(logits.row(i));
            for c in 0..self.n_classes() {
                dlogits[(i, c)] = w * (p[c] - if c == y { 1.0 } else { 0.0 });
            }
        }

        let dw2 = dlogits.t().dot(&a1);
        let db2 = dlogits.sum_axis(Axis(0));
        let da1 = dlogits.dot(&self.w2);
        // ReLU subgradient: 0 at the kink (a1 = 0 ⇔ z1 ≤ 0).
        let dz1 = ndarray::Zip::from(&da1)
            .and(&a1)
            .map_collect(|&g, &a| if a > 0.0 { g } else { 0.0 });
        let dw1 = dz1.t().dot(&x);
        let db1 = dz1.sum_axis(Axis(0));

        Ok((
            total / wsum,
            LearnerGradients {
                w1: dw1,
                b1: db1,
                w2: dw2,
                b2: db2,
            },
        ))
    }

    fn check_input(&self, ts: &TrainSet) -> Result<()> {
        if ts.features.ncols() != self.input_dim() {
            return Err(Error::dim(format!(
                "model expects input dimension {}, got {}",
                self.input_dim(),
                ts.features.ncols()
            )));
        }
        if let Some(&bad) = ts.labels.iter().find(|&&y| y >= self.n_classes()) {
            return Err(Error::invalid(format!(
                "label {bad} outside 0..{}",
                self.n_classes()
            )));
        }
        Ok(())
    }

    /// All parameters flattened (w1, b1, w2, b2 order) — finite-difference
    /// harness support.
    pub fn params_flat(&self) -> Vec<f64> {
        self.w1
            .iter()
            .chain(self.b1.iter())
            .chain(self.w2.iter())
            .chain(self.b2.iter())
            .cloned()
            .collect()
    }

    pub fn set_params_flat(&mut self, flat: &[f64]) -> Result<()> {
        let want = self.w1.len() + self.b1.len() + self.w2.len() + self.b2.len();
        if flat.len() != want {
            return Err(Error::dim(format!(
                "expected {want} parameters, got {}",
                flat.len()
            )));
        }
        let mut it = flat.iter();
        for v in self
            .w1
            .iter_mut()
            .chain(self.b1.iter_mut())
            .chain(self.w2.iter_mut())
            .chain(self.b2.iter_mut())
        {
            *v = *it.next().expect("length checked");
        }
        Ok(())
    }

    fn params_finite(&self) -> bool {
        self.w1.iter().all(|v| v.is_finite())
            && self.b1.iter().all(|v| v.is_finite())
            && self.w2.iter().all(|v| v.is_finite())
            && self.b2.iter().all(|v| v.is_finite())
    }

    fn apply_gradients(&mut self, g: &LearnerGradients, lr: f64) {
        self.w1.scaled_add(-lr, &g.w1);
        self.b1.scaled_add(-lr, &g.b1);
        self.w2.scaled_add(-lr, &g.w2);
        self.b2.scaled_add(-lr, &g.b2);
    }

    /// Persists dims, standardization statistics and parameters as
    /// versioned JSON. Decimal serialization round-trips every f64 exactly.
    pub fn save_checkpoint(&self, path: &std::path::Path) -> Result<()> {
        let ck = Checkpoint {
            version: CHECKPOINT_VERSION,
            input_dim: self.input_dim(),
            hidden: self.hidden_dim(),
            k: self.n_classes(),
            mean: self.mean.to_vec(),
            std: self.std.to_vec(),
            w1: self.w1.iter().cloned().collect(),
            b1: self.b1.to_vec(),
            w2: self.w2.iter().cloned().collect(),
            b2: self.b2.to_vec(),
        };
        std::fs::write(path, serde_json::to_string(&ck)?)?;
        Ok(())
    }

    pub fn load_checkpoint(path: &std::path::Path) -> Result<LearnerModel> {
        let ck: Checkpoint = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        if ck.version != CHECKPOINT_VERSION {
            return Err(Error::format(format!(
                "unsupported checkpoint version {} (expected {CHECKPOINT_VERSION})",
                ck.version
            )));
        }
        if ck.mean.len() != ck.input_dim
            || ck.std.len() != ck.input_dim
            || ck.w1.len() != ck.hidden * ck.input_dim
            || ck.b1.len() != ck.hidden
            || ck.w2.len() != ck.k * ck.hidden
            || ck.b2.len() != ck.k
        {
            return Err(Error::format("checkpoint shape fields are inconsistent"));
        }
        Ok(LearnerModel {
            w1: Array2::from_shape_vec((ck.hidden, ck.input_dim), ck.w1).expect("checked"),
            b1: Array1::from_vec(ck.b1),
            w2: Array2::from_shape_vec((ck.k, ck.hidden), ck.w2).expect("checked"),
            b2: Array1::from_vec(ck.b2),
            mean: Array1::from_vec(ck.mean),
            std: Array1::from_vec(ck.std),
            loss_trace: Vec::new(),
        })
    }
}

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    version: u32,
    input_dim: usize,
    hidden: usize,
    k: usize,
    mean: Vec<f64>,
    std: Vec<f64>,
    w1: Vec<f64>,
    b1: Vec<f64>,
    w2: Vec<f64>,
    b2: Vec<f64>,
}

fn softmax(logits: ndarray::ArrayView1<'_, f64>) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

fn cross_entropy(logits: ndarray::ArrayView1<'_, f64>, y: usize) -> f64 {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|&z| (z - max).exp()).sum::<f64>().ln();
    lse - logits[y]
}

/// Trains a classifier on `ts` with `k` output classes. With `init`, all
/// parameters and standardization statistics are inherited (warm start);
/// `epochs = 0` then returns them bit-exactly. Otherwise weights start at
/// seeded small-magnitude uniform values and the statistics come from `ts`.
pub fn train(
    ts: &TrainSet,
    k: usize,
    init: Option<&LearnerModel>,
    hyper: LearnerParams,
    rng: &SeededRng,
) -> Result<LearnerModel> {
    if k < 2 {
        return Err(Error::invalid(format!("k must be >= 2, got {k}")));
    }
    if ts.is_empty() {
        return Err(Error::invalid("training set is empty"));
    }
    let din = ts.features.ncols();

    let mut model = match init {
        Some(m) => {
            if m.input_dim() != din || m.n_classes() != k {
                return Err(Error::dim(format!(
                    "warm-start model is {}→{} classes, need {din}→{k}",
                    m.input_dim(),
                    m.n_classes()
                )));
            }
            let mut m = m.clone();
            m.loss_trace = Vec::new();
            m
        }
        None => {
            let (mean, std) = standardization_stats(&ts.features);
            let mut wr = rng.substream(StreamPurpose::InitWeights, 0);
            let a1 = 1.0 / (din as f64).sqrt();
            let a2 = 1.0 / (hyper.hidden as f64).sqrt();
            let u1 = Uniform::new_inclusive(-a1, a1);
            let u2 = Uniform::new_inclusive(-a2, a2);
            LearnerModel {
                w1: Array2::from_shape_fn((hyper.hidden, din), |_| wr.sample(u1)),
                b1: Array1::zeros(hyper.hidden),
                w2: Array2::from_shape_fn((k, hyper.hidden), |_| wr.sample(u2)),
                b2: Array1::zeros(k),
                mean,
                std,
                loss_trace: Vec::new(),
            }
        }
    };
    model.check_input(ts)?;
    model.loss_trace.push(model.loss(ts)?);

    let mut shuffle_rng = rng.substream(StreamPurpose::Shuffling, 0);
    let mut order: Vec<usize> = (0..ts.len()).collect();
    for epoch in 0..hyper.epochs {
        order.shuffle(&mut shuffle_rng);
        for chunk in order.chunks(hyper.batch_size) {
            let batch = subset(ts, chunk);
            let (_, grads) = model.loss_and_grad(&batch)?;
            model.apply_gradients(&grads, hyper.learning_rate);
        }
        if !model.params_finite() {
            return Err(Error::Train(format!(
                "non-finite parameters after epoch {epoch}; lower the learning rate"
            )));
        }
        let l = model.loss(ts)?;
        model.loss_trace.push(l);
    }
    Ok(model)
}

fn standardization_stats(x: &Array2<f64>) -> (Array1<f64>, Array1<f64>) {
    let n = x.nrows() as f64;
    let mean = x.mean_axis(Axis(0)).expect("nonempty");
    let var = x
        .rows()
        .into_iter()
        .fold(Array1::<f64>::zeros(x.ncols()), |acc, r| {
            acc + (&r - &mean).mapv(|d| d * d)
        })
        / n;
    let std = var.mapv(|v| v.sqrt().max(STD_FLOOR));
    (mean, std)
}

fn subset(ts: &TrainSet, idx: &[usize]) -> TrainSet {
    let mut features = Array2::zeros((idx.len(), ts.features.ncols()));
    let mut labels = Vec::with_capacity(idx.len());
    let mut weights = Vec::with_capacity(idx.len());
    for (r, &i) in idx.iter().enumerate() {
        features.row_mut(r).assign(&ts.features.row(i));
        labels.push(ts.labels[i]);
        weights.push(ts.weights[i]);
    }
    TrainSet {
        features,
        labels,
        weights,
    }
}

/// Hidden-layer post-activation features, one row per input row. D = h.
pub fn features(model: &LearnerModel, f_in: &FeatureMatrix) -> Result<FeatureMatrix> {
    if f_in.dim() != model.input_dim() {
        return Err(Error::dim(format!(
            "model expects input dimension {}, got {}",
            model.input_dim(),
            f_in.dim()
        )));
    }
    let x = model.standardize(f_in.data());
    let (a1, _) = model.forward(&x);
    FeatureMatrix::new("learned", a1)
}

/// Argmax-of-logits labels; ties to the lower class index.
pub fn predict(model: &LearnerModel, f_in: &FeatureMatrix) -> Result<Vec<usize>> {
    if f_in.dim() != model.input_dim() {
        return Err(Error::dim(format!(
            "model expects input dimension {}, got {}",
            model.input_dim(),
            f_in.dim()
        )));
    }
    let x = model.standardize(f_in.data());
    let (_, logits) = model.forward(&x);
    Ok(logits
        .rows()
        .into_iter()
        .map(|row| {
            let mut best = 0usize;
            let mut best_v = f64::NEG_INFINITY;
            for (c, &v) in row.iter().enumerate() {
                if v > best_v {
                    best_v = v;
                    best = c;
                }
            }
            best
        })
        .collect())
}
