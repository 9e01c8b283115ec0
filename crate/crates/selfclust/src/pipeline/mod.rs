//! Orchestration of the full self-training loop.
//!
//! A run has two stages. The **boot stage** extracts a handcrafted feature
//! matrix and clusters it, producing initial pseudo-labels and centroids.
//! The **main stage** then iterates: score cohesion of the active (not yet
//! reliable) samples against the current centroids, freeze the
//! closest-to-centroid Δ-fraction per cluster into the reliable set, train
//! the classifier on the reliable set (warm-started from the previous
//! iteration), overwrite the active samples' pseudo-labels with the
//! classifier's predictions, and rebuild the scoring space from the
//! classifier's hidden activations — with centroids refreshed as
//! per-frozen-label means of the reliable samples in that new space.
//! Δ relaxes by δ each iteration (clamped at 1), so the reliable set grows
//! to swallow the whole pool.
//!
//! Loop-bound semantics: `k_max` is the maximum number of main-stage
//! iterations; `k_max = 0` disables the main stage entirely and the report
//! carries only the boot stage. Termination is `pool_exhausted` when no
//! active samples remain, else `kmax_reached`.
//!
//! The pipeline owns all mutable state and runs single-threaded; the
//! modules it delegates to are free to parallelize internally. Residual
//! active samples at `kmax_reached` keep their last predicted labels.

pub mod report;
pub mod sweep;

use std::time::Instant;

use ndarray::Array2;

use crate::cluster::{gmm_fit, kmeans_fit, ClusterModel};
use crate::data::config::{BootFeature, Clusterer, RunConfig};
use crate::data::{Dataset, SeededRng};
use crate::error::{Error, Result};
use crate::features::{apply_pca, extract_gabor, extract_hog, extract_raw, fit_pca, FeatureMatrix};
use crate::learner::{features as hidden_features, predict, train, LearnerModel, TrainSet};
use crate::metrics::{dbi, dbi_normalized, EvalReport};
use crate::sampler::{advance_delta, cohesion, select_ccn, ReliabilityState};

pub use report::{
    read_report, verify_report, write_report, IterationRecord, RunReport, Termination,
};
pub use sweep::{sweep, write_sweep, SweepCell, SweepReport, TauRow};

/// Extracts the configured boot-stage feature matrix.
pub fn boot_features(ds: &Dataset, cfg: &RunConfig) -> Result<FeatureMatrix> {
    match cfg.boot_feature {
        BootFeature::Raw => Ok(extract_raw(ds)),
        BootFeature::Hog => extract_hog(ds, cfg.hog.cell, cfg.hog.block, cfg.hog.bins),
        BootFeature::Gabor => extract_gabor(ds, cfg.gabor.scales, cfg.gabor.orients),
        BootFeature::RawPca => {
            let raw = extract_raw(ds);
            let d = cfg
                .pca_dims
                .unwrap_or_else(|| 50.min(ds.len().saturating_sub(1)))
                .min(raw.dim());
            let model = fit_pca(&raw, d)?;
            apply_pca(&model, &raw)
        }
    }
}

fn boot_cluster(f: &FeatureMatrix, cfg: &RunConfig, rng: &SeededRng) -> Result<ClusterModel> {
    match cfg.clusterer {
        Clusterer::Kmeans => kmeans_fit(f, cfg.k, cfg.distance, rng, cfg.cluster_params),
        Clusterer::Gmm => Ok(gmm_fit(f, cfg.k, rng, cfg.cluster_params)?.0),
    }
}

/// Per-label means of the reliable samples in the current scoring space.
/// A label with no reliable members yet falls back to the mean of the
/// active samples currently predicted into it, then to the global mean —
/// both fallbacks keep cohesion evaluable for every possible assignment.
fn refreshed_centroids(
    f: &FeatureMatrix,
    state: &ReliabilityState,
    labels: &[usize],
    k: usize,
) -> Array2<f64> {
    let dim = f.dim();
    let mut sums = Array2::<f64>::zeros((k, dim));
    let mut counts = vec![0usize; k];
    for (&i, &l) in state.frozen_labels() {
        let mut row = sums.row_mut(l);
        row += &f.row(i);
        counts[l] += 1;
    }
    let global_mean = f.data().mean_axis(ndarray::Axis(0)).expect("nonempty");
    for (c, &count) in counts.iter().enumerate() {
        if count > 0 {
            let mut row = sums.row_mut(c);
            row /= count as f64;
            continue;
        }
        let members: Vec<usize> = state
            .active_indices()
            .into_iter()
            .filter(|&i| labels[i] == c)
            .collect();
        if members.is_empty() {
            sums.row_mut(c).assign(&global_mean);
        } else {
            let mut row = sums.row_mut(c);
            for &i in &members {
                row += &f.row(i);
            }
            row /= members.len() as f64;
        }
    }
    sums
}

/// Evaluation row for the current labels: external indices when ground
/// truth exists, with DBI in the given feature space riding along.
fn evaluate(
    ds: &Dataset,
    f: &FeatureMatrix,
    labels: &[usize],
    dbi_boot: Option<f64>,
) -> Result<Option<EvalReport>> {
    let Some(truth) = ds.true_labels() else {
        return Ok(None);
    };
    let mut eval = EvalReport::external(truth, labels)?;
    eval.dbi = dbi(f, labels).ok();
    eval.dbi_normalized = match (eval.dbi, dbi_boot) {
        (Some(d), Some(b)) => dbi_normalized(d, b).ok(),
        _ => None,
    };
    Ok(eval.into())
}

/// Executes one full run and returns the report.
pub fn run(ds: &Dataset, cfg: &RunConfig) -> Result<RunReport> {
    cfg.validate()?;
    if cfg.k > ds.len() {
        return Err(Error::invalid(format!(
            "k = {} exceeds dataset size {}",
            cfg.k,
            ds.len()
        )));
    }
    let rng = SeededRng::new(cfg.seed);

    // Boot stage: handcrafted features, base clustering, initial labels.
    let f_boot = boot_features(ds, cfg)?;
    let boot_model = boot_cluster(&f_boot, cfg, &rng)?;
    let mut labels = boot_model.labels().to_vec();
    let dbi_boot = dbi(&f_boot, &labels).ok();
    let boot_eval = evaluate(ds, &f_boot, &labels, None)?;

    // The classifier input space is fixed for the whole run.
    let learner_input = if cfg.learner_on_boot_features {
        f_boot.clone()
    } else {
        extract_raw(ds)
    };

    let mut state = ReliabilityState::new(ds.len());
    let mut scoring_features = f_boot;
    let mut centroids = boot_model.centroids().clone();
    let mut prev_model: Option<LearnerModel> = None;
    let mut delta_eff = cfg.delta;
    let mut records = Vec::new();

    let mut k_iter = 0usize;
    while k_iter < cfg.k_max {
        let active = state.active_indices();
        if active.is_empty() {
            break;
        }
        let started = Instant::now();

        // Cohesion of the active pool against the current centroids, then
        // freeze each cluster's most cohesive Δ-fraction.
        let active_f = scoring_features.select_rows(&active);
        let active_labels: Vec<usize> = active.iter().map(|&i| labels[i]).collect();
        let score_model = ClusterModel::from_labels(
            &active_f,
            centroids.clone(),
            active_labels,
            cfg.distance,
            cfg.clusterer,
        )?;
        let scores = cohesion(&active_f, &score_model, cfg.distance)?;
        let picked = select_ccn(&scores, delta_eff)?;
        let selected: Vec<(usize, usize)> = picked
            .iter()
            .map(|&p| (active[p], labels[active[p]]))
            .collect();
        state.freeze(&selected)?;
        state.commit_snapshot()?;

        // Train on the full reliable set, warm-started.
        let (idx, frozen_lab): (Vec<usize>, Vec<usize>) =
            state.frozen_labels().iter().map(|(&i, &l)| (i, l)).unzip();
        let ts = TrainSet::new(learner_input.select_rows(&idx).data().clone(), frozen_lab)?;
        let model = train(
            &ts,
            cfg.k,
            prev_model.as_ref(),
            cfg.learner,
            &rng.fork(k_iter as u64 + 1),
        )?;

        // Predictions overwrite every remaining active label.
        let now_active = state.active_indices();
        if !now_active.is_empty() {
            let preds = predict(&model, &learner_input.select_rows(&now_active))?;
            for (&i, &p) in now_active.iter().zip(&preds) {
                labels[i] = p;
            }
        }

        // Rebuild the scoring space from hidden activations and refresh
        // the centroids under the frozen labels.
        scoring_features = hidden_features(&model, &learner_input)?;
        centroids = refreshed_centroids(&scoring_features, &state, &labels, cfg.k);

        let trace = model.loss_trace();
        let record = IterationRecord {
            k: k_iter,
            delta_effective: delta_eff,
            ccn_added: selected.len(),
            ccn_total: state.reliable_count(),
            selected,
            loss_initial: trace[0],
            loss_final: *trace.last().expect("loss trace is never empty"),
            eval: evaluate(ds, &scoring_features, &labels, dbi_boot)?,
            wall_time_s: started.elapsed().as_secs_f64(),
        };
        records.push(record);

        prev_model = Some(model);
        delta_eff = advance_delta(delta_eff, cfg.small_delta);
        k_iter += 1;
    }

    let termination = if state.active_indices().is_empty() {
        Termination::PoolExhausted
    } else {
        Termination::KmaxReached
    };

    // Frozen labels must have survived every prediction pass untouched.
    for (&i, &l) in state.frozen_labels() {
        if labels[i] != l {
            return Err(Error::invariant(format!(
                "frozen label of sample {i} mutated: {l} -> {}",
                labels[i]
            )));
        }
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= cfg.k) {
        return Err(Error::invariant(format!(
            "final label {bad} outside 0..{}",
            cfg.k
        )));
    }

    let report = RunReport {
        config: cfg.clone(),
        boot: boot_eval,
        iterations: records,
        final_labels: labels,
        termination,
    };
    verify_report(&report)?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::config::{ClusterParams, LearnerParams};
    use crate::data::synth::gen_synth_blobs;

    /// Small, well-separated blob set and a config that keeps tests fast.
    fn blob_fixture(seed: u64) -> (Dataset, RunConfig) {
        let rng = SeededRng::new(seed);
        let ds = gen_synth_blobs(3, 20, 4, 2, 30.0, 1.0, &rng).unwrap();
        let cfg = RunConfig {
            k: 3,
            delta: 0.2,
            small_delta: 0.1,
            k_max: 10,
            learner: LearnerParams {
                hidden: 16,
                epochs: 8,
                learning_rate: 0.05,
                batch_size: 16,
            },
            cluster_params: ClusterParams {
                restarts: 2,
                max_iter: 50,
                tol: 1e-6,
            },
            seed,
            ..RunConfig::default()
        };
        (ds, cfg)
    }

    #[test]
    fn kmax_zero_reports_boot_stage_only() {
        let (ds, mut cfg) = blob_fixture(7);
        cfg.k_max = 0;
        let report = run(&ds, &cfg).unwrap();
        assert!(report.iterations.is_empty());
        assert_eq!(report.termination, Termination::KmaxReached);
        // Final labels are exactly the boot clustering labels.
        let f = boot_features(&ds, &cfg).unwrap();
        let boot = boot_cluster(&f, &cfg, &SeededRng::new(cfg.seed)).unwrap();
        assert_eq!(report.final_labels, boot.labels());
    }

    #[test]
    fn delta_schedule_clamps_at_one() {
        // Δ=0.2 with δ=1.0 jumps to 1.0 after one iteration, so at most two
        // main-stage iterations can run before every active is selected.
        let (ds, mut cfg) = blob_fixture(11);
        cfg.delta = 0.2;
        cfg.small_delta = 1.0;
        let report = run(&ds, &cfg).unwrap();
        assert!(report.iterations.len() <= 2, "{}", report.iterations.len());
        assert_eq!(report.termination, Termination::PoolExhausted);
        let deltas: Vec<f64> = report
            .iterations
            .iter()
            .map(|r| r.delta_effective)
            .collect();
        assert_eq!(deltas[0], 0.2);
        if deltas.len() > 1 {
            assert_eq!(deltas[1], 1.0);
        }
    }

    #[test]
    fn separable_blobs_reach_full_accuracy() {
        let rng = SeededRng::new(3);
        let ds = gen_synth_blobs(3, 25, 5, 0, 50.0, 1.0, &rng).unwrap();
        let cfg = RunConfig {
            k: 3,
            delta: 0.2,
            small_delta: 0.1,
            k_max: 10,
            seed: 3,
            ..RunConfig::default()
        };
        let report = run(&ds, &cfg).unwrap();
        assert_eq!(report.termination, Termination::PoolExhausted);
        let last = report.iterations.last().unwrap();
        let eval = last.eval.as_ref().unwrap();
        assert_eq!(eval.acc, 1.0, "final acc {}", eval.acc);
    }

    #[test]
    fn reliable_set_grows_monotonically() {
        let (ds, cfg) = blob_fixture(19);
        let report = run(&ds, &cfg).unwrap();
        assert!(!report.iterations.is_empty());
        let mut prev_total = 0;
        for rec in &report.iterations {
            assert!(rec.ccn_added >= 1);
            assert_eq!(rec.ccn_total, prev_total + rec.ccn_added);
            assert!(rec.ccn_total > prev_total);
            prev_total = rec.ccn_total;
        }
        if report.termination == Termination::PoolExhausted {
            assert_eq!(prev_total, ds.len());
        }
    }

    #[test]
    fn identical_seed_reproduces_report_exactly() {
        let (ds, cfg) = blob_fixture(23);
        let a = run(&ds, &cfg).unwrap();
        let b = run(&ds, &cfg).unwrap();
        // Wall time legitimately differs; compare everything else.
        assert_eq!(a.final_labels, b.final_labels);
        assert_eq!(a.termination, b.termination);
        assert_eq!(a.iterations.len(), b.iterations.len());
        for (x, y) in a.iterations.iter().zip(&b.iterations) {
            assert_eq!(x.selected, y.selected);
            assert_eq!(x.loss_initial.to_bits(), y.loss_initial.to_bits());
            assert_eq!(x.loss_final.to_bits(), y.loss_final.to_bits());
            assert_eq!(
                x.eval.as_ref().unwrap().acc.to_bits(),
                y.eval.as_ref().unwrap().acc.to_bits()
            );
        }
    }

    #[test]
    fn unlabeled_dataset_runs_without_eval_rows() {
        let rng = SeededRng::new(5);
        let labeled = gen_synth_blobs(2, 10, 3, 0, 20.0, 1.0, &rng).unwrap();
        let ds = Dataset::new(labeled.images().to_vec(), None, labeled.names().to_vec()).unwrap();
        let cfg = RunConfig {
            k: 2,
            k_max: 3,
            learner: LearnerParams {
                hidden: 8,
                epochs: 4,
                learning_rate: 0.05,
                batch_size: 8,
            },
            seed: 5,
            ..RunConfig::default()
        };
        let report = run(&ds, &cfg).unwrap();
        assert!(report.boot.is_none());
        assert!(report.iterations.iter().all(|r| r.eval.is_none()));
        assert_eq!(report.final_labels.len(), ds.len());
    }

    #[test]
    fn learner_on_boot_features_flag_switches_input() {
        let (ds, mut cfg) = blob_fixture(31);
        cfg.boot_feature = BootFeature::RawPca;
        cfg.pca_dims = Some(3);
        cfg.learner_on_boot_features = true;
        cfg.k_max = 2;
        let report = run(&ds, &cfg).unwrap();
        assert_eq!(report.iterations.len(), 2);
    }
}
