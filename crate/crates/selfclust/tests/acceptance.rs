//! Release acceptance suite.
//!
//! One test per criterion; each prints a single summary line
//! `criterion NN (<name>): PASS|FAIL — <evidence>` (visible with
//! `--nocapture`, and always on failure) and then asserts.
//!
//! The thresholds are frozen; when a criterion is not met the test is
//! expected to fail rather than be loosened.

use std::path::Path;
use std::time::Instant;

use ndarray::{array, Array2};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use selfclust::cluster::gmm_fit;
use selfclust::data::config::{
    BootFeature, ClusterParams, Clusterer, Distance, GaborParams, HogParams, LearnerParams,
    RunConfig,
};
use selfclust::data::idx::load_mnist_idx;
use selfclust::data::rng::SeededRng;
use selfclust::data::synth::gen_synth_blobs;
use selfclust::data::Dataset;
use selfclust::features::FeatureMatrix;
use selfclust::learner::{train, TrainSet};
use selfclust::metrics::{acc, ari, dbi, fmi, jc, pair_confusion, tau, PairConfusion, StdMode};
use selfclust::pipeline::{run, sweep, verify_report, RunReport};

fn conclude(number: u32, name: &str, pass: bool, evidence: &str) {
    let line = format!(
        "criterion {number:02} ({name}): {} — {evidence}",
        if pass { "PASS" } else { "FAIL" }
    );
    println!("{line}");
    assert!(pass, "{line}");
}

// ---------------------------------------------------------------- 01

/// Pair counts by direct enumeration of all sample pairs.
fn enumerated_pairs(truth: &[usize], pred: &[usize]) -> PairConfusion {
    let (mut tp, mut fp, mut fn_, mut tn) = (0u64, 0u64, 0u64, 0u64);
    for i in 0..truth.len() {
        for j in i + 1..truth.len() {
            match (truth[i] == truth[j], pred[i] == pred[j]) {
                (true, true) => tp += 1,
                (false, true) => fp += 1,
                (true, false) => fn_ += 1,
                (false, false) => tn += 1,
            }
        }
    }
    PairConfusion { tp, fp, fn_, tn }
}

/// ARI straight from pair counts (the pair-count identities
/// Σ C(n_ij,2) = tp, Σ C(a_i,2) = tp+fn, Σ C(b_j,2) = tp+fp).
fn enumerated_ari(pc: &PairConfusion) -> f64 {
    let index = pc.tp as f64;
    let sum_rows = (pc.tp + pc.fn_) as f64;
    let sum_cols = (pc.tp + pc.fp) as f64;
    let total = (pc.tp + pc.fp + pc.fn_ + pc.tn) as f64;
    let expected = sum_rows * sum_cols / total;
    let max_index = 0.5 * (sum_rows + sum_cols);
    if (max_index - expected).abs() < 1e-12 {
        return 1.0;
    }
    (index - expected) / (max_index - expected)
}

/// Best accuracy over every one-to-one cluster→class relabeling.
fn exhaustive_acc(truth: &[usize], pred: &[usize]) -> f64 {
    fn compact(labels: &[usize]) -> Vec<usize> {
        let mut seen: Vec<usize> = Vec::new();
        labels
            .iter()
            .map(|&l| {
                if let Some(p) = seen.iter().position(|&s| s == l) {
                    p
                } else {
                    seen.push(l);
                    seen.len() - 1
                }
            })
            .collect()
    }
    let t = compact(truth);
    let p = compact(pred);
    let kt = t.iter().max().unwrap() + 1;
    let kp = p.iter().max().unwrap() + 1;
    let k = kt.max(kp);
    let mut counts = vec![vec![0u64; k]; k];
    for (&a, &b) in t.iter().zip(&p) {
        counts[a][b] += 1;
    }
    // Walk all k! assignments of predicted clusters to classes.
    fn best(counts: &[Vec<u64>], row: usize, used: &mut [bool]) -> u64 {
        if row == counts.len() {
            return 0;
        }
        let mut top = 0;
        for col in 0..counts.len() {
            if !used[col] {
                used[col] = true;
                top = top.max(counts[row][col] + best(counts, row + 1, used));
                used[col] = false;
            }
        }
        top
    }
    let matched = best(&counts, 0, &mut vec![false; k]);
    matched as f64 / truth.len() as f64
}

#[test]
fn c01_pair_metrics_match_exhaustive_enumeration() {
    let started = Instant::now();
    let mut rng = StdRng::seed_from_u64(11);
    let mut cases = 0usize;
    for case in 0..250 {
        let n = rng.gen_range(2..=12);
        // 200 cases bound the label alphabet at 4; the rest stretch the
        // exhaustive-matching check for accuracy up to 6 classes.
        let kcap = if case < 200 { 4 } else { 6 };
        let kt = rng.gen_range(1..=kcap);
        let kp = rng.gen_range(1..=kcap);
        let truth: Vec<usize> = (0..n).map(|_| rng.gen_range(0..kt)).collect();
        let pred: Vec<usize> = (0..n).map(|_| rng.gen_range(0..kp)).collect();

        let pc = pair_confusion(&truth, &pred).unwrap();
        let brute = enumerated_pairs(&truth, &pred);
        assert_eq!(pc, brute, "pair counts differ on {truth:?} / {pred:?}");

        let brute_jc = {
            let d = brute.tp + brute.fp + brute.fn_;
            if d == 0 {
                1.0
            } else {
                brute.tp as f64 / d as f64
            }
        };
        assert_eq!(jc(&pc), brute_jc, "jc differs on {truth:?} / {pred:?}");

        let brute_fmi = {
            if brute.tp + brute.fp + brute.fn_ == 0 || (brute.fp == 0 && brute.fn_ == 0) {
                1.0
            } else {
                let a = brute.tp + brute.fp;
                let b = brute.tp + brute.fn_;
                if a == 0 || b == 0 {
                    0.0
                } else {
                    brute.tp as f64 / (a as f64 * b as f64).sqrt()
                }
            }
        };
        assert_eq!(fmi(&pc), brute_fmi, "fmi differs on {truth:?} / {pred:?}");

        assert_eq!(
            ari(&truth, &pred).unwrap(),
            enumerated_ari(&brute),
            "ari differs on {truth:?} / {pred:?}"
        );
        assert_eq!(
            acc(&truth, &pred).unwrap(),
            exhaustive_acc(&truth, &pred),
            "acc differs on {truth:?} / {pred:?}"
        );
        cases += 1;
    }
    let secs = started.elapsed().as_secs_f64();
    conclude(
        1,
        "pair metrics and matching accuracy vs exhaustive enumeration",
        secs < 10.0,
        &format!("{cases} random label pairs exact in {secs:.2} s (budget 10 s)"),
    );
}

// ---------------------------------------------------------------- 02

#[test]
fn c02_index_difference_rate_anchor() {
    let t = tau(&[0.55, 0.58, 0.46, 0.57], StdMode::Sample).unwrap();
    let err = (t - 0.11).abs();
    conclude(
        2,
        "index difference rate anchor",
        err <= 0.02,
        &format!("tau([0.55,0.58,0.46,0.57]) = {t:.4}, |tau − 0.11| = {err:.4} (tolerance 0.02)"),
    );
}

// ---------------------------------------------------------------- 03

#[test]
fn c03_learner_analytic_gradients_match_finite_differences() {
    let mut rng = StdRng::seed_from_u64(23);
    let (n, d, k) = (12, 5, 3);
    let mut worst = 0.0f64;
    for point in 0..20u64 {
        let feats = Array2::from_shape_fn((n, d), |_| rng.gen_range(-2.0..2.0));
        let labels: Vec<usize> = (0..n).map(|_| rng.gen_range(0..k)).collect();
        let ts = TrainSet::new(feats, labels).unwrap();
        // Zero epochs leaves the seeded random initialization untouched:
        // an arbitrary point in parameter space.
        let hyper = LearnerParams {
            hidden: 4,
            epochs: 0,
            learning_rate: 0.1,
            batch_size: 6,
        };
        let model = train(&ts, k, None, hyper, &SeededRng::new(1000 + point)).unwrap();

        let (_, grads) = model.loss_and_grad(&ts).unwrap();
        let analytic: Vec<f64> = grads
            .w1
            .iter()
            .chain(grads.b1.iter())
            .chain(grads.w2.iter())
            .chain(grads.b2.iter())
            .cloned()
            .collect();

        let theta = model.params_flat();
        let h = 1e-6;
        for i in 0..theta.len() {
            let mut probe = model.clone();
            let mut bumped = theta.clone();
            bumped[i] = theta[i] + h;
            probe.set_params_flat(&bumped).unwrap();
            let up = probe.loss(&ts).unwrap();
            bumped[i] = theta[i] - h;
            probe.set_params_flat(&bumped).unwrap();
            let down = probe.loss(&ts).unwrap();
            let fd = (up - down) / (2.0 * h);
            let rel = (analytic[i] - fd).abs() / analytic[i].abs().max(fd.abs()).max(1e-3);
            worst = worst.max(rel);
        }
    }
    conclude(
        3,
        "learner analytic gradients vs central differences",
        worst < 1e-4,
        &format!("20 random parameter points, max relative error {worst:.2e} (bound 1e-4)"),
    );
}

// ---------------------------------------------------------------- 04

#[test]
fn c04_gmm_log_likelihood_never_decreases() {
    let mut rng = StdRng::seed_from_u64(37);
    let mut worst_drop = 0.0f64;
    let mut traces = 0usize;
    for case in 0..50u64 {
        let n = rng.gen_range(10..=30);
        let d = rng.gen_range(2..=4);
        let k = rng.gen_range(2..=3);
        let shift: Vec<f64> = (0..d).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let data = Array2::from_shape_fn((n, d), |(i, j)| {
            let base: f64 = rng.gen_range(-1.0..1.0);
            if i % 2 == 0 {
                base + shift[j]
            } else {
                base
            }
        });
        let fm = FeatureMatrix::new("random", data).unwrap();
        let params = ClusterParams {
            restarts: 2,
            max_iter: 40,
            tol: 1e-9,
        };
        let (_, gmm) = gmm_fit(&fm, k, &SeededRng::new(2000 + case), params).unwrap();
        let trace = gmm.log_likelihood_trace();
        assert!(trace.len() >= 2, "trace too short: {}", trace.len());
        for w in trace.windows(2) {
            worst_drop = worst_drop.max(w[0] - w[1]);
        }
        traces += 1;
    }
    conclude(
        4,
        "EM log-likelihood monotone",
        worst_drop <= 1e-9,
        &format!("{traces} random datasets, worst per-step decrease {worst_drop:.2e} (slack 1e-9)"),
    );
}

// ---------------------------------------------------------------- 05

#[test]
fn c05_report_invariants_hold_across_randomized_runs() {
    let mut rng = StdRng::seed_from_u64(41);
    let features = BootFeature::ALL;
    let clusterers = [Clusterer::Kmeans, Clusterer::Gmm];
    let distances = [
        Distance::Euclidean,
        Distance::Cityblock,
        Distance::Chessboard,
    ];
    let mut checked = 0usize;
    for case in 0..20u64 {
        let k = rng.gen_range(2..=4);
        let ds = gen_synth_blobs(
            k,
            rng.gen_range(12..=24),
            rng.gen_range(3..=5),
            rng.gen_range(0..=4),
            rng.gen_range(4.0..14.0),
            1.0,
            &SeededRng::new(3000 + case),
        )
        .unwrap();
        let cfg = RunConfig {
            k,
            delta: rng.gen_range(0.1..0.6),
            small_delta: rng.gen_range(0.0..0.3),
            k_max: rng.gen_range(0..=6),
            boot_feature: features[rng.gen_range(0..features.len())],
            clusterer: clusterers[rng.gen_range(0..clusterers.len())],
            distance: distances[rng.gen_range(0..distances.len())],
            learner: LearnerParams {
                hidden: rng.gen_range(4..=8),
                epochs: rng.gen_range(5..=20),
                learning_rate: rng.gen_range(0.05..0.2),
                batch_size: rng.gen_range(8..=16),
            },
            hog: HogParams {
                cell: 1,
                block: 1,
                bins: 9,
            },
            gabor: GaborParams {
                scales: 1,
                orients: 2,
            },
            pca_dims: Some(3),
            seed: case,
            ..RunConfig::default()
        };
        let report = run(&ds, &cfg).unwrap();
        verify_report(&report).unwrap_or_else(|e| {
            panic!("invariant violation on randomized case {case} ({cfg:?}): {e}")
        });
        checked += 1;
    }
    conclude(
        5,
        "reliable-set chain invariants on randomized runs",
        checked >= 20,
        &format!("{checked} randomized configs replayed clean (required ≥ 20)"),
    );
}

// ---------------------------------------------------------------- 06

fn boot_and_final_acc(report: &RunReport) -> (f64, f64) {
    let boot = report.boot.as_ref().expect("labeled data").acc;
    let fin = report
        .iterations
        .last()
        .and_then(|it| it.eval.as_ref())
        .map_or(boot, |e| e.acc);
    (boot, fin)
}

#[test]
fn c06_self_training_lifts_synthetic_accuracy() {
    let mut gains = Vec::new();
    let mut wins = 0usize;
    let mut slowest = 0.0f64;
    for seed in 0..10u64 {
        let ds = gen_synth_blobs(3, 100, 5, 20, 8.5, 1.0, &SeededRng::new(seed)).unwrap();
        let cfg = RunConfig {
            k: 3,
            delta: 0.2,
            small_delta: 0.1,
            k_max: 8,
            learner: LearnerParams {
                hidden: 8,
                epochs: 300,
                learning_rate: 0.15,
                batch_size: 32,
            },
            seed,
            ..RunConfig::default()
        };
        let started = Instant::now();
        let report = run(&ds, &cfg).unwrap();
        slowest = slowest.max(started.elapsed().as_secs_f64());
        let (boot, fin) = boot_and_final_acc(&report);
        let gain = fin - boot;
        if gain >= 0.05 {
            wins += 1;
        }
        gains.push(format!("{gain:+.3}"));
    }
    conclude(
        6,
        "self-training lift on synthetic blobs",
        wins >= 8 && slowest < 60.0,
        &format!(
            "gain ≥ +0.05 in {wins}/10 seeds (required 8/10), gains [{}], slowest seed {slowest:.1} s (budget 60 s)",
            gains.join(", ")
        ),
    );
}

// ---------------------------------------------------------------- 07

/// Digit images: a real-MNIST subset when MNIST_DATA_DIR points at the
/// standard IDX training pair, otherwise the bundled 8×8 digit scans.
fn digit_dataset() -> (Dataset, String) {
    if let Ok(dir) = std::env::var("MNIST_DATA_DIR") {
        let images = Path::new(&dir).join("train-images-idx3-ubyte");
        let labels = Path::new(&dir).join("train-labels-idx1-ubyte");
        if images.exists() && labels.exists() {
            let full = load_mnist_idx(&images, Some(&labels)).expect("readable MNIST pair");
            return (
                digits_subset(&full, 200),
                "MNIST train subset, digits 0–4, 200/class".into(),
            );
        }
    }
    let base = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data");
    let ds = load_mnist_idx(
        &base.join("digits-images-idx3-ubyte"),
        Some(&base.join("digits-labels-idx1-ubyte")),
    )
    .expect("bundled digit fixture");
    let per_class = ds.len() / 5;
    (
        ds,
        format!("bundled 8×8 digit scans, digits 0–4, {per_class}/class"),
    )
}

/// First `per_class` samples of each digit 0–4, in dataset order.
fn digits_subset(full: &Dataset, per_class: usize) -> Dataset {
    let truth = full.true_labels().expect("labeled digits");
    let mut kept_per_class = [0usize; 5];
    let mut images = Vec::new();
    let mut labels = Vec::new();
    let mut names = Vec::new();
    for (i, &label) in truth.iter().enumerate() {
        if label < 5 && kept_per_class[label] < per_class {
            kept_per_class[label] += 1;
            images.push(full.images()[i].clone());
            labels.push(label);
            names.push(full.names()[i].clone());
        }
    }
    assert_eq!(
        kept_per_class, [per_class; 5],
        "source set too small for {per_class}/class"
    );
    Dataset::new(images, Some(labels), names).unwrap()
}

#[test]
fn c07_digit_images_boot_and_improvement() {
    let (ds, source) = digit_dataset();
    let mut wins = 0usize;
    let mut worst_boot = 1.0f64;
    let mut slowest = 0.0f64;
    let mut gains = Vec::new();
    for seed in 0..10u64 {
        let cfg = RunConfig {
            k: 5,
            delta: 0.5,
            small_delta: 0.2,
            k_max: 8,
            learner: LearnerParams {
                hidden: 64,
                epochs: 300,
                learning_rate: 0.1,
                batch_size: 32,
            },
            seed,
            ..RunConfig::default()
        };
        let started = Instant::now();
        let report = run(&ds, &cfg).unwrap();
        slowest = slowest.max(started.elapsed().as_secs_f64());
        let (boot, fin) = boot_and_final_acc(&report);
        worst_boot = worst_boot.min(boot);
        if fin > boot {
            wins += 1;
        }
        gains.push(format!("{:+.3}", fin - boot));
    }
    conclude(
        7,
        "digit images: boot quality and lift",
        worst_boot >= 0.45 && wins >= 7 && slowest < 600.0,
        &format!(
            "{source}; min boot acc {worst_boot:.3} (required ≥ 0.45), final > boot in {wins}/10 seeds \
             (required 7/10), gains [{}], slowest seed {slowest:.1} s (budget 600 s)",
            gains.join(", ")
        ),
    );
}

// ---------------------------------------------------------------- 08

#[test]
fn c08_weak_feature_dependence_shrinks() {
    let mut wins = 0usize;
    let mut pairs = Vec::new();
    for seed in 0..10u64 {
        let ds = gen_synth_blobs(3, 100, 5, 20, 12.0, 1.0, &SeededRng::new(seed)).unwrap();
        let cfg = RunConfig {
            k: 3,
            delta: 0.2,
            small_delta: 0.1,
            k_max: 8,
            learner: LearnerParams {
                hidden: 8,
                epochs: 300,
                learning_rate: 0.15,
                batch_size: 32,
            },
            hog: HogParams {
                cell: 1,
                block: 1,
                bins: 9,
            },
            gabor: GaborParams {
                scales: 2,
                orients: 4,
            },
            pca_dims: Some(5),
            seed,
            ..RunConfig::default()
        };
        let report = sweep(&ds, &cfg, &[0.2], &[0.1], &BootFeature::ALL, 1).unwrap();
        let row = report
            .tau
            .iter()
            .find(|r| r.index == "acc")
            .expect("acc row in the feature-variability table");
        if row.final_ < row.boot {
            wins += 1;
        }
        pairs.push(format!("{:.3}→{:.3}", row.boot, row.final_));
    }
    conclude(
        8,
        "feature dependence shrinks through the loop",
        wins >= 8,
        &format!(
            "tau over final acc < tau over boot acc in {wins}/10 seeds (required 8/10): [{}]",
            pairs.join(", ")
        ),
    );
}

// ---------------------------------------------------------------- 09

#[test]
fn c09_larger_relaxation_never_needs_more_iterations() {
    let ds = gen_synth_blobs(3, 100, 5, 20, 8.5, 1.0, &SeededRng::new(3)).unwrap();
    let base = RunConfig {
        k: 3,
        delta: 0.2,
        k_max: 25,
        learner: LearnerParams {
            hidden: 8,
            epochs: 30,
            learning_rate: 0.1,
            batch_size: 32,
        },
        seed: 3,
        ..RunConfig::default()
    };
    let coarse = run(
        &ds,
        &RunConfig {
            small_delta: 0.2,
            ..base.clone()
        },
    )
    .unwrap();
    let fine = run(
        &ds,
        &RunConfig {
            small_delta: 0.05,
            ..base
        },
    )
    .unwrap();
    let (nc, nf) = (coarse.iterations.len(), fine.iterations.len());
    conclude(
        9,
        "coarser relaxation terminates at least as fast",
        nc <= nf,
        &format!("iterations: {nc} at relaxation 0.2 vs {nf} at 0.05 (same belief ratio and seed)"),
    );
}

// ---------------------------------------------------------------- 10

#[test]
fn c10_dbi_two_cluster_hand_case() {
    let fm = FeatureMatrix::new(
        "hand",
        array![[0.0, 0.0], [0.0, 2.0], [10.0, 0.0], [10.0, 2.0]],
    )
    .unwrap();
    let value = dbi(&fm, &[0, 0, 1, 1]).unwrap();
    let err = (value - 0.2).abs();
    conclude(
        10,
        "Davies–Bouldin hand case",
        err < 1e-12,
        &format!("two 2-point clusters give {value:.15} (expected 0.2 within 1e-12)"),
    );
}
