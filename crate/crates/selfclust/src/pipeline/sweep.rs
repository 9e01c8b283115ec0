//! Parameter sweeps: a grid over boot features × Δ × δ, each cell run
//! `repeats` times with consecutive seeds. Reports per-cell mean ± std of
//! boot and final ACC/NMI, iteration counts aggregated per δ, and the
//! feature-sensitivity index τ (per evaluation index, boot vs final) across
//! the feature axis.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::config::{BootFeature, RunConfig};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::metrics::{tau, EvalReport, StdMode};
use crate::pipeline::{run, RunReport};

/// Aggregates for one (feature, Δ, δ) grid cell.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepCell {
    pub feature: BootFeature,
    pub delta: f64,
    pub small_delta: f64,
    pub repeats: usize,
    pub acc_boot_mean: f64,
    pub acc_boot_std: f64,
    pub acc_final_mean: f64,
    pub acc_final_std: f64,
    pub nmi_boot_mean: f64,
    pub nmi_boot_std: f64,
    pub nmi_final_mean: f64,
    pub nmi_final_std: f64,
    /// Main-stage iteration count of each repeat.
    pub iterations: Vec<usize>,
}

/// Mean iteration count across every run sharing one δ.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DeltaIterations {
    pub small_delta: f64,
    pub mean_iterations: f64,
}

/// τ of one evaluation index across the feature axis, boot stage vs final.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TauRow {
    pub index: String,
    pub boot: f64,
    #[serde(rename = "final")]
    pub final_: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepReport {
    pub cells: Vec<SweepCell>,
    pub iterations_by_small_delta: Vec<DeltaIterations>,
    /// Present when the grid spans at least two boot features.
    pub tau: Vec<TauRow>,
}

/// Boot-stage and final-stage evaluation rows pooled per boot feature.
type FeaturePool = (BootFeature, Vec<EvalReport>, Vec<EvalReport>);

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn sample_std(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

/// A run's final evaluation row: the last iteration's when the main stage
/// ran, otherwise the boot row itself.
fn final_eval(report: &RunReport) -> Option<&EvalReport> {
    report
        .iterations
        .last()
        .and_then(|r| r.eval.as_ref())
        .or(report.boot.as_ref())
}

/// Runs the full grid. Requires ground-truth labels (the aggregates are
/// external indices) and nonempty axes.
pub fn sweep(
    ds: &Dataset,
    base: &RunConfig,
    deltas: &[f64],
    small_deltas: &[f64],
    features: &[BootFeature],
    repeats: usize,
) -> Result<SweepReport> {
    if deltas.is_empty() || small_deltas.is_empty() || features.is_empty() {
        return Err(Error::invalid("sweep grid axes must be nonempty"));
    }
    if repeats == 0 {
        return Err(Error::invalid("repeats must be at least 1"));
    }
    if ds.true_labels().is_none() {
        return Err(Error::invalid(
            "sweep aggregates external indices and needs ground-truth labels",
        ));
    }

    let mut cells = Vec::new();
    // Per-feature pools of per-run index values, for τ across features.
    let mut by_feature: Vec<FeaturePool> = features
        .iter()
        .map(|&f| (f, Vec::new(), Vec::new()))
        .collect();
    // (small_delta, iteration counts) pools for the δ summary.
    let mut by_small_delta: Vec<(f64, Vec<f64>)> =
        small_deltas.iter().map(|&d| (d, Vec::new())).collect();

    for (fi, &feature) in features.iter().enumerate() {
        for &delta in deltas {
            for (di, &small_delta) in small_deltas.iter().enumerate() {
                let mut boots = Vec::new();
                let mut finals = Vec::new();
                let mut iters = Vec::new();
                for r in 0..repeats {
                    let cfg = RunConfig {
                        boot_feature: feature,
                        delta,
                        small_delta,
                        seed: base.seed + r as u64,
                        ..base.clone()
                    };
                    let report = run(ds, &cfg)?;
                    let boot = report.boot.clone().expect("labels were checked");
                    let fin = final_eval(&report).expect("labels were checked").clone();
                    iters.push(report.iterations.len());
                    by_small_delta[di].1.push(report.iterations.len() as f64);
                    by_feature[fi].1.push(boot.clone());
                    by_feature[fi].2.push(fin.clone());
                    boots.push(boot);
                    finals.push(fin);
                }
                let accs_b: Vec<f64> = boots.iter().map(|e| e.acc).collect();
                let accs_f: Vec<f64> = finals.iter().map(|e| e.acc).collect();
                let nmis_b: Vec<f64> = boots.iter().map(|e| e.nmi).collect();
                let nmis_f: Vec<f64> = finals.iter().map(|e| e.nmi).collect();
                cells.push(SweepCell {
                    feature,
                    delta,
                    small_delta,
                    repeats,
                    acc_boot_mean: mean(&accs_b),
                    acc_boot_std: sample_std(&accs_b),
                    acc_final_mean: mean(&accs_f),
                    acc_final_std: sample_std(&accs_f),
                    nmi_boot_mean: mean(&nmis_b),
                    nmi_boot_std: sample_std(&nmis_b),
                    nmi_final_mean: mean(&nmis_f),
                    nmi_final_std: sample_std(&nmis_f),
                    iterations: iters,
                });
            }
        }
    }

    let iterations_by_small_delta = by_small_delta
        .into_iter()
        .map(|(small_delta, counts)| DeltaIterations {
            small_delta,
            mean_iterations: mean(&counts),
        })
        .collect();

    let mut tau_rows = Vec::new();
    if features.len() >= 2 {
        let pick = |which: fn(&EvalReport) -> f64| -> (Vec<f64>, Vec<f64>) {
            let boot: Vec<f64> = by_feature
                .iter()
                .map(|(_, boots, _)| mean(&boots.iter().map(which).collect::<Vec<_>>()))
                .collect();
            let fin: Vec<f64> = by_feature
                .iter()
                .map(|(_, _, fins)| mean(&fins.iter().map(which).collect::<Vec<_>>()))
                .collect();
            (boot, fin)
        };
        type IndexGetter = fn(&EvalReport) -> f64;
        let indices: [(&str, IndexGetter); 5] = [
            ("jc", |e| e.jc),
            ("fmi", |e| e.fmi),
            ("nmi", |e| e.nmi),
            ("ari", |e| e.ari),
            ("acc", |e| e.acc),
        ];
        for (name, which) in indices {
            let (boot_vals, final_vals) = pick(which);
            if let (Ok(b), Ok(f)) = (
                tau(&boot_vals, StdMode::Sample),
                tau(&final_vals, StdMode::Sample),
            ) {
                tau_rows.push(TauRow {
                    index: name.to_string(),
                    boot: b,
                    final_: f,
                });
            }
        }
    }

    Ok(SweepReport {
        cells,
        iterations_by_small_delta,
        tau: tau_rows,
    })
}

/// Writes `sweep.json` plus a `cells.csv` summary into `dir`.
pub fn write_sweep(report: &SweepReport, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(
        dir.join("sweep.json"),
        serde_json::to_string_pretty(report)?,
    )?;
    let mut csv = fs::File::create(dir.join("cells.csv"))?;
    writeln!(
        csv,
        "feature,delta,small_delta,repeats,acc_boot_mean,acc_boot_std,\
         acc_final_mean,acc_final_std,nmi_boot_mean,nmi_boot_std,\
         nmi_final_mean,nmi_final_std,iterations_mean"
    )?;
    for c in &report.cells {
        let iters: Vec<f64> = c.iterations.iter().map(|&i| i as f64).collect();
        writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            c.feature.name(),
            c.delta,
            c.small_delta,
            c.repeats,
            c.acc_boot_mean,
            c.acc_boot_std,
            c.acc_final_mean,
            c.acc_final_std,
            c.nmi_boot_mean,
            c.nmi_boot_std,
            c.nmi_final_mean,
            c.nmi_final_std,
            mean(&iters)
        )?;
    }
    Ok(())
}
