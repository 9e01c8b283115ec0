//! Run reports: serialization, the companion CSV, and an independent
//! checker that replays the recorded history to re-verify the reliability
//! invariants from the report alone.

use std::collections::HashSet;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::config::RunConfig;
use crate::error::{Error, Result};
use crate::metrics::EvalReport;

/// Why the main loop stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    /// Every sample became reliable.
    PoolExhausted,
    /// The iteration bound hit with actives remaining; they keep their
    /// last predicted labels.
    KmaxReached,
}

/// Bookkeeping for one main-stage iteration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IterationRecord {
    /// Iteration index, 0-based.
    pub k: usize,
    /// Δ in effect during this iteration's selection.
    pub delta_effective: f64,
    /// Samples newly frozen this iteration.
    pub ccn_added: usize,
    /// Reliable-set size after this iteration (‖v‖₁).
    pub ccn_total: usize,
    /// (sample index, frozen pseudo-label) pairs added this iteration;
    /// kept in the report so the invariant chain can be replayed without
    /// rerunning anything.
    pub selected: Vec<(usize, usize)>,
    /// Classifier loss on the reliable set before this iteration's epochs.
    pub loss_initial: f64,
    /// Loss after the final epoch.
    pub loss_final: f64,
    /// Indices against ground truth (present when the dataset has labels).
    pub eval: Option<EvalReport>,
    pub wall_time_s: f64,
}

/// Complete artifact of one run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub config: RunConfig,
    /// Boot-stage evaluation (present when the dataset has labels).
    pub boot: Option<EvalReport>,
    pub iterations: Vec<IterationRecord>,
    /// Pseudo-label for every sample: frozen where reliable, last
    /// prediction elsewhere.
    pub final_labels: Vec<usize>,
    pub termination: Termination,
}

/// Writes `report.json` and the per-iteration `iterations.csv` (boot row
/// first) into `dir`, creating it if needed.
pub fn write_report(report: &RunReport, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let json = serde_json::to_string_pretty(report)?;
    fs::write(dir.join("report.json"), json)?;

    let mut csv = fs::File::create(dir.join("iterations.csv"))?;
    writeln!(
        csv,
        "stage,delta_effective,ccn_added,ccn_total,loss_initial,loss_final,\
         jc,fmi,nmi,ari,acc,dbi,dbi_normalized,wall_time_s"
    )?;
    writeln!(csv, "boot,,,,,,{},", eval_cells(report.boot.as_ref()))?;
    for rec in &report.iterations {
        writeln!(
            csv,
            "{},{},{},{},{},{},{},{}",
            rec.k,
            rec.delta_effective,
            rec.ccn_added,
            rec.ccn_total,
            rec.loss_initial,
            rec.loss_final,
            eval_cells(rec.eval.as_ref()),
            rec.wall_time_s
        )?;
    }
    Ok(())
}

fn eval_cells(eval: Option<&EvalReport>) -> String {
    match eval {
        None => ",,,,,,".to_string(),
        Some(e) => format!(
            "{},{},{},{},{},{},{}",
            e.jc,
            e.fmi,
            e.nmi,
            e.ari,
            e.acc,
            e.dbi.map_or(String::new(), |v| v.to_string()),
            e.dbi_normalized.map_or(String::new(), |v| v.to_string())
        ),
    }
}

/// Reads a `report.json` back.
pub fn read_report(path: &Path) -> Result<RunReport> {
    let text = fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

/// Replays a report's recorded history and re-derives every reliability
/// invariant from scratch: the reliable sets must form an inclusion chain
/// of strictly increasing size, frozen labels must never mutate (their
/// final labels still equal the label recorded at freeze time), the Δ
/// schedule must match the config, and the termination reason must be
/// consistent with the chain. Independent of the run loop by design.
pub fn verify_report(report: &RunReport) -> Result<()> {
    let n = report.final_labels.len();
    let k = report.config.k;
    let fail = |msg: String| Err(Error::invariant(msg));

    if n == 0 {
        return fail("report has no final labels".into());
    }
    if let Some(&bad) = report.final_labels.iter().find(|&&l| l >= k) {
        return fail(format!("final label {bad} outside 0..{k}"));
    }
    if report.iterations.len() > report.config.k_max {
        return fail(format!(
            "{} iterations exceed the bound {}",
            report.iterations.len(),
            report.config.k_max
        ));
    }

    let mut frozen: HashSet<usize> = HashSet::new();
    for (pos, rec) in report.iterations.iter().enumerate() {
        let tag = format!("iteration record {pos}");
        if rec.k != pos {
            return fail(format!("{tag}: index field {} out of order", rec.k));
        }
        let expected_delta =
            (report.config.delta + pos as f64 * report.config.small_delta).min(1.0);
        if (rec.delta_effective - expected_delta).abs() > 1e-9 {
            return fail(format!(
                "{tag}: delta {} deviates from schedule value {expected_delta}",
                rec.delta_effective
            ));
        }
        if rec.selected.is_empty() {
            return fail(format!("{tag}: reliable set did not grow"));
        }
        if rec.ccn_added != rec.selected.len() {
            return fail(format!(
                "{tag}: ccn_added {} but {} samples recorded",
                rec.ccn_added,
                rec.selected.len()
            ));
        }
        for &(i, l) in &rec.selected {
            if i >= n {
                return fail(format!("{tag}: frozen sample index {i} out of range"));
            }
            if l >= k {
                return fail(format!("{tag}: frozen label {l} outside 0..{k}"));
            }
            if !frozen.insert(i) {
                return fail(format!(
                    "{tag}: sample {i} frozen twice — inclusion chain broken"
                ));
            }
            if report.final_labels[i] != l {
                return fail(format!(
                    "{tag}: sample {i} froze label {l} but finished with {}",
                    report.final_labels[i]
                ));
            }
        }
        if rec.ccn_total != frozen.len() {
            return fail(format!(
                "{tag}: ccn_total {} but replay counts {}",
                rec.ccn_total,
                frozen.len()
            ));
        }
    }

    match report.termination {
        Termination::PoolExhausted => {
            if frozen.len() != n {
                return fail(format!(
                    "pool_exhausted with only {} of {n} samples frozen",
                    frozen.len()
                ));
            }
        }
        Termination::KmaxReached => {
            if frozen.len() >= n && report.config.k_max > 0 {
                return fail("kmax_reached but the pool was exhausted".into());
            }
            if report.iterations.len() != report.config.k_max {
                return fail(format!(
                    "kmax_reached after {} of {} iterations",
                    report.iterations.len(),
                    report.config.k_max
                ));
            }
        }
    }

    for eval in report
        .boot
        .iter()
        .chain(report.iterations.iter().filter_map(|r| r.eval.as_ref()))
    {
        for (name, v) in [
            ("jc", eval.jc),
            ("fmi", eval.fmi),
            ("nmi", eval.nmi),
            ("acc", eval.acc),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return fail(format!("index {name} = {v} outside [0, 1]"));
            }
        }
        if !(-1.0..=1.0).contains(&eval.ari) {
            return fail(format!("ari = {} outside [-1, 1]", eval.ari));
        }
    }
    Ok(())
}
