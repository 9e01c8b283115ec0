//! Command-line front end for the self-training clustering engine.
//!
//! Subcommands:
//! - `run`       execute one full run and write report.json + iterations.csv
//! - `sweep`     grid over boot features × Δ × δ with repeats
//! - `eval`      score a predicted label file against a truth label file
//! - `gen-synth` generate a synthetic blob dataset as lossless JSON
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 invariant or
//! training failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use selfclust::data::config::RunConfig;
use selfclust::data::idx::load_mnist_idx;
use selfclust::data::image_dir::load_image_dir;
use selfclust::data::json::{load_dataset_json, save_dataset_json};
use selfclust::data::synth::gen_synth_blobs;
use selfclust::data::{BootFeature, Dataset, SeededRng};
use selfclust::metrics::EvalReport;
use selfclust::pipeline::{run, sweep, write_report, write_sweep};
use selfclust::Error;

#[derive(Parser)]
#[command(
    name = "selfclust",
    version,
    about = "Iterative self-training image clustering"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the boot stage plus the self-training loop on one dataset.
    Run {
        /// JSON config mirroring the run-configuration fields.
        #[arg(long)]
        config: PathBuf,
        /// Dataset: a .json dataset file, a class-per-subdirectory image
        /// directory, or an `images.idx,labels.idx` pair.
        #[arg(long)]
        data: String,
        /// Output directory for report.json and iterations.csv.
        #[arg(long)]
        out: PathBuf,
    },
    /// Grid of runs over boot features, Δ, and δ.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        data: String,
        /// Comma-separated Δ grid, e.g. 0.1,0.2,0.4.
        #[arg(long, value_delimiter = ',', required = true)]
        deltas: Vec<f64>,
        /// Comma-separated δ grid.
        #[arg(long, value_delimiter = ',', required = true)]
        small_deltas: Vec<f64>,
        /// Comma-separated boot features (raw|hog|gabor|raw_pca).
        #[arg(long, value_delimiter = ',', required = true)]
        features: Vec<String>,
        /// Runs per grid cell with consecutive seeds.
        #[arg(long, default_value_t = 1)]
        repeats: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate predicted labels against ground truth; prints a JSON row.
    Eval {
        /// Truth labels: JSON array or one integer per line.
        #[arg(long)]
        truth: PathBuf,
        /// Predicted labels in the same format.
        #[arg(long)]
        pred: PathBuf,
    },
    /// Generate a synthetic Gaussian-blob dataset (lossless JSON).
    GenSynth {
        /// Number of classes.
        #[arg(long)]
        k: usize,
        #[arg(long)]
        per_class: usize,
        #[arg(long)]
        dim_signal: usize,
        #[arg(long, default_value_t = 0)]
        dim_noise: usize,
        /// Minimum distance between class means.
        #[arg(long, default_value_t = 10.0)]
        separation: f64,
        #[arg(long, default_value_t = 1.0)]
        noise_scale: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Accepts a dataset path in any supported form.
fn load_data(spec: &str) -> Result<Dataset, Error> {
    let path = Path::new(spec);
    if path.is_dir() {
        return load_image_dir(path);
    }
    if let Some((images, labels)) = spec.split_once(',') {
        return load_mnist_idx(Path::new(images), Some(Path::new(labels)));
    }
    if path.extension().is_some_and(|e| e == "json") {
        return load_dataset_json(path);
    }
    Err(Error::invalid(format!(
        "cannot tell what '{spec}' is: expected a directory, a .json dataset, \
         or an images.idx,labels.idx pair"
    )))
}

/// Reads a label vector: a JSON array like `[0, 1, 2]` or one integer per
/// line.
fn load_labels(path: &Path) -> Result<Vec<usize>, Error> {
    let text = std::fs::read_to_string(path)?;
    let trimmed = text.trim_start();
    if trimmed.starts_with('[') {
        return Ok(serde_json::from_str(&text)?);
    }
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(|l| {
            l.parse::<usize>()
                .map_err(|_| Error::format(format!("'{l}' is not a label")))
        })
        .collect()
}

fn dispatch(cmd: Cmd) -> Result<(), Error> {
    match cmd {
        Cmd::Run { config, data, out } => {
            let cfg = RunConfig::from_json_file(&config)?;
            let ds = load_data(&data)?;
            let report = run(&ds, &cfg)?;
            write_report(&report, &out)?;
            let last = report
                .iterations
                .last()
                .and_then(|r| r.eval.as_ref())
                .or(report.boot.as_ref());
            match last {
                Some(eval) => println!(
                    "{} iterations, {:?}, acc {:.4}, nmi {:.4} -> {}",
                    report.iterations.len(),
                    report.termination,
                    eval.acc,
                    eval.nmi,
                    out.display()
                ),
                None => println!(
                    "{} iterations, {:?} (no ground truth) -> {}",
                    report.iterations.len(),
                    report.termination,
                    out.display()
                ),
            }
            Ok(())
        }
        Cmd::Sweep {
            config,
            data,
            deltas,
            small_deltas,
            features,
            repeats,
            out,
        } => {
            let cfg = RunConfig::from_json_file(&config)?;
            let ds = load_data(&data)?;
            let features = features
                .iter()
                .map(|s| BootFeature::parse(s))
                .collect::<Result<Vec<_>, _>>()?;
            let report = sweep(&ds, &cfg, &deltas, &small_deltas, &features, repeats)?;
            write_sweep(&report, &out)?;
            println!("{} cells -> {}", report.cells.len(), out.display());
            Ok(())
        }
        Cmd::Eval { truth, pred } => {
            let t = load_labels(&truth)?;
            let p = load_labels(&pred)?;
            let eval = EvalReport::external(&t, &p)?;
            println!("{}", serde_json::to_string_pretty(&eval)?);
            Ok(())
        }
        Cmd::GenSynth {
            k,
            per_class,
            dim_signal,
            dim_noise,
            separation,
            noise_scale,
            seed,
            out,
        } => {
            let rng = SeededRng::new(seed);
            let ds = gen_synth_blobs(
                k,
                per_class,
                dim_signal,
                dim_noise,
                separation,
                noise_scale,
                &rng,
            )?;
            save_dataset_json(&ds, &out)?;
            println!("{} samples -> {}", ds.len(), out.display());
            Ok(())
        }
    }
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Io(_) | Error::Json(_) | Error::Format(_) => 2,
        Error::InvalidParam(_) | Error::DimMismatch(_) => 2,
        Error::Train(_) | Error::Invariant(_) => 3,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Includes --help/--version, which clap treats as "errors" but
            // which exit cleanly.
            if e.use_stderr() {
                eprint!("{e}");
                return ExitCode::from(1);
            }
            print!("{e}");
            return ExitCode::SUCCESS;
        }
    };
    match dispatch(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}
