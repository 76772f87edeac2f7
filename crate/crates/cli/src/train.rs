//! Autoencoder information-plane runs and bottleneck sweeps on MNIST.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Serialize;

use infoplane_core::data::{load_mnist_idx, Dataset, Split};
use infoplane_core::ip::{
    bottleneck_sweep, format_sig9, run_ip_training, write_trajectory_csv, DatasetInfo, RunMetadata,
    RunStatus, SweepConfig, SweepResult, DEFAULT_LOG_POINTS,
};
use infoplane_core::DataMatrix;

use crate::config::RunConfig;
use crate::{out_dir, write_csv, write_json, Outcome};

pub const TRAJECTORY_FILE: &str = "trajectory.csv";
pub const LOSS_FILE: &str = "losses.csv";
pub const METADATA_FILE: &str = "metadata.json";
pub const CHECKPOINT_FILE: &str = "checkpoint.json";
pub const SWEEP_FILE: &str = "sweep.csv";
pub const SWEEP_SUMMARY_FILE: &str = "sweep_summary.json";

/// Bottleneck sizes swept when none are configured.
pub const DEFAULT_KS: [usize; 10] = [1, 2, 4, 8, 12, 13, 16, 24, 32, 36];

const TRAIN_STEMS: [&str; 2] = ["train-images-idx3-ubyte", "train-images.idx3-ubyte"];
const TEST_STEMS: [&str; 2] = ["t10k-images-idx3-ubyte", "t10k-images.idx3-ubyte"];

fn find_file(dir: &Path, stems: &[&str]) -> Result<PathBuf> {
    stems
        .iter()
        .flat_map(|s| [format!("{s}.gz"), s.to_string()])
        .map(|name| dir.join(name))
        .find(|p| p.is_file())
        .with_context(|| format!("no {}[.gz] in {}", stems[0], dir.display()))
}

fn take(ds: Dataset, n: Option<usize>) -> Result<Dataset> {
    match n {
        Some(n) if n != ds.len() => Ok(ds.head(n)?),
        _ => Ok(ds),
    }
}

/// Training and probe images, truncated to the configured counts.
pub fn load_mnist(cfg: &RunConfig) -> Result<(DataMatrix, DataMatrix, DatasetInfo)> {
    let dir = cfg.data_dir()?;
    let (train_n, test_n) = cfg.image_counts();
    let train = take(
        load_mnist_idx(&find_file(&dir, &TRAIN_STEMS)?, Split::Train)?,
        train_n,
    )?;
    let test = take(
        load_mnist_idx(&find_file(&dir, &TEST_STEMS)?, Split::Test)?,
        test_n,
    )?;
    let info = DatasetInfo {
        source: dir.display().to_string(),
        train_images: train.len(),
        test_images: test.len(),
    };
    Ok((train.features, test.features, info))
}

/// Trains one autoencoder and writes its trajectory, losses and metadata.
/// A diverged run also dumps the model for inspection.
pub fn cmd_train(cfg: &RunConfig, json: bool, stdout: &mut dyn Write) -> Result<Outcome> {
    let config = cfg.ip_run_config()?;
    let (train, test, info) = load_mnist(cfg)?;
    let dir = out_dir(cfg)?;
    let run = run_ip_training(&config, &train, &test)?;

    let path = dir.join(TRAJECTORY_FILE);
    let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
    let mut out = BufWriter::new(file);
    write_trajectory_csv(
        &mut out,
        &run.trajectory,
        config.smoothing_span_checkpoints(),
        cfg.log_points.unwrap_or(DEFAULT_LOG_POINTS),
    )?;
    out.flush()?;
    write_csv(
        &dir.join(LOSS_FILE),
        &["iteration", "loss"],
        run.losses
            .iter()
            .enumerate()
            .map(|(i, l)| [i.to_string(), format_sig9(*l)]),
    )?;
    let mut metadata = RunMetadata::new(&config, &run);
    metadata.dataset = Some(info);
    write_json(&dir.join(METADATA_FILE), &metadata)?;

    let outcome = match &run.status {
        RunStatus::Completed => Outcome::Completed,
        RunStatus::Diverged { iteration, message } => {
            let ckpt = dir.join(CHECKPOINT_FILE);
            run.model.save_json(&ckpt)?;
            eprintln!(
                "training diverged at iteration {iteration}: {message}; model saved to {}",
                ckpt.display()
            );
            Outcome::Diverged
        }
        RunStatus::Failed { message } => bail!("training failed: {message}"),
    };
    if json {
        writeln!(stdout, "{}", serde_json::to_string(&metadata)?)?;
    } else {
        writeln!(
            stdout,
            "K={} status={} iterations={} M={} bits",
            config.architecture.bottleneck,
            run.status.label(),
            run.losses.len(),
            format_sig9(run.input_information)
        )?;
        writeln!(stdout, "layer  I(X;T)  I(T;X')")?;
        for v in &run.final_values {
            writeln!(
                stdout,
                "{:<5}  {}  {}",
                v.layer_id,
                format_sig9(v.input_mi),
                format_sig9(v.output_mi)
            )?;
        }
        writeln!(
            stdout,
            "DPI violations: {}, infeasible points: {}",
            run.dpi_violations.len(),
            run.feasibility_violations.len()
        )?;
        writeln!(stdout, "outputs in {}", dir.display())?;
    }
    Ok(outcome)
}

/// Sweep settings: the training config plus the K list and scan thresholds.
pub fn sweep_config(cfg: &RunConfig) -> Result<SweepConfig> {
    let mut sweep = SweepConfig::new(
        cfg.ks.clone().unwrap_or_else(|| DEFAULT_KS.to_vec()),
        cfg.ip_run_config()?,
    );
    if let Some(t) = cfg.gap_threshold {
        sweep.gap_threshold = t;
    }
    if let Some(t) = cfg.monotone_tolerance {
        sweep.monotone_tolerance = t;
    }
    if !(sweep.gap_threshold > 0.0 && sweep.monotone_tolerance >= 0.0) {
        bail!("gap_threshold must be positive and monotone_tolerance non-negative");
    }
    Ok(sweep)
}

pub const SWEEP_HEADER: [&str; 8] = [
    "K",
    "layer_id",
    "input_mi_bits",
    "output_mi_bits",
    "mean_variance",
    "encoder_gap_bits",
    "status",
    "knee_k",
];

/// One row per (K, layer); a K without results gets a single row with an
/// empty layer id.
pub fn sweep_records(result: &SweepResult) -> Vec<[String; 8]> {
    let knee = result.knee.map(|k| k.to_string()).unwrap_or_default();
    let mut out = Vec::new();
    for row in &result.rows {
        let common = |layer: &str, x: f64, y: f64, v: f64| {
            [
                row.k.to_string(),
                layer.to_string(),
                format_sig9(x),
                format_sig9(y),
                format_sig9(v),
                format_sig9(row.encoder_gap),
                row.status.label().to_string(),
                knee.clone(),
            ]
        };
        if row.final_values.is_empty() {
            out.push(common("", f64::NAN, f64::NAN, f64::NAN));
        }
        for v in &row.final_values {
            out.push(common(
                &v.layer_id,
                v.input_mi,
                v.output_mi,
                v.mean_variance,
            ));
        }
    }
    out
}

#[derive(Serialize)]
struct SweepSummary<'a> {
    schema_version: u32,
    dataset: DatasetInfo,
    config: &'a SweepConfig,
    result: &'a SweepResult,
}

/// Trains one network per K and writes the final-value table and summary.
pub fn cmd_sweep(cfg: &RunConfig, json: bool, stdout: &mut dyn Write) -> Result<Outcome> {
    let sweep = sweep_config(cfg)?;
    let (train, test, dataset) = load_mnist(cfg)?;
    let dir = out_dir(cfg)?;
    let result = bottleneck_sweep(&sweep, &train, &test)?;
    write_csv(&dir.join(SWEEP_FILE), &SWEEP_HEADER, sweep_records(&result))?;
    let summary = SweepSummary {
        schema_version: infoplane_core::ip::METADATA_SCHEMA_VERSION,
        dataset,
        config: &sweep,
        result: &result,
    };
    write_json(&dir.join(SWEEP_SUMMARY_FILE), &summary)?;
    if json {
        writeln!(stdout, "{}", serde_json::to_string(&summary)?)?;
    } else {
        writeln!(stdout, "K   status     mean I(T;X')  encoder gap")?;
        for row in &result.rows {
            writeln!(
                stdout,
                "{:<3} {:<10} {:<13} {}",
                row.k,
                row.status.label(),
                format_sig9(row.mean_output_mi),
                format_sig9(row.encoder_gap)
            )?;
        }
        match result.knee {
            Some(k) => writeln!(stdout, "knee: K={k}")?,
            None => writeln!(stdout, "knee: none below {} bits", sweep.gap_threshold)?,
        }
        writeln!(stdout, "outputs in {}", dir.display())?;
    }
    Ok(Outcome::Completed)
}
