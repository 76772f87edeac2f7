//! Experiment runner: correlated Gaussians, autoencoder information planes,
//! bottleneck sweeps and single estimates, driven by JSON configs.

pub mod config;
pub mod estimate;
pub mod gaussians;
pub mod train;

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context, Result};
use clap::{Args, Parser, Subcommand};

pub use config::{Preset, RuleKind, RunConfig, DATA_DIR_ENV};

/// Output directory when neither `--out` nor `out_dir` is given.
pub const DEFAULT_OUT_DIR: &str = "infoplane-out";

#[derive(Debug, Parser)]
#[command(
    name = "infoplane",
    version,
    about = "Information-plane analysis with matrix-based Rényi mutual information"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// JSON run configuration; flags override its fields.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Print a machine-readable JSON summary on stdout.
    #[arg(long, global = true)]
    pub json: bool,
    /// Rényi order.
    #[arg(long, global = true)]
    pub alpha: Option<f64>,
    /// Variance floor of the per-dimension normalization.
    #[arg(long, global = true)]
    pub epsilon: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimated versus analytic MI of correlated Gaussian pairs.
    Gaussians(GaussiansArgs),
    /// Train one autoencoder and record its information plane.
    Train(TrainArgs),
    /// Train one autoencoder per bottleneck size.
    Sweep(SweepArgs),
    /// Estimate the MI between two data files.
    Estimate(EstimateArgs),
}

#[derive(Debug, Args, Default)]
pub struct GaussiansArgs {
    /// Explicit correlation grid (comma-separated).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub rhos: Option<Vec<f64>>,
    #[arg(long)]
    pub rho_points: Option<usize>,
    #[arg(long)]
    pub rho_max: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    pub dims: Option<Vec<usize>>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub runs: Option<usize>,
    #[arg(long)]
    pub new_gamma: Option<f64>,
    #[arg(long)]
    pub old_gamma: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    pub nsweep_samples: Option<Vec<usize>>,
    #[arg(long)]
    pub nsweep_dims: Option<usize>,
}

#[derive(Debug, Args, Default)]
pub struct TrainingArgs {
    /// MNIST directory holding the IDX image files.
    #[arg(long)]
    pub data_dir: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    #[arg(long, value_enum)]
    pub rule: Option<RuleKind>,
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Per-layer γ, e.g. `Z=25`; repeatable.
    #[arg(long = "gamma-override", value_parser = parse_override)]
    pub gamma_overrides: Vec<(String, f64)>,
    #[arg(long, value_delimiter = ',')]
    pub encoder_widths: Option<Vec<usize>>,
    #[arg(long)]
    pub train_images: Option<usize>,
    #[arg(long)]
    pub test_images: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub momentum: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Iterations between recorded checkpoints.
    #[arg(long)]
    pub cadence: Option<usize>,
    #[arg(long)]
    pub probe_batches: Option<usize>,
    #[arg(long)]
    pub probe_size: Option<usize>,
    /// Hanning window length in iterations.
    #[arg(long)]
    pub smoothing_span: Option<usize>,
    /// Final checkpoints averaged into the reported final values.
    #[arg(long)]
    pub final_window: Option<usize>,
    #[arg(long)]
    pub feasibility_slack: Option<f64>,
    #[arg(long)]
    pub dpi_tolerance: Option<f64>,
}

#[derive(Debug, Args, Default)]
pub struct TrainArgs {
    /// Bottleneck size.
    #[arg(long)]
    pub k: Option<usize>,
    /// Log-spaced checkpoints kept in the smoothed series.
    #[arg(long)]
    pub log_points: Option<usize>,
    #[command(flatten)]
    pub training: TrainingArgs,
}

#[derive(Debug, Args, Default)]
pub struct SweepArgs {
    /// Bottleneck sizes (comma-separated).
    #[arg(long, value_delimiter = ',')]
    pub ks: Option<Vec<usize>>,
    #[arg(long)]
    pub gap_threshold: Option<f64>,
    #[arg(long)]
    pub monotone_tolerance: Option<f64>,
    #[command(flatten)]
    pub training: TrainingArgs,
}

#[derive(Debug, Args, Default)]
pub struct EstimateArgs {
    /// First variable: CSV (one sample per row) or IDX.
    #[arg(long)]
    pub x: Option<PathBuf>,
    /// Second variable, same number of samples as `x`.
    #[arg(long)]
    pub y: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub rule: Option<RuleKind>,
    #[arg(long)]
    pub gamma: Option<f64>,
}

fn parse_override(s: &str) -> Result<(String, f64)> {
    let (id, gamma) = s
        .split_once('=')
        .ok_or_else(|| anyhow!("expected LAYER=GAMMA, got {s:?}"))?;
    let gamma: f64 = gamma
        .trim()
        .parse()
        .with_context(|| format!("bad gamma in {s:?}"))?;
    Ok((id.trim().to_string(), gamma))
}

impl TrainingArgs {
    fn apply(&self, c: &mut RunConfig) {
        c.data_dir = self.data_dir.clone();
        c.preset = self.preset;
        c.rule = self.rule;
        c.gamma = self.gamma;
        if !self.gamma_overrides.is_empty() {
            c.gamma_overrides = Some(
                self.gamma_overrides
                    .iter()
                    .cloned()
                    .collect::<BTreeMap<_, _>>(),
            );
        }
        c.encoder_widths = self.encoder_widths.clone();
        c.train_images = self.train_images;
        c.test_images = self.test_images;
        c.learning_rate = self.learning_rate;
        c.momentum = self.momentum;
        c.batch_size = self.batch_size;
        c.epochs = self.epochs;
        c.cadence = self.cadence;
        c.probe_batches = self.probe_batches;
        c.probe_size = self.probe_size;
        c.smoothing_span = self.smoothing_span;
        c.final_window = self.final_window;
        c.feasibility_slack = self.feasibility_slack;
        c.dpi_tolerance = self.dpi_tolerance;
    }
}

impl Cli {
    /// The fields set on the command line, as a config layer.
    pub fn flag_config(&self) -> RunConfig {
        let mut c = RunConfig {
            seed: self.seed,
            out_dir: self.out.clone(),
            alpha: self.alpha,
            epsilon: self.epsilon,
            ..RunConfig::default()
        };
        match &self.command {
            Command::Gaussians(a) => {
                c.rhos = a.rhos.clone();
                c.rho_points = a.rho_points;
                c.rho_max = a.rho_max;
                c.dims = a.dims.clone();
                c.samples = a.samples;
                c.runs = a.runs;
                c.new_gamma = a.new_gamma;
                c.old_gamma = a.old_gamma;
                c.nsweep_samples = a.nsweep_samples.clone();
                c.nsweep_dims = a.nsweep_dims;
            }
            Command::Train(a) => {
                a.training.apply(&mut c);
                c.bottleneck = a.k;
                c.log_points = a.log_points;
            }
            Command::Sweep(a) => {
                a.training.apply(&mut c);
                c.ks = a.ks.clone();
                c.gap_threshold = a.gap_threshold;
                c.monotone_tolerance = a.monotone_tolerance;
            }
            Command::Estimate(a) => {
                c.x = a.x.clone();
                c.y = a.y.clone();
                c.rule = a.rule;
                c.gamma = a.gamma;
            }
        }
        c
    }

    /// Defaults, then the config file, then the flags.
    pub fn merged_config(&self) -> Result<RunConfig> {
        let file = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        Ok(file.overlay(&self.flag_config()))
    }
}

/// How a command ended when it did not fail outright.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Completed,
    /// Training diverged; a model checkpoint was written.
    Diverged,
}

impl Outcome {
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Completed => 0,
            Outcome::Diverged => 2,
        }
    }
}

/// Runs the parsed command, writing human or JSON summaries to `stdout`.
pub fn run(cli: &Cli, stdout: &mut dyn Write) -> Result<Outcome> {
    let cfg = cli.merged_config()?;
    match &cli.command {
        Command::Gaussians(_) => gaussians::cmd_gaussians(&cfg, cli.json, stdout),
        Command::Train(_) => train::cmd_train(&cfg, cli.json, stdout),
        Command::Sweep(_) => train::cmd_sweep(&cfg, cli.json, stdout),
        Command::Estimate(_) => estimate::cmd_estimate(&cfg, cli.json, stdout),
    }
}

/// The configured output directory, created if missing.
pub fn out_dir(cfg: &RunConfig) -> Result<PathBuf> {
    let dir = cfg
        .out_dir
        .clone()
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR));
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir)
}

/// Writes `records` after `header` as CSV.
pub fn write_csv<I, R>(path: &Path, header: &[&str], records: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .with_context(|| format!("creating {}", path.display()))?;
    w.write_record(header)?;
    for r in records {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("infoplane").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn flags_map_to_config_fields() {
        let cli = parse(&[
            "train",
            "--k",
            "32",
            "--rule",
            "old",
            "--gamma-override",
            "Z=25",
            "--epochs",
            "3",
            "--seed",
            "7",
        ]);
        let c = cli.flag_config();
        assert_eq!(c.bottleneck, Some(32));
        assert_eq!(c.rule, Some(RuleKind::Old));
        assert_eq!(c.gamma_overrides.unwrap()["Z"], 25.0);
        assert_eq!(c.epochs, Some(3));
        assert_eq!(c.seed, Some(7));
    }

    #[test]
    fn lists_and_negative_numbers() {
        let cli = parse(&["gaussians", "--rhos", "-0.5,0,0.5", "--dims", "10,100"]);
        let c = cli.flag_config();
        assert_eq!(c.rhos, Some(vec![-0.5, 0.0, 0.5]));
        assert_eq!(c.dims, Some(vec![10, 100]));
        let cli = parse(&["sweep", "--ks", "2,8,32"]);
        assert_eq!(cli.flag_config().ks, Some(vec![2, 8, 32]));
    }

    #[test]
    fn config_file_is_overridden_by_flags() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        fs::write(&path, r#"{"epochs": 4, "seed": 1, "bottleneck": 8}"#).unwrap();
        let cli = parse(&["train", "--config", path.to_str().unwrap(), "--seed", "5"]);
        let c = cli.merged_config().unwrap();
        assert_eq!(
            (c.epochs, c.seed, c.bottleneck),
            (Some(4), Some(5), Some(8))
        );
    }

    #[test]
    fn bad_override_rejected() {
        assert!(Cli::try_parse_from(["infoplane", "train", "--gamma-override", "Z25"]).is_err());
    }
}
