use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::run::{FeasibilityViolation, IpRun, IpRunConfig, RunStatus};
use super::series::{logspace_subsample, smooth_hanning};
use super::theory::DpiViolation;
use super::{FinalLayerValue, IpTrajectory};
use crate::error::Result;
use crate::nets::Architecture;

/// Version of the run metadata JSON layout.
pub const METADATA_SCHEMA_VERSION: u32 = 1;

/// Checkpoints kept in the smoothed part of a trajectory export.
pub const DEFAULT_LOG_POINTS: usize = 100;

/// Formats like C's `%.9g`: nine significant digits, trailing zeros
/// removed, scientific notation for exponents below −4 or above 8.
pub fn format_sig9(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return if v.is_sign_negative() {
            "-0".into()
        } else {
            "0".into()
        };
    }
    let sci = format!("{v:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..9).contains(&exp) {
        let sign = if exp < 0 { '-' } else { '+' };
        return format!("{}e{sign}{:02}", trim_zeros(mantissa), exp.abs());
    }
    let decimals = (8 - exp) as usize;
    trim_zeros(&format!("{v:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Writes a trajectory as CSV. Raw rows (`smoothed = 0`) cover every
/// checkpoint; smoothed rows (`smoothed = 1`) hold each series after a
/// Hanning window of `span` checkpoints, at about `log_points`
/// log-spaced checkpoints.
pub fn write_trajectory_csv<W: Write>(
    mut out: W,
    trajectory: &IpTrajectory,
    span: usize,
    log_points: usize,
) -> Result<()> {
    writeln!(
        out,
        "iteration,layer_id,input_mi_bits,output_mi_bits,mean_variance,smoothed"
    )?;
    let checkpoints = trajectory.checkpoints();
    for c in checkpoints {
        for p in &c.points {
            writeln!(
                out,
                "{},{},{},{},{},0",
                p.iteration,
                p.layer_id,
                format_sig9(p.input_mi),
                format_sig9(p.output_mi),
                format_sig9(p.mean_variance)
            )?;
        }
    }
    if checkpoints.is_empty() {
        return Ok(());
    }

    let keep = logspace_subsample(log_points.max(2), checkpoints.len())?;
    let smoothed: Vec<[Vec<f64>; 3]> = (0..trajectory.layer_ids().len())
        .map(|l| {
            let series = trajectory.layer_series(l);
            let smooth = |f: fn(&super::IpPoint) -> f64| {
                smooth_hanning(&series.iter().map(|p| f(p)).collect::<Vec<_>>(), span)
            };
            Ok([
                smooth(|p| p.input_mi)?,
                smooth(|p| p.output_mi)?,
                smooth(|p| p.mean_variance)?,
            ])
        })
        .collect::<Result<_>>()?;
    for &c in &keep {
        for (l, id) in trajectory.layer_ids().iter().enumerate() {
            let [x, y, v] = &smoothed[l];
            writeln!(
                out,
                "{},{},{},{},{},1",
                checkpoints[c].iteration,
                id,
                format_sig9(x[c]),
                format_sig9(y[c]),
                format_sig9(v[c])
            )?;
        }
    }
    Ok(())
}

/// JSON sidecar describing a recorded run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub schema_version: u32,
    pub bottleneck: usize,
    pub rule: String,
    pub gamma: Option<f64>,
    pub gamma_overrides: BTreeMap<String, f64>,
    pub alpha: f64,
    pub seed: u64,
    pub architecture: Architecture,
    pub cadence: usize,
    pub smoothing_span_checkpoints: usize,
    pub status: RunStatus,
    pub iterations: usize,
    pub checkpoints: usize,
    pub final_loss: Option<f64>,
    /// `M`, the probe-averaged `Î(X;X)` in bits.
    pub input_information: f64,
    pub final_values: Vec<FinalLayerValue>,
    pub dpi_violations: Vec<DpiViolation>,
    pub feasibility_violations: Vec<FeasibilityViolation>,
    /// The complete configuration the run was started with.
    pub config: IpRunConfig,
    #[serde(default)]
    pub dataset: Option<DatasetInfo>,
}

/// Where the training and probe images came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetInfo {
    pub source: String,
    pub train_images: usize,
    pub test_images: usize,
}

impl RunMetadata {
    pub fn new(config: &IpRunConfig, run: &IpRun) -> Self {
        Self {
            schema_version: METADATA_SCHEMA_VERSION,
            bottleneck: config.architecture.bottleneck,
            rule: config.rules.base.name().to_string(),
            gamma: config.rules.base.gamma(),
            gamma_overrides: config.rules.gamma_overrides.clone(),
            alpha: config.settings.alpha(),
            seed: config.seed,
            architecture: config.architecture.clone(),
            cadence: config.cadence,
            smoothing_span_checkpoints: config.smoothing_span_checkpoints(),
            status: run.status.clone(),
            iterations: run.losses.len(),
            checkpoints: run.trajectory.checkpoints().len(),
            final_loss: run.losses.last().copied(),
            input_information: run.input_information,
            final_values: run.final_values.clone(),
            dpi_violations: run.dpi_violations.clone(),
            feasibility_violations: run.feasibility_violations.clone(),
            config: config.clone(),
            dataset: None,
        }
    }
}
