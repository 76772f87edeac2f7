use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::record::{record_checkpoint, LayerRules, ProbeSet, INPUT_LAYER_ID, OUTPUT_LAYER_ID};
use super::theory::{dpi_report, DpiViolation};
use super::{FinalLayerValue, IpCheckpoint, IpPoint, IpTrajectory};
use crate::data::{batch_iterator, derive_seed, sample_probe_batches};
use crate::error::{Error, Result};
use crate::mi::{EntropySettings, WidthRule};
use crate::nets::{
    init_autoencoder, Architecture, Autoencoder, DEFAULT_LEARNING_RATE, DEFAULT_MOMENTUM,
};
use crate::numkit::DataMatrix;

const STREAM_INIT: u64 = 1;
const STREAM_PROBE: u64 = 2;
const STREAM_SHUFFLE: u64 = 3;

/// Training images in the desk-scale preset.
pub const DESK_TRAIN: usize = 2000;
/// Test images in the desk-scale preset.
pub const DESK_TEST: usize = 1024;

/// Everything that determines one recorded training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IpRunConfig {
    pub architecture: Architecture,
    pub learning_rate: f64,
    pub momentum: f64,
    pub batch_size: usize,
    pub epochs: usize,
    /// Iterations between checkpoints.
    pub cadence: usize,
    pub probe_batches: usize,
    pub probe_size: usize,
    pub rules: LayerRules,
    pub settings: EntropySettings,
    pub seed: u64,
    /// Smoothing span in iterations; divided by the cadence on export.
    pub smoothing_span: usize,
    /// Checkpoints averaged into the final values.
    pub final_window: usize,
    /// Bits a point may leave the feasible triangle before it is reported.
    pub feasibility_slack: f64,
    /// Bits of slack for the DPI report on the final values.
    pub dpi_tolerance: f64,
}

impl IpRunConfig {
    /// Full-scale training: 100 epochs of batches of 100, new rule with
    /// γ = 0.8 on every layer.
    pub fn full(bottleneck: usize) -> Self {
        Self {
            architecture: Architecture::mnist(bottleneck),
            learning_rate: DEFAULT_LEARNING_RATE,
            momentum: DEFAULT_MOMENTUM,
            batch_size: 100,
            epochs: 100,
            cadence: 10,
            probe_batches: 10,
            probe_size: 512,
            rules: LayerRules::uniform(WidthRule::new_rule(0.8).expect("valid gamma")),
            settings: EntropySettings::default(),
            seed: 0,
            smoothing_span: 500,
            final_window: 5,
            feasibility_slack: 0.5,
            dpi_tolerance: 0.1,
        }
    }

    /// Old rule with γ = 5, and γ = 25 on the bottleneck.
    pub fn replication(bottleneck: usize) -> Self {
        Self {
            rules: LayerRules::uniform(WidthRule::old(5.0).expect("valid gamma"))
                .with_override("Z", 25.0),
            ..Self::full(bottleneck)
        }
    }

    /// Ten epochs, for use with [`DESK_TRAIN`] / [`DESK_TEST`] images.
    pub fn desk(bottleneck: usize) -> Self {
        Self {
            epochs: 10,
            ..Self::full(bottleneck)
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.architecture.validate()?;
        EntropySettings::new(self.settings.alpha())?;
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::InvalidParameter(
                "learning_rate must be positive".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::InvalidParameter("momentum must be in [0, 1)".into()));
        }
        for (name, v) in [
            ("feasibility_slack", self.feasibility_slack),
            ("dpi_tolerance", self.dpi_tolerance),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be non-negative"
                )));
            }
        }
        let counts = [
            ("batch_size", self.batch_size),
            ("cadence", self.cadence),
            ("probe_batches", self.probe_batches),
            ("probe_size", self.probe_size),
            ("smoothing_span", self.smoothing_span),
            ("final_window", self.final_window),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(Error::InvalidParameter(format!("{name} must be positive")));
            }
        }
        for id in self.rules.gamma_overrides.keys() {
            let known = id == INPUT_LAYER_ID
                || id == OUTPUT_LAYER_ID
                || self.architecture.hidden_layer_ids().contains(id);
            if !known {
                return Err(Error::InvalidParameter(format!(
                    "unknown layer id {id:?} in gamma overrides"
                )));
            }
        }
        Ok(())
    }

    /// Smoothing span measured in checkpoints.
    pub fn smoothing_span_checkpoints(&self) -> usize {
        (self.smoothing_span / self.cadence).max(1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RunStatus {
    Completed,
    Diverged {
        iteration: usize,
        message: String,
    },
    /// The run could not be carried out at all (sweeps only).
    Failed {
        message: String,
    },
}

impl RunStatus {
    pub fn is_completed(&self) -> bool {
        matches!(self, RunStatus::Completed)
    }

    pub fn label(&self) -> &'static str {
        match self {
            RunStatus::Completed => "completed",
            RunStatus::Diverged { .. } => "diverged",
            RunStatus::Failed { .. } => "failed",
        }
    }
}

/// A recorded point outside the feasible triangle by more than the slack.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityViolation {
    pub iteration: usize,
    pub layer_id: String,
    pub input_mi: f64,
    pub output_mi: f64,
    /// Distance outside the triangle, in bits.
    pub excess: f64,
}

#[derive(Debug, Clone)]
pub struct IpRun {
    pub trajectory: IpTrajectory,
    /// Pre-step training loss of every iteration.
    pub losses: Vec<f64>,
    pub status: RunStatus,
    pub model: Autoencoder,
    /// `M`, the probe-averaged `Î(X;X)`.
    pub input_information: f64,
    pub final_values: Vec<FinalLayerValue>,
    pub dpi_violations: Vec<DpiViolation>,
    pub feasibility_violations: Vec<FeasibilityViolation>,
}

impl IpRun {
    /// Mean output MI over layers of the final values.
    pub fn mean_final_output_mi(&self) -> f64 {
        mean(self.final_values.iter().map(|v| v.output_mi))
    }
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        sum / n as f64
    }
}

fn feasibility_excess(p: &IpPoint, m: f64) -> f64 {
    [-p.output_mi, p.output_mi - p.input_mi, p.input_mi - m]
        .into_iter()
        .fold(0.0, f64::max)
}

fn checkpoint(model: &Autoencoder, probes: &ProbeSet, iteration: usize) -> Result<IpCheckpoint> {
    Ok(IpCheckpoint {
        iteration,
        points: record_checkpoint(model, probes, iteration)?,
    })
}

fn is_non_finite(e: &Error) -> bool {
    match e {
        Error::NonFinite => true,
        Error::Layer { source, .. } => is_non_finite(source),
        _ => false,
    }
}

/// Records a checkpoint. Activations that overflow after training steps
/// mean the run diverged; that is reported as a status, not an error.
fn record_or_diverge(
    trajectory: &mut IpTrajectory,
    model: &Autoencoder,
    probes: &ProbeSet,
    iteration: usize,
) -> Result<Option<RunStatus>> {
    match checkpoint(model, probes, iteration) {
        Ok(c) => trajectory.push(c).map(|_| None),
        Err(e) if is_non_finite(&e) => Ok(Some(RunStatus::Diverged {
            iteration,
            message: e.to_string(),
        })),
        Err(e) => Err(e),
    }
}

/// Trains an autoencoder on `train` with SGD and momentum, recording the
/// information plane on probe batches drawn from `test` at iteration 0,
/// every `cadence` iterations, and after the last iteration.
///
/// Divergence ends training early; the run is still returned, with its
/// status set and the trajectory recorded so far.
pub fn run_ip_training(
    config: &IpRunConfig,
    train: &DataMatrix,
    test: &DataMatrix,
) -> Result<IpRun> {
    config.validate()?;
    let arch = &config.architecture;
    if train.cols() != arch.input_dim || test.cols() != arch.input_dim {
        return Err(Error::DimensionMismatch(format!(
            "data has {} / {} columns, network expects {}",
            train.cols(),
            test.cols(),
            arch.input_dim
        )));
    }
    let mut model = init_autoencoder(arch, derive_seed(config.seed, STREAM_INIT))?;
    let batches = sample_probe_batches(
        test,
        config.probe_batches,
        config.probe_size,
        derive_seed(config.seed, STREAM_PROBE),
    )?;
    let probes = ProbeSet::new(batches, config.rules.clone(), config.settings)?;
    let input_information = probes.input_information()?;

    let mut trajectory = IpTrajectory::new(arch.hidden_layer_ids());
    trajectory.push(checkpoint(&model, &probes, 0)?)?;
    let mut losses = Vec::new();
    let mut status = RunStatus::Completed;
    let shuffle_base = derive_seed(config.seed, STREAM_SHUFFLE);
    let mut iteration = 0;

    'epochs: for epoch in 0..config.epochs {
        for batch in batch_iterator(
            train,
            config.batch_size,
            derive_seed(shuffle_base, epoch as u64),
        )? {
            let step = model
                .sgd_momentum_step(&batch, config.learning_rate, config.momentum)
                .and_then(|loss| {
                    if loss.is_finite() {
                        Ok(loss)
                    } else {
                        Err(Error::Divergence(format!("loss {loss}")))
                    }
                });
            match step {
                Ok(loss) => losses.push(loss),
                Err(Error::Divergence(message)) => {
                    status = RunStatus::Diverged { iteration, message };
                    break 'epochs;
                }
                Err(e) => return Err(e),
            }
            iteration += 1;
            if iteration % config.cadence == 0 {
                if let Some(diverged) =
                    record_or_diverge(&mut trajectory, &model, &probes, iteration)?
                {
                    status = diverged;
                    break 'epochs;
                }
            }
        }
    }
    if status.is_completed() && iteration % config.cadence != 0 {
        if let Some(diverged) = record_or_diverge(&mut trajectory, &model, &probes, iteration)? {
            status = diverged;
        }
    }

    let final_values = trajectory.final_values(config.final_window);
    let final_points: Vec<IpPoint> = final_values
        .iter()
        .map(|v| IpPoint {
            layer_id: v.layer_id.clone(),
            iteration,
            input_mi: v.input_mi,
            output_mi: v.output_mi,
            mean_variance: v.mean_variance,
        })
        .collect();
    let dpi_violations = dpi_report(&final_points, config.dpi_tolerance);
    let feasibility_violations = trajectory
        .checkpoints()
        .iter()
        .flat_map(|c| &c.points)
        .filter_map(|p| {
            let excess = feasibility_excess(p, input_information);
            (excess > config.feasibility_slack).then(|| FeasibilityViolation {
                iteration: p.iteration,
                layer_id: p.layer_id.clone(),
                input_mi: p.input_mi,
                output_mi: p.output_mi,
                excess,
            })
        })
        .collect();

    Ok(IpRun {
        trajectory,
        losses,
        status,
        model,
        input_information,
        final_values,
        dpi_violations,
        feasibility_violations,
    })
}

/// Trainings over several bottleneck sizes sharing one base config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub ks: Vec<usize>,
    pub base: IpRunConfig,
    /// Input-MI gap (bits) below which the encoder counts as uncompressed.
    pub gap_threshold: f64,
    /// Allowed drop (bits) of the final output MI from one K to the next.
    pub monotone_tolerance: f64,
}

impl SweepConfig {
    pub fn new(ks: Vec<usize>, base: IpRunConfig) -> Self {
        Self {
            ks,
            base,
            gap_threshold: 0.3,
            monotone_tolerance: 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub k: usize,
    pub status: RunStatus,
    pub input_information: f64,
    pub final_values: Vec<FinalLayerValue>,
    /// Output MI averaged over the layers.
    pub mean_output_mi: f64,
    /// Spread of the final input MIs over the encoder layers and `Z`.
    pub encoder_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    /// One row per K, in increasing K.
    pub rows: Vec<SweepRow>,
    /// Smallest completed K whose encoder gap is below the threshold.
    pub knee: Option<usize>,
    pub output_monotone: bool,
    /// `(K_a, K_b, drop)` for consecutive completed Ks whose mean output MI
    /// drops by more than the tolerance.
    pub monotone_violations: Vec<(usize, usize, f64)>,
}

fn encoder_gap(values: &[FinalLayerValue]) -> f64 {
    let encoder: Vec<f64> = values
        .iter()
        .take_while(|v| v.layer_id != "Z")
        .chain(values.iter().filter(|v| v.layer_id == "Z"))
        .map(|v| v.input_mi)
        .collect();
    let hi = encoder.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = encoder.iter().copied().fold(f64::INFINITY, f64::min);
    hi - lo
}

/// Trains one network per bottleneck size, in parallel. A K that fails or
/// diverges is recorded with its status and left out of the knee and
/// monotonicity scans.
pub fn bottleneck_sweep(
    config: &SweepConfig,
    train: &DataMatrix,
    test: &DataMatrix,
) -> Result<SweepResult> {
    let mut ks = config.ks.clone();
    ks.sort_unstable();
    ks.dedup();
    if ks.is_empty() {
        return Err(Error::InvalidParameter("empty K list".into()));
    }
    let rows: Vec<SweepRow> = ks
        .par_iter()
        .map(|&k| {
            let mut run_config = config.base.clone();
            run_config.architecture.bottleneck = k;
            match run_ip_training(&run_config, train, test) {
                Ok(run) => SweepRow {
                    k,
                    mean_output_mi: run.mean_final_output_mi(),
                    encoder_gap: encoder_gap(&run.final_values),
                    status: run.status,
                    input_information: run.input_information,
                    final_values: run.final_values,
                },
                Err(e) => SweepRow {
                    k,
                    status: RunStatus::Failed {
                        message: e.to_string(),
                    },
                    input_information: f64::NAN,
                    final_values: Vec::new(),
                    mean_output_mi: f64::NAN,
                    encoder_gap: f64::NAN,
                },
            }
        })
        .collect();

    let completed: Vec<&SweepRow> = rows.iter().filter(|r| r.status.is_completed()).collect();
    let knee = completed
        .iter()
        .find(|r| r.encoder_gap < config.gap_threshold)
        .map(|r| r.k);
    let monotone_violations: Vec<(usize, usize, f64)> = completed
        .windows(2)
        .filter_map(|w| {
            let drop = w[0].mean_output_mi - w[1].mean_output_mi;
            (drop > config.monotone_tolerance).then_some((w[0].k, w[1].k, drop))
        })
        .collect();
    Ok(SweepResult {
        output_monotone: monotone_violations.is_empty(),
        rows,
        knee,
        monotone_violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn tiny(k: usize) -> IpRunConfig {
        IpRunConfig {
            architecture: Architecture {
                input_dim: 6,
                encoder_widths: vec![5],
                bottleneck: k,
            },
            batch_size: 8,
            epochs: 3,
            cadence: 2,
            probe_batches: 2,
            probe_size: 16,
            smoothing_span: 4,
            ..IpRunConfig::desk(k)
        }
    }

    fn blobs(rows: usize, seed: u64) -> DataMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values = (0..rows * 6).map(|_| rng.random::<f64>()).collect();
        DataMatrix::new(rows, 6, values).unwrap()
    }

    #[test]
    fn checkpoint_grid() {
        let run = run_ip_training(&tiny(2), &blobs(36, 1), &blobs(20, 2)).unwrap();
        // 4 iterations per epoch, 12 in total.
        assert_eq!(run.losses.len(), 12);
        assert_eq!(run.trajectory.iterations(), vec![0, 2, 4, 6, 8, 10, 12]);
        assert_eq!(run.status, RunStatus::Completed);
        assert_eq!(run.final_values.len(), 3);
        let odd = IpRunConfig {
            cadence: 5,
            ..tiny(2)
        };
        let run = run_ip_training(&odd, &blobs(36, 1), &blobs(20, 2)).unwrap();
        assert_eq!(run.trajectory.iterations(), vec![0, 5, 10, 12]);
    }

    #[test]
    fn zero_epochs_gives_initial_checkpoint() {
        let cfg = IpRunConfig {
            epochs: 0,
            ..tiny(2)
        };
        let run = run_ip_training(&cfg, &blobs(36, 1), &blobs(20, 2)).unwrap();
        assert_eq!(run.trajectory.iterations(), vec![0]);
        assert!(run.losses.is_empty());
    }

    #[test]
    fn rejects_unknown_override() {
        let mut cfg = tiny(2);
        cfg.rules = cfg.rules.with_override("E9", 1.0);
        assert!(run_ip_training(&cfg, &blobs(36, 1), &blobs(20, 2)).is_err());
    }

    #[test]
    fn divergence_is_reported() {
        let cfg = IpRunConfig {
            learning_rate: f64::MAX,
            ..tiny(2)
        };
        let run = run_ip_training(&cfg, &blobs(36, 1), &blobs(20, 2)).unwrap();
        assert!(
            matches!(run.status, RunStatus::Diverged { .. }),
            "{:?}",
            run.status
        );
    }

    #[test]
    fn sweep_single_k_matches_run() {
        let (train, test) = (blobs(36, 1), blobs(20, 2));
        let sweep = bottleneck_sweep(&SweepConfig::new(vec![2], tiny(2)), &train, &test).unwrap();
        let run = run_ip_training(&tiny(2), &train, &test).unwrap();
        assert_eq!(sweep.rows.len(), 1);
        assert_eq!(sweep.rows[0].final_values, run.final_values);
        assert!(sweep.output_monotone);
    }

    #[test]
    fn failed_k_does_not_stop_sweep() {
        let (train, test) = (blobs(36, 1), blobs(20, 2));
        let sweep =
            bottleneck_sweep(&SweepConfig::new(vec![3, 0, 1], tiny(2)), &train, &test).unwrap();
        let ks: Vec<usize> = sweep.rows.iter().map(|r| r.k).collect();
        assert_eq!(ks, vec![0, 1, 3]);
        assert_eq!(sweep.rows[0].status.label(), "failed");
        assert!(sweep.rows[1].status.is_completed());
    }

    #[test]
    fn encoder_gap_uses_encoder_and_bottleneck() {
        let v = |id: &str, x: f64| FinalLayerValue {
            layer_id: id.into(),
            input_mi: x,
            output_mi: 0.0,
            mean_variance: 0.0,
        };
        let values = vec![v("E1", 5.0), v("E2", 4.0), v("Z", 3.5), v("D1", 0.0)];
        assert_eq!(encoder_gap(&values), 1.5);
    }
}
