//! Information planes of autoencoders.
//!
//! Every hidden layer `T` is tracked through its input MI `Î(X;T)` and its
//! output MI `Î(T;X')` over training, together with the mean per-unit
//! variance of its activations.

mod export;
mod record;
mod run;
mod series;
mod theory;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use export::{
    format_sig9, write_trajectory_csv, DatasetInfo, RunMetadata, DEFAULT_LOG_POINTS,
    METADATA_SCHEMA_VERSION,
};
pub use record::{
    record_batch, record_checkpoint, ActivationSource, LayerMeasurement, LayerRules, ProbeSet,
    INPUT_LAYER_ID, OUTPUT_LAYER_ID,
};
pub use run::{
    bottleneck_sweep, run_ip_training, FeasibilityViolation, IpRun, IpRunConfig, RunStatus,
    SweepConfig, SweepResult, SweepRow, DESK_TEST, DESK_TRAIN,
};
pub use series::{logspace_subsample, smooth_hanning};
pub use theory::{
    dpi_report, feasible_region_check, oracle_points, theoretical_convergence, ConvergenceTargets,
    DpiViolation, Interval, LayerRole, LayerTarget, TheoreticalIp,
};

/// One layer at one iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IpPoint {
    pub layer_id: String,
    pub iteration: usize,
    /// `Î(X;T)` in bits.
    pub input_mi: f64,
    /// `Î(T;X')` in bits.
    pub output_mi: f64,
    pub mean_variance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IpCheckpoint {
    pub iteration: usize,
    pub points: Vec<IpPoint>,
}

/// Per-layer series over a shared checkpoint grid.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IpTrajectory {
    layer_ids: Vec<String>,
    checkpoints: Vec<IpCheckpoint>,
}

/// Final value of one layer, averaged over the last few checkpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinalLayerValue {
    pub layer_id: String,
    pub input_mi: f64,
    pub output_mi: f64,
    pub mean_variance: f64,
}

impl IpTrajectory {
    pub fn new(layer_ids: Vec<String>) -> Self {
        Self {
            layer_ids,
            checkpoints: Vec::new(),
        }
    }

    pub fn layer_ids(&self) -> &[String] {
        &self.layer_ids
    }

    pub fn checkpoints(&self) -> &[IpCheckpoint] {
        &self.checkpoints
    }

    pub fn iterations(&self) -> Vec<usize> {
        self.checkpoints.iter().map(|c| c.iteration).collect()
    }

    /// Appends a checkpoint; it must cover exactly the trajectory's layers,
    /// in order, at a strictly later iteration.
    pub fn push(&mut self, checkpoint: IpCheckpoint) -> Result<()> {
        let ids_match = checkpoint.points.len() == self.layer_ids.len()
            && checkpoint
                .points
                .iter()
                .zip(&self.layer_ids)
                .all(|(p, id)| &p.layer_id == id && p.iteration == checkpoint.iteration);
        if !ids_match {
            return Err(Error::InvalidParameter(format!(
                "checkpoint at iteration {} does not match the layer grid",
                checkpoint.iteration
            )));
        }
        if let Some(last) = self.checkpoints.last() {
            if checkpoint.iteration <= last.iteration {
                return Err(Error::InvalidParameter(format!(
                    "checkpoint iteration {} does not follow {}",
                    checkpoint.iteration, last.iteration
                )));
            }
        }
        self.checkpoints.push(checkpoint);
        Ok(())
    }

    /// The series of one layer, by position in [`layer_ids`](Self::layer_ids).
    pub fn layer_series(&self, layer: usize) -> Vec<&IpPoint> {
        self.checkpoints.iter().map(|c| &c.points[layer]).collect()
    }

    /// Per-layer means over the last `window` checkpoints.
    pub fn final_values(&self, window: usize) -> Vec<FinalLayerValue> {
        if self.checkpoints.is_empty() {
            return Vec::new();
        }
        let take = window.max(1).min(self.checkpoints.len());
        let tail = &self.checkpoints[self.checkpoints.len() - take..];
        self.layer_ids
            .iter()
            .enumerate()
            .map(|(l, id)| {
                let mean = |f: fn(&IpPoint) -> f64| {
                    tail.iter().map(|c| f(&c.points[l])).sum::<f64>() / take as f64
                };
                FinalLayerValue {
                    layer_id: id.clone(),
                    input_mi: mean(|p| p.input_mi),
                    output_mi: mean(|p| p.output_mi),
                    mean_variance: mean(|p| p.mean_variance),
                }
            })
            .collect()
    }
}
