use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::IpPoint;
use crate::error::{Error, Result};
use crate::mi::{mutual_information_prepared, EntropySettings, PreparedVariable, WidthRule};
use crate::nets::{Autoencoder, LayerActivations};
use crate::numkit::{column_stats, DataMatrix};

/// Identifier used for the network input in γ override maps.
pub const INPUT_LAYER_ID: &str = "X";
/// Identifier used for the reconstruction in γ override maps.
pub const OUTPUT_LAYER_ID: &str = "X'";

/// Anything that maps an input batch to per-layer activations.
pub trait ActivationSource: Sync {
    fn layer_ids(&self) -> Vec<String>;
    fn activations(&self, x: &DataMatrix) -> Result<LayerActivations>;
}

impl ActivationSource for Autoencoder {
    fn layer_ids(&self) -> Vec<String> {
        self.architecture().hidden_layer_ids()
    }

    fn activations(&self, x: &DataMatrix) -> Result<LayerActivations> {
        self.forward(x)
    }
}

/// Width rule per variable: a base rule plus γ overrides keyed by layer id
/// (`X`, `E1`, …, `Z`, …, `X'`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerRules {
    pub base: WidthRule,
    #[serde(default)]
    pub gamma_overrides: BTreeMap<String, f64>,
}

impl LayerRules {
    pub fn uniform(base: WidthRule) -> Self {
        Self {
            base,
            gamma_overrides: BTreeMap::new(),
        }
    }

    pub fn with_override(mut self, layer: impl Into<String>, gamma: f64) -> Self {
        self.gamma_overrides.insert(layer.into(), gamma);
        self
    }

    pub fn rule_for(&self, layer: &str) -> Result<WidthRule> {
        match self.gamma_overrides.get(layer) {
            Some(&gamma) => self.base.with_gamma(gamma),
            None => Ok(self.base.clone()),
        }
    }
}

/// Held-out probe batches with their input Gram matrices prepared once.
#[derive(Debug, Clone)]
pub struct ProbeSet {
    batches: Vec<DataMatrix>,
    inputs: Vec<PreparedVariable>,
    rules: LayerRules,
    settings: EntropySettings,
}

impl ProbeSet {
    pub fn new(
        batches: Vec<DataMatrix>,
        rules: LayerRules,
        settings: EntropySettings,
    ) -> Result<Self> {
        if batches.is_empty() {
            return Err(Error::InvalidParameter("no probe batches".into()));
        }
        let input_rule = rules.rule_for(INPUT_LAYER_ID)?;
        let inputs = batches
            .par_iter()
            .map(|b| input_rule.prepare(b, &settings))
            .collect::<Result<Vec<_>>>()
            .map_err(|e| e.in_layer(INPUT_LAYER_ID))?;
        Ok(Self {
            batches,
            inputs,
            rules,
            settings,
        })
    }

    pub fn batches(&self) -> &[DataMatrix] {
        &self.batches
    }

    pub fn rules(&self) -> &LayerRules {
        &self.rules
    }

    pub fn settings(&self) -> &EntropySettings {
        &self.settings
    }

    /// `M = Î(X;X)`, averaged over the probe batches.
    pub fn input_information(&self) -> Result<f64> {
        let values = self
            .inputs
            .par_iter()
            .map(|x| mutual_information_prepared(x, x, &self.settings))
            .collect::<Result<Vec<_>>>()?;
        Ok(values.iter().sum::<f64>() / values.len() as f64)
    }
}

/// Measurements of one layer on one probe batch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LayerMeasurement {
    pub input_mi: f64,
    pub output_mi: f64,
    pub mean_variance: f64,
}

/// Measures every hidden layer of `source` on probe batch `index`.
pub fn record_batch(
    source: &dyn ActivationSource,
    probes: &ProbeSet,
    index: usize,
) -> Result<Vec<LayerMeasurement>> {
    let x = &probes.batches[index];
    let px = &probes.inputs[index];
    let settings = &probes.settings;
    let acts = source.activations(x)?;
    let ids = source.layer_ids();
    if ids.len() != acts.hidden.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} layer ids for {} hidden layers",
            ids.len(),
            acts.hidden.len()
        )));
    }
    let out_rule = probes.rules.rule_for(OUTPUT_LAYER_ID)?;
    let pout = out_rule
        .prepare(&acts.output, settings)
        .map_err(|e| e.in_layer(OUTPUT_LAYER_ID))?;

    ids.iter()
        .zip(&acts.hidden)
        .map(|(id, t)| {
            let measure = || -> Result<LayerMeasurement> {
                let pt = probes.rules.rule_for(id)?.prepare(t, settings)?;
                let (_, stds) = column_stats(t);
                Ok(LayerMeasurement {
                    input_mi: mutual_information_prepared(px, &pt, settings)?,
                    output_mi: mutual_information_prepared(&pt, &pout, settings)?,
                    mean_variance: stds.iter().map(|s| s * s).sum::<f64>() / stds.len() as f64,
                })
            };
            measure().map_err(|e| e.in_layer(id.clone()))
        })
        .collect()
}

/// Measures every hidden layer, averaging over all probe batches. Batches
/// are processed in parallel and reduced in batch order.
pub fn record_checkpoint(
    source: &dyn ActivationSource,
    probes: &ProbeSet,
    iteration: usize,
) -> Result<Vec<IpPoint>> {
    let per_batch = (0..probes.batches.len())
        .into_par_iter()
        .map(|b| record_batch(source, probes, b))
        .collect::<Result<Vec<_>>>()?;
    let count = per_batch.len() as f64;
    Ok(source
        .layer_ids()
        .into_iter()
        .enumerate()
        .map(|(l, layer_id)| {
            let mean = |f: fn(&LayerMeasurement) -> f64| {
                per_batch.iter().map(|b| f(&b[l])).sum::<f64>() / count
            };
            IpPoint {
                layer_id,
                iteration,
                input_mi: mean(|m| m.input_mi),
                output_mi: mean(|m| m.output_mi),
                mean_variance: mean(|m| m.mean_variance),
            }
        })
        .collect())
}
