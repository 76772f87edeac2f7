//! JSON run configuration. Every field is optional; command-line flags win
//! over the file, and the file wins over built-in defaults.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use infoplane_core::ip::{IpRunConfig, LayerRules};
use infoplane_core::mi::{WidthRule, DEFAULT_EPSILON};
use infoplane_core::EntropySettings;

/// Environment variable naming the MNIST directory when no path is given.
pub const DATA_DIR_ENV: &str = "INFOPLANE_DATA_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum RuleKind {
    Old,
    New,
    Silverman,
}

/// Starting point for training settings before individual overrides.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// 2000 train / 1024 test images, 10 epochs, new rule γ = 0.8.
    Desk,
    /// Full data, 100 epochs, new rule γ = 0.8.
    Full,
    /// Full data, 100 epochs, old rule γ = 5 with γ = 25 on the bottleneck.
    Replication,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    pub alpha: Option<f64>,
    pub epsilon: Option<f64>,
    pub rule: Option<RuleKind>,
    pub gamma: Option<f64>,

    // Correlated Gaussians.
    pub rhos: Option<Vec<f64>>,
    pub rho_points: Option<usize>,
    pub rho_max: Option<f64>,
    pub dims: Option<Vec<usize>>,
    pub samples: Option<usize>,
    pub runs: Option<usize>,
    pub new_gamma: Option<f64>,
    pub old_gamma: Option<f64>,
    pub nsweep_samples: Option<Vec<usize>>,
    pub nsweep_dims: Option<usize>,

    // Autoencoder training and sweeps.
    pub data_dir: Option<PathBuf>,
    pub preset: Option<Preset>,
    pub train_images: Option<usize>,
    pub test_images: Option<usize>,
    pub bottleneck: Option<usize>,
    pub encoder_widths: Option<Vec<usize>>,
    pub gamma_overrides: Option<BTreeMap<String, f64>>,
    pub learning_rate: Option<f64>,
    pub momentum: Option<f64>,
    pub batch_size: Option<usize>,
    pub epochs: Option<usize>,
    pub cadence: Option<usize>,
    pub probe_batches: Option<usize>,
    pub probe_size: Option<usize>,
    pub smoothing_span: Option<usize>,
    pub final_window: Option<usize>,
    pub log_points: Option<usize>,
    pub feasibility_slack: Option<f64>,
    pub dpi_tolerance: Option<f64>,
    pub ks: Option<Vec<usize>>,
    pub gap_threshold: Option<f64>,
    pub monotone_tolerance: Option<f64>,

    // Single estimates.
    pub x: Option<PathBuf>,
    pub y: Option<PathBuf>,
}

macro_rules! overlay {
    ($base:ident, $top:ident, $($field:ident),* $(,)?) => {
        $( if $top.$field.is_some() { $base.$field = $top.$field.clone(); } )*
    };
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    /// Fields set in `top` replace those in `self`.
    pub fn overlay(mut self, top: &RunConfig) -> Self {
        let base = &mut self;
        overlay!(
            base,
            top,
            seed,
            out_dir,
            alpha,
            epsilon,
            rule,
            gamma,
            rhos,
            rho_points,
            rho_max,
            dims,
            samples,
            runs,
            new_gamma,
            old_gamma,
            nsweep_samples,
            nsweep_dims,
            data_dir,
            preset,
            train_images,
            test_images,
            bottleneck,
            encoder_widths,
            gamma_overrides,
            learning_rate,
            momentum,
            batch_size,
            epochs,
            cadence,
            probe_batches,
            probe_size,
            smoothing_span,
            final_window,
            log_points,
            feasibility_slack,
            dpi_tolerance,
            ks,
            gap_threshold,
            monotone_tolerance,
            x,
            y,
        );
        self
    }

    pub fn settings(&self) -> Result<EntropySettings> {
        Ok(EntropySettings::new(
            self.alpha.unwrap_or(infoplane_core::mi::DEFAULT_ALPHA),
        )?)
    }

    /// The width rule named by `rule`/`gamma`/`epsilon`, or `None` when no
    /// rule is configured.
    pub fn width_rule(&self, default_gamma: f64) -> Result<Option<WidthRule>> {
        let gamma = self.gamma.unwrap_or(default_gamma);
        let epsilon = self.epsilon.unwrap_or(DEFAULT_EPSILON);
        Ok(match self.rule {
            None => None,
            Some(RuleKind::Silverman) => Some(WidthRule::Silverman),
            Some(RuleKind::Old) => Some(WidthRule::old(gamma)?),
            Some(RuleKind::New) => Some(WidthRule::new_rule_with(gamma, epsilon, None)?),
        })
    }

    pub fn preset(&self) -> Preset {
        self.preset.unwrap_or(Preset::Desk)
    }

    /// Training settings: the preset, then every field set here.
    pub fn ip_run_config(&self) -> Result<IpRunConfig> {
        let k = self.bottleneck.unwrap_or(2);
        let mut c = match self.preset() {
            Preset::Desk => IpRunConfig::desk(k),
            Preset::Full => IpRunConfig::full(k),
            Preset::Replication => IpRunConfig::replication(k),
        };
        if let Some(widths) = &self.encoder_widths {
            c.architecture.encoder_widths = widths.clone();
        }
        if self.rule.is_some() || self.gamma.is_some() || self.epsilon.is_some() {
            let base = match self.width_rule(c.rules.base.gamma().unwrap_or(0.8))? {
                Some(rule) => rule,
                None => rebuild_rule(&c.rules.base, self.gamma, self.epsilon)?,
            };
            c.rules = LayerRules {
                base,
                gamma_overrides: c.rules.gamma_overrides,
            };
        }
        if let Some(overrides) = &self.gamma_overrides {
            c.rules.gamma_overrides = overrides.clone();
        }
        if let Some(alpha) = self.alpha {
            c.settings = EntropySettings::new(alpha)?;
        }
        macro_rules! copy {
            ($($field:ident),*) => { $( if let Some(v) = self.$field { c.$field = v; } )* };
        }
        copy!(
            learning_rate,
            momentum,
            batch_size,
            epochs,
            cadence,
            probe_batches,
            probe_size,
            smoothing_span,
            final_window,
            feasibility_slack,
            dpi_tolerance,
            seed
        );
        c.validate()?;
        Ok(c)
    }

    /// Image counts to load: the desk preset uses fixed subset sizes.
    pub fn image_counts(&self) -> (Option<usize>, Option<usize>) {
        use infoplane_core::ip::{DESK_TEST, DESK_TRAIN};
        let (train, test) = match self.preset() {
            Preset::Desk => (Some(DESK_TRAIN), Some(DESK_TEST)),
            Preset::Full | Preset::Replication => (None, None),
        };
        (self.train_images.or(train), self.test_images.or(test))
    }

    /// Dataset directory: configured path, else [`DATA_DIR_ENV`].
    pub fn data_dir(&self) -> Result<PathBuf> {
        if let Some(dir) = &self.data_dir {
            return Ok(dir.clone());
        }
        match std::env::var_os(DATA_DIR_ENV) {
            Some(dir) if !dir.is_empty() => Ok(PathBuf::from(dir)),
            _ => bail!("no dataset directory: pass --data-dir, set data_dir in the config, or set {DATA_DIR_ENV}"),
        }
    }
}

fn rebuild_rule(base: &WidthRule, gamma: Option<f64>, epsilon: Option<f64>) -> Result<WidthRule> {
    Ok(match base {
        WidthRule::Silverman => WidthRule::Silverman,
        WidthRule::Old { gamma: g } => WidthRule::old(gamma.unwrap_or(*g))?,
        WidthRule::New {
            gamma: g,
            epsilon: e,
            groups,
        } => WidthRule::new_rule_with(gamma.unwrap_or(*g), epsilon.unwrap_or(*e), groups.clone())?,
    })
}
