//! Estimated versus analytic mutual information of correlated Gaussian pairs.

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use serde::Serialize;

use infoplane_core::data::{
    analytic_gaussian_mi, derive_seed, sample_correlated_gaussians, GaussianPairSpec,
};
use infoplane_core::mi::{mutual_information, WidthRule};
use infoplane_core::EntropySettings;

use crate::config::RunConfig;
use crate::{out_dir, write_csv, Outcome};
use infoplane_core::ip::format_sig9;
use std::io::Write;
use std::path::Path;

pub const GRID_FILE: &str = "gaussians.csv";
pub const NSWEEP_FILE: &str = "gaussians_nsweep.csv";

#[derive(Debug, Clone, PartialEq)]
pub struct GaussiansPlan {
    pub rhos: Vec<f64>,
    pub dims: Vec<usize>,
    pub samples: usize,
    pub runs: usize,
    /// Labelled width rules, evaluated on the same samples.
    pub rules: Vec<(String, WidthRule)>,
    pub nsweep_samples: Vec<usize>,
    pub nsweep_dims: usize,
    pub settings: EntropySettings,
    pub seed: u64,
}

/// Correlations this close to ±1 make the analytic value blow up and the
/// sampling unstable.
pub const RHO_LIMIT: f64 = 0.995;

/// `points` values evenly spaced over `[-max, max]`.
pub fn rho_grid(points: usize, max: f64) -> Result<Vec<f64>> {
    if points < 2 {
        bail!("the rho grid needs at least two points");
    }
    if !(max > 0.0 && max < RHO_LIMIT) {
        bail!("rho_max must lie in (0, {RHO_LIMIT}), got {max}");
    }
    let step = 2.0 * max / (points - 1) as f64;
    Ok((0..points)
        .map(|i| {
            let v = -max + step * i as f64;
            // Keep the grid exactly symmetric; the midpoint is exactly 0.
            if 2 * i + 1 == points {
                0.0
            } else if 2 * i >= points {
                -(-max + step * (points - 1 - i) as f64)
            } else {
                v
            }
        })
        .collect())
}

impl GaussiansPlan {
    pub fn from_config(cfg: &RunConfig) -> Result<Self> {
        let rhos = match &cfg.rhos {
            Some(r) => r.clone(),
            None => rho_grid(cfg.rho_points.unwrap_or(21), cfg.rho_max.unwrap_or(0.99))?,
        };
        if let Some(bad) = rhos.iter().find(|r| !(r.abs() < RHO_LIMIT)) {
            bail!("|rho| must be below {RHO_LIMIT}, got {bad}");
        }
        let epsilon = cfg.epsilon.unwrap_or(infoplane_core::mi::DEFAULT_EPSILON);
        let new_gamma = cfg.new_gamma.unwrap_or(2.0);
        let old_gamma = cfg.old_gamma.unwrap_or(2.0 * 10f64.sqrt());
        let rules = vec![
            ("old".to_string(), WidthRule::old(old_gamma)?),
            (
                "new".to_string(),
                WidthRule::new_rule_with(new_gamma, epsilon, None)?,
            ),
        ];
        let plan = Self {
            rhos,
            dims: cfg.dims.clone().unwrap_or_else(|| vec![10, 100, 1000]),
            samples: cfg.samples.unwrap_or(128),
            runs: cfg.runs.unwrap_or(50),
            rules,
            nsweep_samples: cfg
                .nsweep_samples
                .clone()
                .unwrap_or_else(|| vec![128, 256, 512]),
            nsweep_dims: cfg.nsweep_dims.unwrap_or(100),
            settings: cfg.settings()?,
            seed: cfg.seed.unwrap_or(0),
        };
        if plan.runs == 0 || plan.samples < 2 || plan.dims.contains(&0) {
            bail!("runs, samples and dims must be positive (samples at least 2)");
        }
        Ok(plan)
    }

    /// The main grid over `dims` at `samples` for every rule.
    pub fn grid(&self) -> Result<Vec<GaussianRow>> {
        let cells: Vec<(usize, usize)> = self.dims.iter().map(|&d| (d, self.samples)).collect();
        evaluate(self, &cells, &self.rules)
    }

    /// The proposed rule at `nsweep_dims` for every sample count.
    pub fn sample_sweep(&self) -> Result<Vec<GaussianRow>> {
        let cells: Vec<(usize, usize)> = self
            .nsweep_samples
            .iter()
            .map(|&n| (self.nsweep_dims, n))
            .collect();
        let rules: Vec<(String, WidthRule)> = self
            .rules
            .iter()
            .filter(|(name, _)| name == "new")
            .cloned()
            .collect();
        evaluate(self, &cells, &rules)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GaussianRow {
    pub rule: String,
    pub dims: usize,
    pub samples: usize,
    pub rho: f64,
    pub mean_bits: f64,
    /// Sample standard deviation over runs.
    pub std_bits: f64,
    pub analytic_bits: f64,
}

impl GaussianRow {
    pub const HEADER: [&'static str; 7] = [
        "rule",
        "d",
        "N",
        "rho",
        "mean_bits",
        "std_bits",
        "analytic_bits",
    ];
}

/// Seed of one sample draw; independent of the rule so every rule sees the
/// same data.
fn cell_seed(base: u64, dims: usize, samples: usize, rho_index: usize, run: usize) -> u64 {
    [dims, samples, rho_index, run]
        .iter()
        .fold(base, |s, &v| derive_seed(s, v as u64))
}

fn evaluate(
    plan: &GaussiansPlan,
    cells: &[(usize, usize)],
    rules: &[(String, WidthRule)],
) -> Result<Vec<GaussianRow>> {
    let jobs: Vec<(usize, usize, usize)> = cells
        .iter()
        .flat_map(|&(d, n)| (0..plan.rhos.len()).map(move |r| (d, n, r)))
        .collect();
    let per_job: Vec<Vec<GaussianRow>> = jobs
        .par_iter()
        .map(|&(d, n, r)| -> Result<Vec<GaussianRow>> {
            let rho = plan.rhos[r];
            let mut values = vec![Vec::with_capacity(plan.runs); rules.len()];
            for run in 0..plan.runs {
                let spec = GaussianPairSpec {
                    dims: d,
                    rho,
                    samples: n,
                    seed: cell_seed(plan.seed, d, n, r, run),
                };
                let (x, y) = sample_correlated_gaussians(&spec)?;
                for (slot, (name, rule)) in values.iter_mut().zip(rules) {
                    let est = mutual_information(&x, &y, rule, &plan.settings)
                        .with_context(|| format!("rule {name}, d={d}, rho={rho}"))?;
                    slot.push(est.value_bits);
                }
            }
            let analytic = analytic_gaussian_mi(d, rho)?;
            Ok(rules
                .iter()
                .zip(values)
                .map(|((name, _), v)| {
                    let (mean, std) = mean_std(&v);
                    GaussianRow {
                        rule: name.clone(),
                        dims: d,
                        samples: n,
                        rho,
                        mean_bits: mean,
                        std_bits: std,
                        analytic_bits: analytic,
                    }
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    let mut rows: Vec<GaussianRow> = per_job.into_iter().flatten().collect();
    rows.sort_by(|a, b| {
        (a.rule.as_str(), a.dims, a.samples)
            .cmp(&(b.rule.as_str(), b.dims, b.samples))
            .then(a.rho.total_cmp(&b.rho))
    });
    Ok(rows)
}

pub fn write_rows(path: &Path, rows: &[GaussianRow]) -> Result<()> {
    write_csv(
        path,
        &GaussianRow::HEADER,
        rows.iter().map(|r| {
            [
                r.rule.clone(),
                r.dims.to_string(),
                r.samples.to_string(),
                format_sig9(r.rho),
                format_sig9(r.mean_bits),
                format_sig9(r.std_bits),
                format_sig9(r.analytic_bits),
            ]
        }),
    )
}

/// Runs the main grid and the sample-count sweep and writes both tables.
pub fn cmd_gaussians(cfg: &RunConfig, json: bool, stdout: &mut dyn Write) -> Result<Outcome> {
    let plan = GaussiansPlan::from_config(cfg)?;
    let dir = out_dir(cfg)?;
    let grid = plan.grid()?;
    let grid_path = dir.join(GRID_FILE);
    write_rows(&grid_path, &grid)?;
    let sweep = plan.sample_sweep()?;
    let sweep_path = dir.join(NSWEEP_FILE);
    write_rows(&sweep_path, &sweep)?;
    if json {
        let summary = serde_json::json!({
            "files": [grid_path, sweep_path],
            "grid_rows": grid.len(),
            "nsweep_rows": sweep.len(),
            "runs": plan.runs,
            "seed": plan.seed,
        });
        writeln!(stdout, "{summary}")?;
    } else {
        writeln!(
            stdout,
            "wrote {} ({} rows)",
            grid_path.display(),
            grid.len()
        )?;
        writeln!(
            stdout,
            "wrote {} ({} rows)",
            sweep_path.display(),
            sweep.len()
        )?;
    }
    Ok(Outcome::Completed)
}

/// Mean and sample standard deviation (zero for a single value).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid_is_symmetric() {
        let g = rho_grid(21, 0.99).unwrap();
        assert_eq!(g.len(), 21);
        assert_eq!(g[0], -0.99);
        assert_eq!(g[20], 0.99);
        assert_eq!(g[10], 0.0);
        for i in 0..21 {
            assert_eq!(g[i], -g[20 - i]);
        }
        assert!(rho_grid(5, 1.0).is_err());
    }

    #[test]
    fn sample_std() {
        let (m, s) = mean_std(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((s - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(mean_std(&[7.0]), (7.0, 0.0));
    }

    #[test]
    fn rules_share_samples() {
        let cfg = RunConfig {
            rhos: Some(vec![0.0, 0.5]),
            dims: Some(vec![10]),
            samples: Some(16),
            runs: Some(3),
            ..RunConfig::default()
        };
        let plan = GaussiansPlan::from_config(&cfg).unwrap();
        let rows = plan.grid().unwrap();
        assert_eq!(rows.len(), 4);
        // γ = 2√10 (old) and γ = 2 (new) coincide at d = 10, and the data
        // are standard normal, so both rules give nearly the same numbers.
        let (new, old) = rows.split_at(2);
        for (new, old) in new.iter().zip(old) {
            assert_eq!((new.rule.as_str(), old.rule.as_str()), ("new", "old"));
            assert_eq!(new.rho, old.rho);
            assert!((old.mean_bits - new.mean_bits).abs() < 0.5);
        }
        assert_eq!(rows[0].analytic_bits, 0.0);
    }
}
