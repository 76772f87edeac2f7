//! Mutual information between two data files.

use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::Serialize;

use infoplane_core::data::{idx_ubyte_matrix, is_idx_ubyte, read_maybe_gzip};
use infoplane_core::ip::format_sig9;
use infoplane_core::mi::{mutual_information, KernelWidth, WidthRule};
use infoplane_core::DataMatrix;

use crate::config::{RuleKind, RunConfig};
use crate::Outcome;

/// γ used when none is configured.
pub const DEFAULT_GAMMA: f64 = 0.8;

/// Reads an IDX file (unsigned bytes, scaled to `[0, 1]`, plain or gzip) or
/// a numeric CSV with one sample per row. A first CSV row that does not
/// parse as numbers is taken as a header.
pub fn read_matrix(path: &Path) -> Result<DataMatrix> {
    let bytes = read_maybe_gzip(path).with_context(|| format!("reading {}", path.display()))?;
    if is_idx_ubyte(&bytes) {
        return idx_ubyte_matrix(&bytes).with_context(|| format!("parsing {}", path.display()));
    }
    parse_csv(&bytes).with_context(|| format!("parsing {}", path.display()))
}

fn parse_csv(bytes: &[u8]) -> Result<DataMatrix> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(bytes);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        if record.iter().all(str::is_empty) {
            continue;
        }
        let parsed: Result<Vec<f64>, _> = record.iter().map(str::parse::<f64>).collect();
        match parsed {
            Ok(row) => rows.push(row),
            Err(_) if i == 0 => continue,
            Err(e) => bail!("line {}: {e}", i + 1),
        }
    }
    if rows.is_empty() {
        bail!("no numeric rows");
    }
    Ok(DataMatrix::from_rows(&rows)?)
}

/// The rule selected by `rule`/`gamma`/`epsilon`; the proposed rule by
/// default.
pub fn estimate_rule(cfg: &RunConfig) -> Result<WidthRule> {
    let cfg = RunConfig {
        rule: Some(cfg.rule.unwrap_or(RuleKind::New)),
        ..cfg.clone()
    };
    Ok(cfg.width_rule(DEFAULT_GAMMA)?.expect("rule is set"))
}

#[derive(Debug, Serialize)]
pub struct EstimateReport {
    pub value_bits: f64,
    pub samples: usize,
    pub x_dims: usize,
    pub y_dims: usize,
    pub alpha: f64,
    pub rule: WidthRule,
    pub width_x: KernelWidth,
    pub width_y: KernelWidth,
}

pub fn estimate(cfg: &RunConfig) -> Result<EstimateReport> {
    let (Some(xp), Some(yp)) = (&cfg.x, &cfg.y) else {
        bail!("both --x and --y are required");
    };
    let x = read_matrix(xp)?;
    let y = read_matrix(yp)?;
    if x.rows() != y.rows() {
        bail!(
            "sample counts differ: {} has {} rows, {} has {}",
            xp.display(),
            x.rows(),
            yp.display(),
            y.rows()
        );
    }
    let rule = estimate_rule(cfg)?;
    let settings = cfg.settings()?;
    let est = mutual_information(&x, &y, &rule, &settings)?;
    Ok(EstimateReport {
        value_bits: est.value_bits,
        samples: x.rows(),
        x_dims: x.cols(),
        y_dims: y.cols(),
        alpha: settings.alpha(),
        rule,
        width_x: est.width_x,
        width_y: est.width_y,
    })
}

fn describe(w: &KernelWidth) -> String {
    match w {
        KernelWidth::Isotropic(s) => format_sig9(*s),
        KernelWidth::PerDimension(v) => {
            let parts: Vec<String> = v.iter().map(|s| format_sig9(*s)).collect();
            format!("[{}]", parts.join(", "))
        }
    }
}

pub fn cmd_estimate(cfg: &RunConfig, json: bool, stdout: &mut dyn Write) -> Result<Outcome> {
    let report = estimate(cfg)?;
    if json {
        writeln!(stdout, "{}", serde_json::to_string(&report)?)?;
    } else {
        writeln!(stdout, "{} bits", format_sig9(report.value_bits))?;
        writeln!(stdout, "width_x {}", describe(&report.width_x))?;
        writeln!(stdout, "width_y {}", describe(&report.width_y))?;
    }
    Ok(Outcome::Completed)
}
