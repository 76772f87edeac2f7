//! Matrix-based Rényi α-entropy and mutual information.
//!
//! A variable observed through `N` samples is summarised by its normalized
//! Gram matrix `A` (unit trace, diagonal `1/N`). The entropy estimate is
//!
//! ```text
//! S_α(A) = log2(Σ_i λ_i(A)^α) / (1 − α)
//! ```
//!
//! the joint entropy of two variables is `S_α(A∘B / tr(A∘B))`, and the
//! mutual information is `S_α(A) + S_α(B) − S_α(A, B)`. All values are in
//! bits and lie in `[0, log2 N]`.
//!
//! The kernel is Gaussian; its width comes from a [`WidthRule`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkit::{
    clamp_unit_spectrum, column_stats, hadamard, pairwise_scaled_sq_dists, pairwise_sq_dists,
    sym_eigenvalues, DataMatrix, SymMatrix,
};

pub const DEFAULT_ALPHA: f64 = 1.01;
pub const DEFAULT_EPSILON: f64 = 1e-8;

/// Order of the Rényi entropy. Logarithms are always base 2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntropySettings {
    alpha: f64,
}

impl EntropySettings {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0 && alpha != 1.0) {
            return Err(Error::InvalidParameter(format!(
                "alpha must be positive and different from 1, got {alpha}"
            )));
        }
        Ok(Self { alpha })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}

impl Default for EntropySettings {
    fn default() -> Self {
        Self {
            alpha: DEFAULT_ALPHA,
        }
    }
}

/// Partition of the `d` dimensions of a variable into groups that share
/// normalization statistics (channels of an image, for instance).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupMap {
    groups: Vec<Vec<usize>>,
    dims: usize,
}

impl GroupMap {
    /// Every dimension in `0..dims` must appear in exactly one group.
    pub fn new(groups: Vec<Vec<usize>>, dims: usize) -> Result<Self> {
        let mut seen = vec![false; dims];
        for &j in groups.iter().flatten() {
            if j >= dims || seen[j] {
                return Err(Error::InvalidParameter(format!(
                    "group map is not a partition of {dims} dimensions (index {j})"
                )));
            }
            seen[j] = true;
        }
        if seen.iter().any(|s| !s) || groups.iter().any(Vec::is_empty) {
            return Err(Error::InvalidParameter(format!(
                "group map does not cover all {dims} dimensions"
            )));
        }
        Ok(Self { groups, dims })
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    pub fn dims(&self) -> usize {
        self.dims
    }
}

/// How the Gaussian kernel width is chosen for a variable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WidthRule {
    /// Silverman's rule of thumb, one width per dimension.
    Silverman,
    /// `σ = γ·N^(−1/(4+d))` on the raw data.
    Old { gamma: f64 },
    /// Dimension-wise normalization by `√(σ̂_j² + ε)`, then
    /// `σ = γ·√d·N^(−1/(4+d))`.
    New {
        gamma: f64,
        epsilon: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        groups: Option<GroupMap>,
    },
}

impl WidthRule {
    pub fn old(gamma: f64) -> Result<Self> {
        check_positive("gamma", gamma)?;
        Ok(WidthRule::Old { gamma })
    }

    pub fn new_rule(gamma: f64) -> Result<Self> {
        Self::new_rule_with(gamma, DEFAULT_EPSILON, None)
    }

    pub fn new_rule_with(gamma: f64, epsilon: f64, groups: Option<GroupMap>) -> Result<Self> {
        check_positive("gamma", gamma)?;
        check_positive("epsilon", epsilon)?;
        Ok(WidthRule::New {
            gamma,
            epsilon,
            groups,
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            WidthRule::Silverman => "silverman",
            WidthRule::Old { .. } => "old",
            WidthRule::New { .. } => "new",
        }
    }

    pub fn gamma(&self) -> Option<f64> {
        match self {
            WidthRule::Silverman => None,
            WidthRule::Old { gamma } | WidthRule::New { gamma, .. } => Some(*gamma),
        }
    }

    /// Same rule with a different γ. Silverman has no γ and is returned as is.
    pub fn with_gamma(&self, gamma: f64) -> Result<Self> {
        check_positive("gamma", gamma)?;
        Ok(match self {
            WidthRule::Silverman => WidthRule::Silverman,
            WidthRule::Old { .. } => WidthRule::Old { gamma },
            WidthRule::New {
                epsilon, groups, ..
            } => WidthRule::New {
                gamma,
                epsilon: *epsilon,
                groups: groups.clone(),
            },
        })
    }

    fn validate(&self) -> Result<()> {
        match self {
            WidthRule::Silverman => Ok(()),
            WidthRule::Old { gamma } => check_positive("gamma", *gamma),
            WidthRule::New { gamma, epsilon, .. } => {
                check_positive("gamma", *gamma)?;
                check_positive("epsilon", *epsilon)
            }
        }
    }

    /// Builds the normalized Gram matrix of `x` and its entropy.
    pub fn prepare(&self, x: &DataMatrix, settings: &EntropySettings) -> Result<PreparedVariable> {
        self.validate()?;
        let (n, d) = (x.rows(), x.cols());
        let (gram, width) = match self {
            WidthRule::Silverman => {
                let widths = kernel_width_silverman(x);
                if widths.iter().all(|&w| w == 0.0) {
                    return Err(Error::DegenerateWidth);
                }
                let dists = pairwise_scaled_sq_dists(x, &widths);
                (
                    gram_from_sq_dists(&dists, 1.0),
                    KernelWidth::PerDimension(widths),
                )
            }
            WidthRule::Old { gamma } => {
                let sigma = kernel_width_old(*gamma, n, d);
                (gaussian_gram(x, sigma)?, KernelWidth::Isotropic(sigma))
            }
            WidthRule::New {
                gamma,
                epsilon,
                groups,
            } => {
                let normalized = normalize_dims(x, *epsilon, groups.as_ref())?;
                let sigma = kernel_width_new(*gamma, n, d);
                (
                    gaussian_gram(&normalized, sigma)?,
                    KernelWidth::Isotropic(sigma),
                )
            }
        };
        let entropy = renyi_entropy(&gram, settings)?;
        Ok(PreparedVariable {
            gram,
            width,
            entropy,
        })
    }
}

fn check_positive(name: &str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "{name} must be positive, got {value}"
        )))
    }
}

/// Kernel width actually used for a variable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum KernelWidth {
    Isotropic(f64),
    PerDimension(Vec<f64>),
}

/// A variable reduced to what the estimator needs: its Gram matrix, the
/// width that produced it, and its marginal entropy.
#[derive(Debug, Clone)]
pub struct PreparedVariable {
    pub gram: NormalizedGram,
    pub width: KernelWidth,
    pub entropy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MiEstimate {
    pub value_bits: f64,
    pub width_x: KernelWidth,
    pub width_y: KernelWidth,
}

/// Unit-trace kernel matrix with diagonal exactly `1/N`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedGram(SymMatrix);

impl NormalizedGram {
    /// Validates a hand-built matrix: diagonal `1/N` and entries in `[0, 1/N]`.
    pub fn from_matrix(m: SymMatrix) -> Result<Self> {
        let n = m.order();
        if n == 0 {
            return Err(Error::DimensionMismatch("empty gram matrix".into()));
        }
        let inv = 1.0 / n as f64;
        for i in 0..n {
            if (m.get(i, i) - inv).abs() > 1e-12 {
                return Err(Error::InvalidParameter(format!(
                    "gram diagonal must be 1/N, found {} at {i}",
                    m.get(i, i)
                )));
            }
        }
        if m.as_slice()
            .iter()
            .any(|&v| !(-1e-15..=inv + 1e-15).contains(&v))
        {
            return Err(Error::InvalidParameter(
                "gram entries must lie in [0, 1/N]".into(),
            ));
        }
        let mut m = m;
        m.set_diagonal(inv);
        Ok(Self(m))
    }

    /// `(1/N)·I`: every sample is its own cluster.
    pub fn identity(n: usize) -> Self {
        Self(SymMatrix::identity(n).scaled(1.0 / n as f64))
    }

    /// All entries `1/N`: a constant variable.
    pub fn constant(n: usize) -> Self {
        Self(SymMatrix::filled(n, 1.0 / n as f64))
    }

    pub fn order(&self) -> usize {
        self.0.order()
    }

    pub fn matrix(&self) -> &SymMatrix {
        &self.0
    }

    /// Descending eigenvalues, clamped into `[0, 1]`.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        clamp_unit_spectrum(sym_eigenvalues(&self.0)?)
    }
}

/// Silverman's rule of thumb for one dimension with empirical standard
/// deviation `std`.
pub fn silverman_width(std: f64, n: usize, d: usize) -> f64 {
    let d = d as f64;
    (4.0 / (2.0 + d)).powf(1.0 / (4.0 + d)) * std * (n as f64).powf(-1.0 / (4.0 + d))
}

/// Per-dimension Silverman widths using population standard deviations.
pub fn kernel_width_silverman(x: &DataMatrix) -> Vec<f64> {
    let (_, stds) = column_stats(x);
    stds.iter()
        .map(|&s| silverman_width(s, x.rows(), x.cols()))
        .collect()
}

pub fn kernel_width_old(gamma: f64, n: usize, d: usize) -> f64 {
    gamma * (n as f64).powf(-1.0 / (4.0 + d as f64))
}

pub fn kernel_width_new(gamma: f64, n: usize, d: usize) -> f64 {
    (d as f64).sqrt() * kernel_width_old(gamma, n, d)
}

/// Divides every dimension by `√(σ̂_j² + ε)`. With a group map, σ̂ is the
/// population standard deviation of the pooled values of each group. The
/// mean is left in place.
pub fn normalize_dims(
    x: &DataMatrix,
    epsilon: f64,
    groups: Option<&GroupMap>,
) -> Result<DataMatrix> {
    check_positive("epsilon", epsilon)?;
    let d = x.cols();
    let stds = match groups {
        None => column_stats(x).1,
        Some(map) => {
            if map.dims() != d {
                return Err(Error::DimensionMismatch(format!(
                    "group map covers {} dimensions, data has {d}",
                    map.dims()
                )));
            }
            pooled_group_stds(x, map)
        }
    };
    let factors: Vec<f64> = stds
        .iter()
        .map(|s| 1.0 / (s * s + epsilon).sqrt())
        .collect();
    x.scale_columns(&factors)
}

fn pooled_group_stds(x: &DataMatrix, map: &GroupMap) -> Vec<f64> {
    let mut stds = vec![0.0; x.cols()];
    for group in map.groups() {
        let count = (group.len() * x.rows()) as f64;
        let mean = (0..x.rows())
            .flat_map(|i| group.iter().map(move |&j| (i, j)))
            .map(|(i, j)| x.row(i)[j])
            .sum::<f64>()
            / count;
        let var = (0..x.rows())
            .flat_map(|i| group.iter().map(move |&j| (i, j)))
            .map(|(i, j)| (x.row(i)[j] - mean).powi(2))
            .sum::<f64>()
            / count;
        for &j in group {
            stds[j] = var.sqrt();
        }
    }
    stds
}

/// Normalized Gaussian Gram matrix `A_ij = exp(−‖x_i − x_j‖²/(2σ²)) / N`.
pub fn gaussian_gram(x: &DataMatrix, sigma: f64) -> Result<NormalizedGram> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "kernel width must be positive, got {sigma}"
        )));
    }
    let dists = pairwise_sq_dists(x)?;
    Ok(gram_from_sq_dists(&dists, sigma))
}

fn gram_from_sq_dists(dists: &SymMatrix, sigma: f64) -> NormalizedGram {
    let n = dists.order();
    let inv_n = 1.0 / n as f64;
    let denom = 2.0 * sigma * sigma;
    let mut m = dists.map(|d| (-d / denom).exp() * inv_n);
    m.set_diagonal(inv_n);
    NormalizedGram(m)
}

/// `S_α(A)` in bits, with `0^α := 0`.
pub fn renyi_entropy(a: &NormalizedGram, settings: &EntropySettings) -> Result<f64> {
    let alpha = settings.alpha();
    let power_sum: f64 = a
        .eigenvalues()?
        .iter()
        .filter(|&&l| l > 0.0)
        .map(|l| l.powf(alpha))
        .sum();
    Ok(power_sum.log2() / (1.0 - alpha))
}

/// `(A∘B) / tr(A∘B)`; again a normalized Gram matrix.
pub fn joint_gram(a: &NormalizedGram, b: &NormalizedGram) -> Result<NormalizedGram> {
    let product = hadamard(a.matrix(), b.matrix())?;
    let mut joint = product.scaled(1.0 / product.trace());
    joint.set_diagonal(1.0 / a.order() as f64);
    Ok(NormalizedGram(joint))
}

pub fn joint_entropy(
    a: &NormalizedGram,
    b: &NormalizedGram,
    settings: &EntropySettings,
) -> Result<f64> {
    renyi_entropy(&joint_gram(a, b)?, settings)
}

/// `S_α(A) + S_α(B) − S_α(A, B)` for two prepared variables.
pub fn mutual_information_prepared(
    x: &PreparedVariable,
    y: &PreparedVariable,
    settings: &EntropySettings,
) -> Result<f64> {
    if x.gram.order() != y.gram.order() {
        return Err(Error::DimensionMismatch(format!(
            "sample counts differ: {} vs {}",
            x.gram.order(),
            y.gram.order()
        )));
    }
    let joint = joint_entropy(&x.gram, &y.gram, settings)?;
    Ok(x.entropy + y.entropy - joint)
}

/// Mutual information between the rows of `x` and `y`, both kernelled with
/// the same width rule.
pub fn mutual_information(
    x: &DataMatrix,
    y: &DataMatrix,
    rule: &WidthRule,
    settings: &EntropySettings,
) -> Result<MiEstimate> {
    mutual_information_with_rules(x, rule, y, rule, settings)
}

/// Mutual information where each variable gets its own width rule.
pub fn mutual_information_with_rules(
    x: &DataMatrix,
    rule_x: &WidthRule,
    y: &DataMatrix,
    rule_y: &WidthRule,
    settings: &EntropySettings,
) -> Result<MiEstimate> {
    if x.rows() != y.rows() {
        return Err(Error::DimensionMismatch(format!(
            "sample counts differ: {} vs {}",
            x.rows(),
            y.rows()
        )));
    }
    let px = rule_x.prepare(x, settings)?;
    let py = rule_y.prepare(y, settings)?;
    let value_bits = mutual_information_prepared(&px, &py, settings)?;
    Ok(MiEstimate {
        value_bits,
        width_x: px.width,
        width_y: py.width,
    })
}

/// Mutual information on raw data with one fixed isotropic width for both
/// variables. Used to probe the saturation limits of the estimator.
pub fn mutual_information_fixed_width(
    x: &DataMatrix,
    y: &DataMatrix,
    sigma: f64,
    settings: &EntropySettings,
) -> Result<f64> {
    if x.rows() != y.rows() {
        return Err(Error::DimensionMismatch(format!(
            "sample counts differ: {} vs {}",
            x.rows(),
            y.rows()
        )));
    }
    let a = gaussian_gram(x, sigma)?;
    let b = gaussian_gram(y, sigma)?;
    let sa = renyi_entropy(&a, settings)?;
    let sb = renyi_entropy(&b, settings)?;
    Ok(sa + sb - joint_entropy(&a, &b, settings)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn settings() -> EntropySettings {
        EntropySettings::default()
    }

    fn data(rows: &[&[f64]]) -> DataMatrix {
        DataMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn entropy_settings_validation() {
        assert_eq!(EntropySettings::default().alpha(), 1.01);
        assert!(EntropySettings::new(1.0).is_err());
        assert!(EntropySettings::new(0.0).is_err());
        assert!(EntropySettings::new(2.0).is_ok());
    }

    #[test]
    fn silverman_closed_form() {
        let w = silverman_width(1.0, 1, 1);
        assert!((w - (4.0f64 / 3.0).powf(0.2)).abs() < 1e-12);
        assert!((w - 1.0592).abs() < 1e-4);
        assert_eq!(silverman_width(0.0, 10, 3), 0.0);
    }

    #[test]
    fn silverman_scales_with_data() {
        let x = data(&[&[0.0, 1.0], &[1.0, -2.0], &[4.0, 0.5]]);
        let scaled = x.scale_columns(&[3.0, 3.0]).unwrap();
        for (a, b) in kernel_width_silverman(&x)
            .iter()
            .zip(kernel_width_silverman(&scaled))
        {
            assert!((3.0 * a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn old_rule_values() {
        assert!((kernel_width_old(1.0, 128, 10) - 0.5f64.sqrt()).abs() < 1e-12);
        assert_eq!(kernel_width_old(5.0, 1, 17), 5.0);
        assert!((kernel_width_old(2.0, 128, 1_000_000) - 2.0).abs() < 1e-4);
    }

    #[test]
    fn new_rule_values() {
        let expected = 10.0 * 2f64.powf(-7.0 / 104.0);
        assert!((kernel_width_new(1.0, 128, 100) - expected).abs() < 1e-12);
        assert!((kernel_width_new(1.0, 128, 100) - 9.5441).abs() < 1e-4);
        assert_eq!(kernel_width_new(3.0, 50, 1), kernel_width_old(3.0, 50, 1));
        let new = kernel_width_new(2.0, 128, 10);
        let old = kernel_width_old(2.0 * 10f64.sqrt(), 128, 10);
        assert!((new - old).abs() < 1e-12);
    }

    #[test]
    fn normalize_unit_std() {
        let x = data(&[&[-2.0, 5.0], &[2.0, 5.0]]);
        let y = normalize_dims(&x, DEFAULT_EPSILON, None).unwrap();
        let (_, stds) = column_stats(&y);
        assert!((stds[0] - 1.0).abs() < 1e-6);
        // constant column divided by √ε
        assert!((y.row(0)[1] - 5.0 / DEFAULT_EPSILON.sqrt()).abs() < 1e-3);
        assert!(y.as_slice().iter().all(|v| v.is_finite()));
    }

    #[test]
    fn normalize_removes_scale() {
        let x = data(&[&[0.3, 1.0], &[1.7, -2.0], &[-0.4, 0.25]]);
        let seven = x.scale_columns(&[7.0, 7.0]).unwrap();
        let a = normalize_dims(&x, DEFAULT_EPSILON, None).unwrap();
        let b = normalize_dims(&seven, DEFAULT_EPSILON, None).unwrap();
        for (p, q) in a.as_slice().iter().zip(b.as_slice()) {
            assert!((p - q).abs() < 1e-6);
        }
    }

    #[test]
    fn grouped_normalization_pools_statistics() {
        let x = data(&[&[0.0, 2.0, 1.0], &[2.0, 0.0, 3.0]]);
        let groups = GroupMap::new(vec![vec![0, 1], vec![2]], 3).unwrap();
        let y = normalize_dims(&x, 1e-12, Some(&groups)).unwrap();
        // pooled {0,2,2,0}: std 1, so the first two columns are unchanged
        assert!((y.row(0)[1] - 2.0).abs() < 1e-9);
        assert!((y.row(1)[2] - 3.0).abs() < 1e-9);
        assert!(GroupMap::new(vec![vec![0, 1]], 3).is_err());
        assert!(GroupMap::new(vec![vec![0, 1], vec![1, 2]], 3).is_err());
    }

    #[test]
    fn gram_of_identical_samples() {
        let x = data(&[&[1.0, 2.0][..]; 4]);
        let a = gaussian_gram(&x, 0.3).unwrap();
        assert!(a.matrix().as_slice().iter().all(|&v| v == 0.25));
    }

    #[test]
    fn gram_width_limits() {
        let x = data(&[&[0.0], &[1.0], &[3.0]]);
        let wide = gaussian_gram(&x, 1e12).unwrap();
        assert!(wide
            .matrix()
            .as_slice()
            .iter()
            .all(|&v| (v - 1.0 / 3.0).abs() < 1e-9));
        let narrow = gaussian_gram(&x, 1e-12).unwrap();
        let ident = NormalizedGram::identity(3);
        for (p, q) in narrow
            .matrix()
            .as_slice()
            .iter()
            .zip(ident.matrix().as_slice())
        {
            assert!((p - q).abs() < 1e-9);
        }
        assert!(gaussian_gram(&x, 0.0).is_err());
        assert!(gaussian_gram(&x, -1.0).is_err());
    }

    #[test]
    fn entropy_closed_forms() {
        for n in [2usize, 5, 64] {
            let s = renyi_entropy(&NormalizedGram::identity(n), &settings()).unwrap();
            assert!((s - (n as f64).log2()).abs() < 1e-9);
            let s = renyi_entropy(&NormalizedGram::constant(n), &settings()).unwrap();
            assert!(s.abs() < 1e-9);
        }
        for alpha in [0.5, 1.01, 2.0, 3.7] {
            let s = EntropySettings::new(alpha).unwrap();
            let half = renyi_entropy(&NormalizedGram::identity(2), &s).unwrap();
            assert!((half - 1.0).abs() < 1e-12, "alpha={alpha}");
        }
    }

    #[test]
    fn joint_entropy_examples() {
        let x = data(&[&[0.0], &[0.4], &[1.0], &[2.5]]);
        let a = gaussian_gram(&x, 0.7).unwrap();
        let constant = NormalizedGram::constant(4);
        let sa = renyi_entropy(&a, &settings()).unwrap();
        let joint = joint_entropy(&a, &constant, &settings()).unwrap();
        assert!((sa - joint).abs() < 1e-9);

        let ident = NormalizedGram::identity(4);
        let j = joint_entropy(&ident, &ident, &settings()).unwrap();
        assert!((j - 2.0).abs() < 1e-9);

        let b = gaussian_gram(&x.scale_columns(&[-3.0]).unwrap(), 0.9).unwrap();
        assert_eq!(
            joint_entropy(&a, &b, &settings()).unwrap(),
            joint_entropy(&b, &a, &settings()).unwrap()
        );
        assert!(joint_entropy(&a, &NormalizedGram::identity(3), &settings()).is_err());
    }

    #[test]
    fn constant_partner_gives_zero_information() {
        let x = data(&[&[0.0, 1.0], &[0.4, -1.0], &[1.0, 0.0], &[2.5, 2.0]]);
        let y = data(&[&[7.0][..]; 4]);
        for rule in [
            WidthRule::old(1.0).unwrap(),
            WidthRule::new_rule(0.8).unwrap(),
        ] {
            let mi = mutual_information(&x, &y, &rule, &settings()).unwrap();
            assert!(mi.value_bits.abs() < 1e-9, "{rule:?}: {}", mi.value_bits);
        }
    }

    #[test]
    fn silverman_on_constant_data_is_degenerate() {
        let x = data(&[&[0.0], &[1.0], &[2.0]]);
        let y = data(&[&[4.0], &[4.0], &[4.0]]);
        let err = mutual_information(&x, &y, &WidthRule::Silverman, &settings()).unwrap_err();
        assert_eq!(err.to_string(), "degenerate width");
    }

    #[test]
    fn silverman_ignores_constant_dimension() {
        let x = data(&[&[0.0, 4.0], &[1.0, 4.0], &[2.5, 4.0]]);
        let y = data(&[&[0.0], &[1.0], &[2.5]]);
        let mi = mutual_information(&x, &y, &WidthRule::Silverman, &settings()).unwrap();
        assert!(mi.value_bits.is_finite());
        match mi.width_x {
            KernelWidth::PerDimension(w) => assert_eq!(w[1], 0.0),
            other => panic!("unexpected width {other:?}"),
        }
    }

    #[test]
    fn sample_count_mismatch() {
        let x = data(&[&[0.0], &[1.0]]);
        let y = data(&[&[0.0], &[1.0], &[2.0]]);
        let err =
            mutual_information(&x, &y, &WidthRule::old(1.0).unwrap(), &settings()).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch(_)));
    }

    #[test]
    fn rule_parameters_validated() {
        assert!(WidthRule::old(0.0).is_err());
        assert!(WidthRule::new_rule(-1.0).is_err());
        assert!(WidthRule::new_rule_with(1.0, 0.0, None).is_err());
        let bad = WidthRule::Old { gamma: -2.0 };
        let x = data(&[&[0.0], &[1.0]]);
        assert!(bad.prepare(&x, &settings()).is_err());
    }

    #[test]
    fn width_rule_serde_shape() {
        let json = serde_json::to_string(&WidthRule::new_rule(0.8).unwrap()).unwrap();
        assert_eq!(json, r#"{"kind":"new","gamma":0.8,"epsilon":1e-8}"#);
        let back: WidthRule = serde_json::from_str(r#"{"kind":"old","gamma":5.0}"#).unwrap();
        assert_eq!(back, WidthRule::Old { gamma: 5.0 });
    }
}
