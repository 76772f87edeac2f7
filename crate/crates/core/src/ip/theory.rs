use serde::{Deserialize, Serialize};

use super::IpPoint;
use crate::error::{Error, Result};
use crate::nets::Architecture;

const FEASIBLE_TOL: f64 = 1e-9;

/// Position of a layer in an autoencoder. Hidden layers are numbered from
/// 1; decoder layers count outwards from the bottleneck.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LayerRole {
    EncoderHidden(usize),
    Bottleneck,
    DecoderHidden(usize),
    Output,
}

impl LayerRole {
    pub fn layer_id(&self) -> String {
        match self {
            LayerRole::EncoderHidden(i) => format!("E{i}"),
            LayerRole::Bottleneck => "Z".into(),
            LayerRole::DecoderHidden(i) => format!("D{i}"),
            LayerRole::Output => super::OUTPUT_LAYER_ID.into(),
        }
    }
}

/// An ideal autoencoder with input information `M` and bottleneck capacity
/// `λ`, both in bits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoreticalIp {
    pub input_information: f64,
    pub lambda: f64,
    pub layer_roles: Vec<LayerRole>,
}

impl TheoreticalIp {
    pub fn new(input_information: f64, lambda: f64, layer_roles: Vec<LayerRole>) -> Result<Self> {
        for (name, v) in [("M", input_information), ("lambda", lambda)] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be finite and non-negative, got {v}"
                )));
            }
        }
        Ok(Self {
            input_information,
            lambda,
            layer_roles,
        })
    }

    /// Roles of every hidden layer of `arch` followed by the output.
    pub fn for_architecture(
        arch: &Architecture,
        input_information: f64,
        lambda: f64,
    ) -> Result<Self> {
        let l = arch.encoder_widths.len();
        let mut roles: Vec<LayerRole> = (1..=l).map(LayerRole::EncoderHidden).collect();
        roles.push(LayerRole::Bottleneck);
        roles.extend((1..=l).map(LayerRole::DecoderHidden));
        roles.push(LayerRole::Output);
        Self::new(input_information, lambda, roles)
    }
}

/// Closed interval of bits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn point(v: f64) -> Self {
        Self { lo: v, hi: v }
    }

    pub fn contains(&self, v: f64, tol: f64) -> bool {
        v >= self.lo - tol && v <= self.hi + tol
    }

    pub fn is_point(&self) -> bool {
        self.lo == self.hi
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerTarget {
    pub role: LayerRole,
    pub input_mi: Interval,
    pub output_mi: f64,
}

/// Where each layer of an ideal autoencoder ends up. When
/// `encoder_non_increasing` is set, the encoder input MIs must also be
/// non-increasing towards the bottleneck.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTargets {
    pub layers: Vec<LayerTarget>,
    pub encoder_non_increasing: bool,
}

/// Limits of the information plane of an ideal autoencoder.
///
/// With `λ > M` every layer carries all the input information. With
/// `λ < M` the bottleneck and the decoder carry exactly `λ`, the output MI
/// of every layer is `λ`, and the encoder layers only have to sit in
/// `[λ, M]`, ordered.
pub fn theoretical_convergence(t: &TheoreticalIp) -> Result<ConvergenceTargets> {
    let (m, lambda) = (t.input_information, t.lambda);
    if lambda == m {
        return Err(Error::BoundaryCase);
    }
    let surplus = lambda > m;
    let layers = t
        .layer_roles
        .iter()
        .map(|&role| {
            let (input_mi, output_mi) = match role {
                _ if surplus => (Interval::point(m), m),
                LayerRole::EncoderHidden(_) => (Interval { lo: lambda, hi: m }, lambda),
                _ => (Interval::point(lambda), lambda),
            };
            LayerTarget {
                role,
                input_mi,
                output_mi,
            }
        })
        .collect();
    Ok(ConvergenceTargets {
        layers,
        encoder_non_increasing: !surplus,
    })
}

/// Whether `(x, y)` lies in the triangle `(0,0)`, `(M,0)`, `(M,M)`.
pub fn feasible_region_check(point: (f64, f64), m: f64) -> bool {
    let (x, y) = point;
    y >= -FEASIBLE_TOL && y <= x + FEASIBLE_TOL && x <= m + FEASIBLE_TOL
}

/// Concrete points satisfying `targets`: encoder input MIs step linearly
/// from `M` down to `λ`, every other layer sits on its point target.
pub fn oracle_points(targets: &ConvergenceTargets) -> Vec<IpPoint> {
    let encoders = targets
        .layers
        .iter()
        .filter(|t| matches!(t.role, LayerRole::EncoderHidden(_)))
        .count();
    targets
        .layers
        .iter()
        .map(|t| {
            let input_mi = match t.role {
                LayerRole::EncoderHidden(i) if !t.input_mi.is_point() => {
                    let remaining = encoders.saturating_sub(i) as f64 / encoders as f64;
                    t.input_mi.lo + (t.input_mi.hi - t.input_mi.lo) * remaining
                }
                _ => t.input_mi.hi,
            };
            IpPoint {
                layer_id: t.role.layer_id(),
                iteration: 0,
                input_mi,
                output_mi: t.output_mi,
                mean_variance: 0.0,
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DpiViolation {
    /// Input MI rose from position `from` to `to` by `increase` bits.
    InputIncrease {
        from: usize,
        to: usize,
        from_layer: String,
        to_layer: String,
        increase: f64,
    },
    /// The output MIs of the layers differ by `spread` bits.
    OutputSpread { spread: f64 },
}

/// Scans layers ordered from the input side for data processing
/// inequality violations larger than `tol`.
pub fn dpi_report(points: &[IpPoint], tol: f64) -> Vec<DpiViolation> {
    let mut out: Vec<DpiViolation> = points
        .windows(2)
        .enumerate()
        .filter_map(|(i, w)| {
            let increase = w[1].input_mi - w[0].input_mi;
            (increase > tol).then(|| DpiViolation::InputIncrease {
                from: i,
                to: i + 1,
                from_layer: w[0].layer_id.clone(),
                to_layer: w[1].layer_id.clone(),
                increase,
            })
        })
        .collect();
    let (lo, hi) = points
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
            (lo.min(p.output_mi), hi.max(p.output_mi))
        });
    if !points.is_empty() && hi - lo > tol {
        out.push(DpiViolation::OutputSpread { spread: hi - lo });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn point(input_mi: f64, output_mi: f64) -> IpPoint {
        IpPoint {
            layer_id: "T".into(),
            iteration: 0,
            input_mi,
            output_mi,
            mean_variance: 0.0,
        }
    }

    fn mnist(m: f64, lambda: f64) -> TheoreticalIp {
        TheoreticalIp::for_architecture(&Architecture::mnist(2), m, lambda).unwrap()
    }

    #[test]
    fn surplus_capacity_keeps_everything() {
        let t = theoretical_convergence(&mnist(5.0, 10.0)).unwrap();
        assert_eq!(t.layers.len(), 8);
        for l in &t.layers {
            assert_eq!(l.input_mi, Interval::point(5.0));
            assert_eq!(l.output_mi, 5.0);
        }
    }

    #[test]
    fn narrow_bottleneck_caps_information() {
        let t = theoretical_convergence(&mnist(5.0, 2.0)).unwrap();
        assert!(t.encoder_non_increasing);
        for l in &t.layers {
            assert_eq!(l.output_mi, 2.0);
            match l.role {
                LayerRole::EncoderHidden(_) => {
                    assert_eq!(l.input_mi, Interval { lo: 2.0, hi: 5.0 })
                }
                _ => assert_eq!(l.input_mi, Interval::point(2.0)),
            }
        }
    }

    #[test]
    fn boundary_is_an_error() {
        assert!(matches!(
            theoretical_convergence(&mnist(5.0, 5.0)),
            Err(Error::BoundaryCase)
        ));
        assert!(TheoreticalIp::new(-1.0, 2.0, vec![]).is_err());
    }

    #[test]
    fn feasible_triangle() {
        assert!(feasible_region_check((5.0, 5.0), 5.0));
        assert!(feasible_region_check((0.0, 0.0), 5.0));
        assert!(feasible_region_check((5.0, 0.0), 5.0));
        assert!(!feasible_region_check((3.0, 4.0), 5.0));
        assert!(!feasible_region_check((6.0, 1.0), 5.0));
        assert!(!feasible_region_check((2.0, -0.1), 5.0));
    }

    #[test]
    fn dpi_scan() {
        let pts: Vec<IpPoint> = [4.0, 3.0, 3.5, 2.0]
            .iter()
            .map(|&v| point(v, 1.0))
            .collect();
        let report = dpi_report(&pts, 0.1);
        assert_eq!(report.len(), 1);
        match &report[0] {
            DpiViolation::InputIncrease {
                from, to, increase, ..
            } => {
                assert_eq!((*from, *to), (1, 2));
                assert!((increase - 0.5).abs() < 1e-12);
            }
            other => panic!("unexpected {other:?}"),
        }
        let mono: Vec<IpPoint> = [4.0, 3.0, 3.0, 2.0]
            .iter()
            .map(|&v| point(v, 2.0))
            .collect();
        assert!(dpi_report(&mono, 0.1).is_empty());
        let spread = vec![point(4.0, 2.0), point(3.0, 1.0)];
        assert_eq!(
            dpi_report(&spread, 0.1),
            vec![DpiViolation::OutputSpread { spread: 1.0 }]
        );
    }

    #[test]
    fn oracle_points_are_consistent() {
        for (m, lambda) in [(5.0, 10.0), (5.0, 2.0), (7.0, 0.0), (0.0, 3.0)] {
            let t = theoretical_convergence(&mnist(m, lambda)).unwrap();
            let pts = oracle_points(&t);
            assert!(dpi_report(&pts, 1e-12).is_empty());
            for (p, target) in pts.iter().zip(&t.layers) {
                assert!(target.input_mi.contains(p.input_mi, 1e-12));
                assert!(feasible_region_check((p.input_mi, p.output_mi), m));
            }
        }
    }
}
