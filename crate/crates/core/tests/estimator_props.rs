use infoplane_core::mi::{
    gaussian_gram, mutual_information, mutual_information_fixed_width, renyi_entropy, WidthRule,
};
use infoplane_core::{DataMatrix, EntropySettings, SymMatrix};
use proptest::prelude::*;

mod common;
use common::jacobi_eigenvalues;

/// Matrix-based Rényi entropy written out directly: dense Gram, Jacobi
/// spectrum, `log2(Σ λ^α) / (1 − α)`.
fn entropy_oracle(gram: &SymMatrix, alpha: f64) -> f64 {
    let power: f64 = jacobi_eigenvalues(gram)
        .iter()
        .map(|&l| if l > 0.0 { l.powf(alpha) } else { 0.0 })
        .sum();
    power.log2() / (1.0 - alpha)
}

fn gram_oracle(x: &DataMatrix, sigma: f64) -> SymMatrix {
    let n = x.rows();
    SymMatrix::from_fn(n, |i, j| {
        let d: f64 = x
            .row(i)
            .iter()
            .zip(x.row(j))
            .map(|(a, b)| (a - b).powi(2))
            .sum();
        (-d / (2.0 * sigma * sigma)).exp() / n as f64
    })
}

fn mi_oracle(x: &DataMatrix, y: &DataMatrix, sigma: f64, alpha: f64) -> f64 {
    let (a, b) = (gram_oracle(x, sigma), gram_oracle(y, sigma));
    let n = a.order();
    let prod = SymMatrix::from_fn(n, |i, j| a.get(i, j) * b.get(i, j));
    let tr = prod.trace();
    let joint = SymMatrix::from_fn(n, |i, j| prod.get(i, j) / tr);
    entropy_oracle(&a, alpha) + entropy_oracle(&b, alpha) - entropy_oracle(&joint, alpha)
}

fn data(rows: usize, cols: usize, range: f64) -> impl Strategy<Value = DataMatrix> {
    prop::collection::vec(-range..range, rows * cols)
        .prop_map(move |v| DataMatrix::new(rows, cols, v).unwrap())
}

fn pair() -> impl Strategy<Value = (DataMatrix, DataMatrix)> {
    (4usize..16, 1usize..6, 1usize..6)
        .prop_flat_map(|(n, dx, dy)| (data(n, dx, 3.0), data(n, dy, 3.0)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fixed_width_matches_direct_oracle((x, y) in pair(), sigma in 0.3..5.0f64) {
        let settings = EntropySettings::default();
        let got = mutual_information_fixed_width(&x, &y, sigma, &settings).unwrap();
        let want = mi_oracle(&x, &y, sigma, settings.alpha());
        prop_assert!((got - want).abs() < 1e-9, "{} vs {}", got, want);
    }

    #[test]
    fn gram_spectrum_is_a_distribution(x in (2usize..20, 1usize..5).prop_flat_map(|(n, d)| data(n, d, 5.0)), sigma in 0.01..50.0f64) {
        let g = gaussian_gram(&x, sigma).unwrap();
        let eig = g.eigenvalues().unwrap();
        prop_assert!((eig.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        prop_assert!(eig.iter().all(|&l| (0.0..=1.0).contains(&l)));
        for i in 0..x.rows() {
            prop_assert_eq!(g.matrix().get(i, i), 1.0 / x.rows() as f64);
        }
    }

    #[test]
    fn entropy_bounded_by_log_n(x in (2usize..20, 1usize..5).prop_flat_map(|(n, d)| data(n, d, 5.0)), sigma in 0.01..50.0f64) {
        let settings = EntropySettings::default();
        let s = renyi_entropy(&gaussian_gram(&x, sigma).unwrap(), &settings).unwrap();
        prop_assert!(s >= -1e-9 && s <= (x.rows() as f64).log2() + 1e-9);
    }

    #[test]
    fn mi_bounded_and_symmetric((x, y) in pair(), gamma in 0.1..10.0f64) {
        let settings = EntropySettings::default();
        let rule = WidthRule::new_rule(gamma).unwrap();
        let xy = mutual_information(&x, &y, &rule, &settings).unwrap().value_bits;
        let yx = mutual_information(&y, &x, &rule, &settings).unwrap().value_bits;
        let cap = (x.rows() as f64).log2();
        prop_assert!(xy >= -1e-6 && xy <= cap + 1e-6, "{}", xy);
        prop_assert!((xy - yx).abs() < 1e-9);
    }

    #[test]
    fn self_information_is_entropy(x in (3usize..16, 1usize..5).prop_flat_map(|(n, d)| data(n, d, 3.0)), sigma in 0.3..5.0f64) {
        let settings = EntropySettings::default();
        let i = mutual_information_fixed_width(&x, &x, sigma, &settings).unwrap();
        let s = renyi_entropy(&gaussian_gram(&x, sigma).unwrap(), &settings).unwrap();
        // A∘A renormalized is not A, so only the bounds relation is exact.
        prop_assert!(i <= s + 1e-9);
        prop_assert!(i >= -1e-9);
    }

    #[test]
    fn new_rule_ignores_per_dimension_scale(
        (x, y) in pair(),
        sx in prop::collection::vec(-1.0..1.0f64, 6),
        sy in prop::collection::vec(-1.0..1.0f64, 6),
    ) {
        // ε in the normalization keeps this approximate once a dimension's
        // variance nears ε, so factors stay within [0.1, 10].
        let settings = EntropySettings::default();
        let rule = WidthRule::new_rule(1.0).unwrap();
        let fx: Vec<f64> = sx[..x.cols()].iter().map(|e| 10f64.powf(*e)).collect();
        let fy: Vec<f64> = sy[..y.cols()].iter().map(|e| 10f64.powf(*e)).collect();
        let base = mutual_information(&x, &y, &rule, &settings).unwrap().value_bits;
        let scaled = mutual_information(
            &x.scale_columns(&fx).unwrap(),
            &y.scale_columns(&fy).unwrap(),
            &rule,
            &settings,
        )
        .unwrap()
        .value_bits;
        prop_assert!((base - scaled).abs() < 1e-6, "{} vs {}", base, scaled);
    }

    #[test]
    fn saturation_limits(x in (4usize..12, 1usize..4).prop_flat_map(|(n, d)| data(n, d, 1.0))) {
        let settings = EntropySettings::default();
        let n = x.rows() as f64;
        let distinct = (0..x.rows()).all(|i| (0..i).all(|j| x.row(i) != x.row(j)));
        prop_assume!(distinct);
        let narrow = mutual_information_fixed_width(&x, &x, 1e-12, &settings).unwrap();
        let wide = mutual_information_fixed_width(&x, &x, 1e12, &settings).unwrap();
        prop_assert!((narrow - n.log2()).abs() < 1e-6);
        prop_assert!(wide.abs() < 1e-6);
    }
}

#[test]
fn widths_follow_their_formulas() {
    use infoplane_core::mi::{kernel_width_new, kernel_width_old, silverman_width};
    let (n, d) = (128usize, 10usize);
    let decay = (n as f64).powf(-1.0 / 14.0);
    assert!((kernel_width_old(2.0, n, d) - 2.0 * decay).abs() < 1e-15);
    assert!((kernel_width_new(2.0, n, d) - 2.0 * 10f64.sqrt() * decay).abs() < 1e-14);
    // γ = 2√10 under the old rule equals γ = 2 under the new one at d = 10.
    assert!(
        (kernel_width_old(2.0 * 10f64.sqrt(), n, d) - kernel_width_new(2.0, n, d)).abs() < 1e-14
    );
    let s = silverman_width(3.0, n, d);
    assert!((s - (4.0 / 12.0f64).powf(1.0 / 14.0) * 3.0 * decay).abs() < 1e-15);
}
