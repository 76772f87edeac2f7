use infoplane_core::numkit::{column_stats, hadamard, pairwise_sq_dists, sym_eigenvalues};
use infoplane_core::{DataMatrix, SymMatrix};
use proptest::prelude::*;

mod common;
use common::jacobi_eigenvalues;

fn symmetric(n: usize) -> impl Strategy<Value = SymMatrix> {
    prop::collection::vec(-10.0..10.0f64, n * n).prop_map(move |v| {
        SymMatrix::from_fn(n, |i, j| {
            let (i, j) = if i <= j { (i, j) } else { (j, i) };
            v[i * n + j]
        })
    })
}

fn data(rows: usize, cols: usize) -> impl Strategy<Value = DataMatrix> {
    prop::collection::vec(-100.0..100.0f64, rows * cols)
        .prop_map(move |v| DataMatrix::new(rows, cols, v).unwrap())
}

proptest! {
    #[test]
    fn eigenvalues_match_jacobi(a in (1usize..12).prop_flat_map(symmetric)) {
        let fast = sym_eigenvalues(&a).unwrap();
        let oracle = jacobi_eigenvalues(&a);
        let scale = oracle.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        for (x, y) in fast.iter().zip(&oracle) {
            prop_assert!((x - y).abs() <= 1e-10 * scale, "{:?} vs {:?}", fast, oracle);
        }
    }

    #[test]
    fn eigenvalues_sum_to_trace(a in (1usize..20).prop_flat_map(symmetric)) {
        let eig = sym_eigenvalues(&a).unwrap();
        let sum: f64 = eig.iter().sum();
        let scale = a.as_slice().iter().fold(1.0f64, |m, v| m.max(v.abs())) * a.order() as f64;
        prop_assert!((sum - a.trace()).abs() <= 1e-11 * scale);
        prop_assert!(eig.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn distances_form_a_metric(x in (2usize..8, 1usize..6).prop_flat_map(|(r, c)| data(r, c))) {
        let d = pairwise_sq_dists(&x).unwrap();
        let n = x.rows();
        for i in 0..n {
            prop_assert_eq!(d.get(i, i), 0.0);
            for j in 0..n {
                prop_assert!(d.get(i, j) >= 0.0);
                prop_assert_eq!(d.get(i, j), d.get(j, i));
                for k in 0..n {
                    let direct = d.get(i, k).sqrt();
                    let detour = d.get(i, j).sqrt() + d.get(j, k).sqrt();
                    prop_assert!(direct <= detour * (1.0 + 1e-12) + 1e-9);
                }
            }
        }
    }

    #[test]
    fn distances_match_direct_sum(x in (2usize..6, 1usize..40).prop_flat_map(|(r, c)| data(r, c))) {
        let d = pairwise_sq_dists(&x).unwrap();
        for i in 0..x.rows() {
            for j in 0..x.rows() {
                let direct: f64 = x.row(i).iter().zip(x.row(j)).map(|(a, b)| (a - b) * (a - b)).sum();
                prop_assert!((d.get(i, j) - direct).abs() <= 1e-9 * direct.max(1.0));
            }
        }
    }

    #[test]
    fn hadamard_is_elementwise(a in symmetric(5), b in symmetric(5)) {
        let h = hadamard(&a, &b).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                prop_assert_eq!(h.get(i, j), a.get(i, j) * b.get(i, j));
            }
        }
    }

    #[test]
    fn column_stats_population(x in (1usize..10, 1usize..5).prop_flat_map(|(r, c)| data(r, c))) {
        let (means, stds) = column_stats(&x);
        let n = x.rows() as f64;
        for j in 0..x.cols() {
            let m: f64 = (0..x.rows()).map(|i| x.row(i)[j]).sum::<f64>() / n;
            let var: f64 = (0..x.rows()).map(|i| (x.row(i)[j] - m).powi(2)).sum::<f64>() / n;
            prop_assert!((means[j] - m).abs() <= 1e-9);
            prop_assert!((stds[j] - var.sqrt()).abs() <= 1e-9 * var.sqrt().max(1.0));
        }
    }
}

#[test]
fn jacobi_oracle_on_known_spectrum() {
    let a = SymMatrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
    let eig = jacobi_eigenvalues(&a);
    assert!((eig[0] - 3.0).abs() < 1e-14 && (eig[1] - 1.0).abs() < 1e-14);
}

#[test]
fn large_gram_like_matrix_matches_jacobi() {
    let n = 40;
    let a = SymMatrix::from_fn(n, |i, j| {
        (-((i as f64 - j as f64).powi(2)) / 50.0).exp() / n as f64
    });
    let fast = sym_eigenvalues(&a).unwrap();
    let oracle = jacobi_eigenvalues(&a);
    for (x, y) in fast.iter().zip(&oracle) {
        assert!((x - y).abs() < 1e-13, "{x} vs {y}");
    }
}
