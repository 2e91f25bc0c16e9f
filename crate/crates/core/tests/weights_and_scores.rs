use std::collections::BTreeMap;

use approx::assert_abs_diff_eq;
use nalgebra::DMatrix;
use proptest::prelude::*;

use lid_eval::ahp::{self, PairwiseMatrix};
use lid_eval::evaluator::{
    self, IndicatorTable, LeafBinding, Node, NormalizedTable, Polarity, WeightTree, ZeroColumnPolicy,
};

fn labels(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("c{i}")).collect()
}

/// Largest real eigenvalue from a dense general eigen-solve.
fn eigen_oracle(m: &PairwiseMatrix) -> f64 {
    let n = m.len();
    let dm = DMatrix::from_fn(n, n, |i, j| m.entries[i][j]);
    dm.complex_eigenvalues()
        .iter()
        .filter(|c| c.im.abs() < 1e-8)
        .map(|c| c.re)
        .fold(f64::NEG_INFINITY, f64::max)
}

#[test]
fn three_by_three_against_eigen_oracle() {
    let m = PairwiseMatrix::from_upper_triangle(labels(3), &[vec![2.0, 6.0], vec![4.0]]).unwrap();
    let c = ahp::consistency(&m).unwrap();
    assert_abs_diff_eq!(c.lambda_max, eigen_oracle(&m), epsilon = 1e-4);
    assert_abs_diff_eq!(c.lambda_max, 3.0092, epsilon = 1e-4);
    assert_abs_diff_eq!(c.cr, 0.0079, epsilon = 1e-4);
}

#[test]
fn all_ones_gives_uniform() {
    for n in 1..=9 {
        let m = PairwiseMatrix::new(labels(n), vec![vec![1.0; n]; n]).unwrap();
        let w = ahp::derive_weights(&m).unwrap();
        for x in &w.weights {
            assert_abs_diff_eq!(*x, 1.0 / n as f64, epsilon = 1e-12);
        }
    }
}

#[test]
fn strongly_inconsistent_matrix_is_rejected() {
    // a > b > c but c > a, all strongly.
    let m = PairwiseMatrix::from_upper_triangle(labels(3), &[vec![9.0, 1.0 / 9.0], vec![9.0]]).unwrap();
    let c = ahp::consistency(&m).unwrap();
    assert!(c.cr >= 0.1 && !c.pass);
    let tree = WeightTree::unchecked(Node::group(
        "root",
        1.0,
        (0..3).map(|i| Node::leaf(&format!("c{i}"), f64::NAN, LeafBinding::default())).collect(),
    ));
    let err = ahp::weight_tree(&tree, &BTreeMap::from([("root".to_string(), m.clone())]), false).unwrap_err();
    assert!(err.to_string().contains("root"), "{err}");
    assert!(ahp::weight_tree(&tree, &BTreeMap::from([("root".to_string(), m)]), true).is_ok());
}

fn saaty_value() -> impl Strategy<Value = f64> {
    prop::sample::select(vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0]).prop_flat_map(|v| {
        prop::bool::ANY.prop_map(move |inv| if inv { 1.0 / v } else { v })
    })
}

fn reciprocal_matrix() -> impl Strategy<Value = PairwiseMatrix> {
    (3usize..=7).prop_flat_map(|n| {
        proptest::collection::vec(saaty_value(), n * (n - 1) / 2).prop_map(move |cells| {
            let mut it = cells.into_iter();
            let upper: Vec<Vec<f64>> = (0..n).map(|i| (i + 1..n).map(|_| it.next().unwrap()).collect()).collect();
            PairwiseMatrix::from_upper_triangle(labels(n), &upper).unwrap()
        })
    })
}

fn weight_vector() -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(0.01..1.0f64, 2..=9).prop_map(|v| {
        let s: f64 = v.iter().sum();
        v.into_iter().map(|x| x / s).collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn lambda_matches_oracle_and_bounds_n(m in reciprocal_matrix()) {
        let c = ahp::consistency(&m).unwrap();
        let n = m.len() as f64;
        prop_assert!(c.lambda_max >= n - 1e-9);
        prop_assert!((c.lambda_max - eigen_oracle(&m)).abs() < 1e-6);
        let w = ahp::derive_weights(&m).unwrap();
        prop_assert!((w.weights.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        prop_assert!(w.weights.iter().all(|&x| x > 0.0));
    }

    #[test]
    fn consistent_matrix_recovers_weights(w in weight_vector(), c in 0.1..10.0f64) {
        let n = w.len();
        let scaled: Vec<f64> = w.iter().map(|x| x * c).collect();
        let m = PairwiseMatrix::from_weights(labels(n), &scaled).unwrap();
        let got = ahp::derive_weights(&m).unwrap();
        for (a, b) in got.weights.iter().zip(&w) {
            prop_assert!((a - b).abs() < 1e-9);
        }
        let cr = ahp::consistency(&m).unwrap();
        prop_assert!(cr.cr.abs() < 1e-9);
        prop_assert!((cr.lambda_max - n as f64).abs() < 1e-9);
    }

    #[test]
    fn transpose_gives_reciprocal_weights(w in weight_vector()) {
        let m = PairwiseMatrix::from_weights(labels(w.len()), &w).unwrap();
        let t = ahp::derive_weights(&m.transpose()).unwrap();
        let inv: Vec<f64> = w.iter().map(|x| 1.0 / x).collect();
        let s: f64 = inv.iter().sum();
        for (a, b) in t.weights.iter().zip(&inv) {
            prop_assert!((a - b / s).abs() < 1e-9);
        }
    }

    #[test]
    fn geometric_mean_agrees_on_consistent(w in weight_vector()) {
        let m = PairwiseMatrix::from_weights(labels(w.len()), &w).unwrap();
        let g = ahp::geometric_mean_weights(&m).unwrap();
        for (a, b) in g.weights.iter().zip(&w) {
            prop_assert!((a - b).abs() < 1e-9);
        }
    }
}

fn table(values: Vec<Vec<f64>>) -> IndicatorTable {
    let m = values.len();
    let k = values[0].len();
    IndicatorTable::new(
        (1..=m).map(|i| i.to_string()).collect(),
        (0..k).map(|j| format!("x{j}")).collect(),
        values,
    )
    .unwrap()
}

fn matrix(m: usize, k: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    proptest::collection::vec(proptest::collection::vec(0.1..100.0f64, k), m)
}

fn two_level_tree(k: usize, w: &[f64]) -> WeightTree {
    let half = k / 2;
    let leaves = |range: std::ops::Range<usize>| -> Vec<Node> {
        let n = range.len() as f64;
        range.map(|j| Node::leaf(&format!("x{j}"), 1.0 / n, LeafBinding::default())).collect()
    };
    WeightTree::new(Node::group(
        "root",
        1.0,
        vec![Node::group("g0", w[0], leaves(0..half)), Node::group("g1", 1.0 - w[0], leaves(half..k))],
    ))
    .unwrap()
}

#[test]
fn table4_runoff_column_normalizes() {
    let t = IndicatorTable::new(
        (1..=5).map(|i| i.to_string()).collect(),
        vec!["runoff_reduction".into()],
        [19.3, 17.1, 17.8, 19.6, 17.3].iter().map(|&v| vec![v]).collect(),
    )
    .unwrap();
    let n = evaluator::normalize(&t, &BTreeMap::new(), ZeroColumnPolicy::Error).unwrap();
    for (got, want) in n.column("runoff_reduction").unwrap().iter().zip([0.2119, 0.1877, 0.1954, 0.2151, 0.1899]) {
        assert_abs_diff_eq!(*got, want, epsilon = 1e-4);
    }
}

#[test]
fn identical_scenarios_tie() {
    let t = table(vec![vec![1.0, 2.0]; 3]);
    let n = evaluator::normalize(&t, &BTreeMap::new(), ZeroColumnPolicy::Error).unwrap();
    let r = evaluator::rollup(&two_level_tree(2, &[0.5]), &n).unwrap();
    assert!(r.ranking.tie);
    assert_eq!(r.ranking.order, ["1", "2", "3"]);
}

#[test]
fn zero_delta_keeps_ranking() {
    let t = table(vec![vec![3.0, 1.0, 2.0, 5.0], vec![1.0, 4.0, 2.0, 2.0], vec![2.0, 2.0, 9.0, 1.0]]);
    let n = evaluator::normalize(&t, &BTreeMap::new(), ZeroColumnPolicy::Error).unwrap();
    let tree = two_level_tree(4, &[0.7]);
    let s = evaluator::weight_sensitivity(&tree, &n, "g0", 0.0).unwrap();
    assert_eq!(s.plus, s.base);
    assert_eq!(s.minus, s.base);
    assert!(!s.top_changed);
    assert!(evaluator::weight_sensitivity(&tree, &n, "g0", 0.5).is_err());
}

proptest! {
    #[test]
    fn normalized_columns_sum_to_one(v in matrix(5, 4)) {
        let n = evaluator::normalize(&table(v), &BTreeMap::new(), ZeroColumnPolicy::Error).unwrap();
        for j in 0..4 {
            let s: f64 = n.values.iter().map(|r| r[j]).sum();
            prop_assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn normalization_is_scale_invariant_and_idempotent(v in matrix(4, 3), c in 0.01..100.0f64) {
        let p = BTreeMap::from([("x1".to_string(), Polarity::Cost)]);
        let a = evaluator::normalize(&table(v.clone()), &p, ZeroColumnPolicy::Error).unwrap();
        let scaled: Vec<Vec<f64>> = v.iter().map(|r| r.iter().map(|x| x * c).collect()).collect();
        let b = evaluator::normalize(&table(scaled), &p, ZeroColumnPolicy::Error).unwrap();
        let again = evaluator::normalize(&table(a.values.clone()), &BTreeMap::new(), ZeroColumnPolicy::Error).unwrap();
        for i in 0..4 {
            for j in 0..3 {
                prop_assert!((a.values[i][j] - b.values[i][j]).abs() < 1e-12);
                prop_assert!((a.values[i][j] - again.values[i][j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn comprehensive_is_weighted_sum_of_benefits(v in matrix(5, 6), w in 0.05..0.95f64) {
        let n = evaluator::normalize(&table(v), &BTreeMap::new(), ZeroColumnPolicy::Error).unwrap();
        let tree = two_level_tree(6, &[w]);
        let r = evaluator::rollup(&tree, &n).unwrap();
        let g0 = r.scores("g0").unwrap();
        let g1 = r.scores("g1").unwrap();
        for (m, c) in r.comprehensive().iter().enumerate() {
            prop_assert!((c - (w * g0[m] + (1.0 - w) * g1[m])).abs() < 1e-9);
        }
        let total: f64 = r.comprehensive().iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-9);
    }

    #[test]
    fn rollup_is_linear(a in matrix(4, 4), b in matrix(4, 4), s in 0.0..3.0f64, t in 0.0..3.0f64) {
        let tree = two_level_tree(4, &[0.3]);
        let verbatim = |v: &Vec<Vec<f64>>| NormalizedTable::verbatim(&table(v.clone()));
        let mix: Vec<Vec<f64>> = a.iter().zip(&b).map(|(ra, rb)| ra.iter().zip(rb).map(|(x, y)| s * x + t * y).collect()).collect();
        let ra = evaluator::rollup(&tree, &verbatim(&a)).unwrap();
        let rb = evaluator::rollup(&tree, &verbatim(&b)).unwrap();
        let rm = evaluator::rollup(&tree, &verbatim(&mix)).unwrap();
        for m in 0..4 {
            let want = s * ra.comprehensive()[m] + t * rb.comprehensive()[m];
            prop_assert!((rm.comprehensive()[m] - want).abs() < 1e-9 * (1.0 + want.abs()));
        }
    }

    #[test]
    fn perturbed_siblings_still_sum_to_one(w in 0.1..0.9f64, d in -0.09..0.09f64) {
        let tree = two_level_tree(4, &[w]).perturbed("g0", d).unwrap();
        let root = &tree.root;
        let s: f64 = root.children.iter().map(|c| c.weight).sum();
        prop_assert!((s - 1.0).abs() < 1e-12);
        prop_assert!((tree.find("g0").unwrap().weight - (w + d)).abs() < 1e-12);
    }
}
