use approx::assert_abs_diff_eq;
use proptest::prelude::*;

use lid_eval::hydrology::Hydrograph;
use lid_eval::metrics;
use lid_eval::storm_gen::{self, AtrcrOptions, IdfParams, RainRecord};

fn idf() -> IdfParams {
    IdfParams { a: 39.8, b: 11.4, n: 0.8 }
}

#[test]
fn chicago_grid_mass_and_peak() {
    for step in [30u32, 60, 300] {
        for r in [0.25, 0.5, 0.75] {
            let h = storm_gen::chicago_hyetograph(26.0, 90.0, r, &idf(), step).unwrap();
            let mass: f64 = h.intensities.iter().map(|i| i * step as f64 / 3600.0).sum();
            assert!((mass - 26.0).abs() / 26.0 <= 1e-3, "step {step} r {r}: {mass}");
            let peak_min = h.peak_index() as f64 * step as f64 / 60.0;
            let step_min = step as f64 / 60.0;
            assert!((peak_min - r * 90.0).abs() <= step_min, "step {step} r {r}: peak at {peak_min}");
            assert_abs_diff_eq!(h.duration_min, step_min * h.len() as f64, epsilon = 1e-9);
        }
    }
}

#[test]
fn nse_hand_cases() {
    assert_eq!(metrics::nse(&[1.0, 2.0, 3.0], &[1.0, 2.0, 4.0]).unwrap().nse, 0.5);
    let o = [3.0, 1.0, 4.0, 1.0, 5.0];
    assert_eq!(metrics::nse(&o, &o).unwrap().nse, 1.0);
    assert_eq!(metrics::nse(&o, &[2.8; 5]).unwrap().nse, 0.0);
    assert!(metrics::nse(&[2.0, 2.0], &[1.0, 2.0]).is_err());
}

#[test]
fn peak_examples() {
    let p = metrics::peak_stats(&Hydrograph::new("x", 60, vec![0.0, 5.0, 3.0])).unwrap();
    assert_eq!((p.peak_lps, p.peak_time_s), (5.0, 60.0));
    let flat = metrics::peak_stats(&Hydrograph::new("x", 60, vec![2.0; 4])).unwrap();
    assert_eq!(flat.index, 0);
    let tri = metrics::peak_stats(&Hydrograph::new("x", 60, vec![0.0, 1.0, 2.0, 3.0, 2.0, 1.0, 0.0])).unwrap();
    assert_eq!(tri.index, 3);
}

proptest! {
    #[test]
    fn chicago_integrates_to_depth(depth in 1.0..200.0f64, r in 0.05..0.95f64, step in prop::sample::select(vec![30u32, 60, 120, 300, 600])) {
        let h = storm_gen::chicago_hyetograph(depth, 90.0, r, &idf(), step).unwrap();
        prop_assert!(h.intensities.iter().all(|&i| i >= 0.0 && i.is_finite()));
        prop_assert!((h.depth() - depth).abs() <= 1e-3 * depth);
    }

    #[test]
    fn chicago_scales_linearly(depth in 1.0..100.0f64, r in 0.1..0.9f64) {
        let a = storm_gen::chicago_hyetograph(depth, 90.0, r, &idf(), 60).unwrap();
        let b = storm_gen::chicago_hyetograph(2.0 * depth, 90.0, r, &idf(), 60).unwrap();
        for (x, y) in a.intensities.iter().zip(&b.intensities) {
            prop_assert!((2.0 * x - y).abs() <= 1e-12 * y.abs().max(1.0));
        }
    }

    #[test]
    fn atrcr_is_monotone_and_bounded(depths in proptest::collection::vec(0.0..120.0f64, 1..60), h1 in 0.0..150.0f64, h2 in 0.0..150.0f64) {
        prop_assume!(depths.iter().any(|&d| d > 2.0));
        let rec = RainRecord::from_depths(&depths).unwrap();
        let o = AtrcrOptions::default();
        let (lo, hi) = if h1 <= h2 { (h1, h2) } else { (h2, h1) };
        let a = storm_gen::atrcr(&rec, lo, &o).unwrap();
        let b = storm_gen::atrcr(&rec, hi, &o).unwrap();
        prop_assert!((0.0..=1.0).contains(&a) && (0.0..=1.0).contains(&b));
        prop_assert!(a <= b + 1e-15);
        prop_assert_eq!(storm_gen::atrcr(&rec, 0.0, &o).unwrap(), 0.0);
        prop_assert!((storm_gen::atrcr(&rec, rec.max_depth(), &o).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn atrcr_inverse_round_trips(depths in proptest::collection::vec(2.5..120.0f64, 3..60), target in 0.05..0.95f64) {
        let rec = RainRecord::from_depths(&depths).unwrap();
        let o = AtrcrOptions::default();
        let h = storm_gen::invert_atrcr(&rec, target, &o).unwrap();
        prop_assert!(storm_gen::atrcr(&rec, h, &o).unwrap() >= target - 1e-12);
        // Anything 0.01 mm shallower falls short.
        prop_assert!(storm_gen::atrcr(&rec, (h - 0.01).max(0.0), &o).unwrap() < target);
    }

    #[test]
    fn nse_identity_and_mean(o in proptest::collection::vec(-50.0..50.0f64, 2..40)) {
        let mean = o.iter().sum::<f64>() / o.len() as f64;
        prop_assume!(o.iter().any(|v| (v - mean).abs() > 1e-6));
        prop_assert_eq!(metrics::nse(&o, &o).unwrap().nse, 1.0);
        prop_assert!(metrics::nse(&o, &vec![mean; o.len()]).unwrap().nse.abs() < 1e-12);
    }

    #[test]
    fn nse_never_exceeds_one(o in proptest::collection::vec(0.0..50.0f64, 3..40), noise in proptest::collection::vec(-5.0..5.0f64, 40)) {
        prop_assume!(o.windows(2).any(|w| w[0] != w[1]));
        let s: Vec<f64> = o.iter().zip(&noise).map(|(a, b)| a + b).collect();
        let f = metrics::nse(&o, &s).unwrap();
        prop_assert!(f.nse <= 1.0);
        prop_assert_eq!(f.pass, f.nse > 0.5);
    }

    #[test]
    fn reduction_is_antisymmetric(a in 1.0..1e4f64, d in 0.0..1e3f64) {
        prop_assert!((metrics::reduction(a, a + d).unwrap() + 100.0 * d / a).abs() < 1e-9);
        prop_assert!((metrics::reduction(a, a - d).unwrap() - 100.0 * d / a).abs() < 1e-9);
    }
}
