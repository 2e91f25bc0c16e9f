use std::collections::BTreeMap;

mod common;

use approx::assert_relative_eq;
use proptest::prelude::*;

use lid_eval::hydrology::{
    self, horton_rate, HortonParams, Hydrograph, Link, Network, SimulationSettings, Subcatchment,
};
use lid_eval::lid::{self, LidCatalog, LidKind, LidPlacement, LidSpec, Scenario};
use lid_eval::storm_gen::{self, Hyetograph, IdfParams};

fn idf() -> IdfParams {
    IdfParams { a: 39.8, b: 11.4, n: 0.8 }
}

#[test]
fn pervious_plane_matches_fine_step_oracle() {
    let mut sc = Subcatchment::simple("P", 1.0, 0.0, "J");
    sc.dstore_perv_mm = 0.0;
    sc.horton = HortonParams { f0: 12.0, fc: 12.0, k: 1.0 };
    let storm = Hyetograph::from_intensities(300, vec![60.0, 0.0]).unwrap();
    let settings = SimulationSettings {
        step_s: 60,
        tail_min: 120.0,
        ..Default::default()
    };
    let r = hydrology::simulate_subcatchment(&sc, &storm, &[], &LidCatalog::default(), &settings).unwrap();
    let end = (10.0 + 120.0) * 60.0;
    let oracle = common::plane_oracle(sc.area_m2(), sc.width_m, sc.n_perv, sc.slope, 12.0, &[(300.0, 60.0)], end);
    assert!(oracle > 1.0, "oracle produced no runoff");
    assert_relative_eq!(r.balance.runoff_m3, oracle, max_relative = 0.01);
}

#[test]
fn bio_retention_matches_fine_step_oracle() {
    let spec = LidSpec::default_for(LidKind::BioRetention);
    let area = 10.0;
    // 2.5 m3 then 1.0 m3 over two 5-minute intervals, then a 3-hour drain.
    let flows_lps = vec![2500.0 / 300.0, 1000.0 / 300.0];
    let mut padded = flows_lps.clone();
    padded.resize(2 + 36, 0.0);
    let inflow = Hydrograph::new("in", 300, padded);
    let settings = SimulationSettings {
        step_s: 300,
        ..Default::default()
    };
    let r = lid::simulate_lid_unit(&spec, area, &inflow, &[], &settings).unwrap();
    let oracle = common::bucket_oracle(&spec, area, &[(300.0, 2.5 / 300.0), (600.0, 1.0 / 300.0)], 38.0 * 300.0);
    assert!(r.overflow_m3 > 0.0 && r.underdrain_m3 > 0.0);
    assert_relative_eq!(r.outflow_m3(), oracle, max_relative = 0.01);
    assert!(r.closure_error() < 1e-9);
}

#[test]
fn horton_half_hour() {
    let f = horton_rate(&HortonParams { f0: 76.2, fc: 3.81, k: 4.14 }, 0.5).unwrap();
    assert!((f - (3.81 + 72.39 * (-2.07f64).exp())).abs() < 0.01);
    assert!((f - 12.95).abs() < 0.01);
}

#[test]
fn storage_tank_bucket() {
    let spec = LidSpec::default_for(LidKind::StorageTank);
    let inflow = Hydrograph::new("in", 60, vec![150.0 * 1000.0 / 60.0]);
    let r = lid::simulate_lid_unit(&spec, 100.0, &inflow, &[], &SimulationSettings::default()).unwrap();
    assert_relative_eq!(r.final_storage_m3, 100.0, epsilon = 1e-9);
    assert_relative_eq!(r.overflow_m3, 50.0, epsilon = 1e-9);
    assert_eq!(r.infiltration_m3, 0.0);
}

#[test]
fn two_branch_merge_by_hand() {
    let net = Network {
        links: vec![
            Link { id: "a".into(), from: "J1".into(), to: "J3".into(), lag_s: 60.0, capacity_lps: None },
            Link { id: "b".into(), from: "J2".into(), to: "J3".into(), lag_s: 0.0, capacity_lps: None },
            Link { id: "c".into(), from: "J3".into(), to: "O".into(), lag_s: 120.0, capacity_lps: None },
        ],
        outfalls: vec!["O".into()],
    };
    let inflows = BTreeMap::from([
        ("J1".to_string(), Hydrograph::new("J1", 60, vec![1.0, 2.0, 3.0, 4.0, 5.0])),
        ("J2".to_string(), Hydrograph::new("J2", 60, vec![10.0, 0.0, 10.0, 0.0, 10.0])),
    ]);
    let out = hydrology::route(&inflows, &net).unwrap();
    // J1 arrives 3 steps late, J2 two steps late.
    let expect = [0.0, 0.0, 10.0, 1.0, 12.0, 3.0, 14.0, 5.0];
    assert_eq!(out["O"].flows, expect);
}

fn subcatchment_strategy() -> impl Strategy<Value = Subcatchment> {
    (0.5..20.0f64, 0.0..1.0f64, 0.002..0.05f64, 0.5..3.0f64, 10.0..120.0f64, 0.0..3.0f64).prop_map(
        |(area, imp, slope, dstore, f0, ds_imp)| {
            let mut sc = Subcatchment::simple("S", area, imp, "J");
            sc.slope = slope;
            sc.dstore_perv_mm = dstore;
            sc.dstore_imperv_mm = ds_imp;
            sc.horton = HortonParams { f0, fc: f0 / 20.0, k: 4.0 };
            sc
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn subcatchment_water_balance_closes(
        sc in subcatchment_strategy(),
        depth in 2.0..80.0f64,
        r in 0.2..0.8f64,
        bio in 0.0..0.05f64,
        tank in 0.0..0.02f64,
        tf in proptest::option::of(0.0..0.4f64),
    ) {
        let storm = storm_gen::chicago_hyetograph(depth, 90.0, r, &idf(), 60).unwrap();
        let mut placements = vec![
            LidPlacement::new("S", LidKind::BioRetention, bio * sc.area_ha),
            LidPlacement::new("S", LidKind::StorageTank, tank * sc.area_ha),
        ];
        placements[0].treated_fraction = tf;
        let r = hydrology::simulate_subcatchment(&sc, &storm, &placements, &LidCatalog::default(), &SimulationSettings::default()).unwrap();
        prop_assert!(r.balance.closure_error() <= 0.005, "closure {}", r.balance.closure_error());
        prop_assert!(r.hydrograph.flows.iter().all(|q| q.is_finite() && *q >= 0.0));
        for u in &r.lid_units {
            prop_assert!(u.closure_error() <= 0.005);
        }
    }

    #[test]
    fn lid_reduces_runoff(sc in subcatchment_strategy(), depth in 5.0..60.0f64, frac in 0.001..0.05f64) {
        let storm = storm_gen::chicago_hyetograph(depth, 90.0, 0.5, &idf(), 60).unwrap();
        let cat = LidCatalog::default();
        let s = SimulationSettings::default();
        let bare = hydrology::simulate_subcatchment(&sc, &storm, &[], &cat, &s).unwrap();
        let with = hydrology::simulate_subcatchment(&sc, &storm, &[LidPlacement::new("S", LidKind::SunkenGreen, frac * sc.area_ha)], &cat, &s).unwrap();
        prop_assert!(with.balance.runoff_m3 <= bare.balance.runoff_m3 * (1.0 + 1e-9) + 1e-9);
    }

    #[test]
    fn routing_is_linear_and_conserves_volume(
        x in proptest::collection::vec(0.0..100.0f64, 1..30),
        y in proptest::collection::vec(0.0..100.0f64, 1..30),
        a in 0.0..5.0f64,
        b in 0.0..5.0f64,
        lag in 0u32..10,
    ) {
        let net = Network {
            links: vec![
                Link { id: "l1".into(), from: "J1".into(), to: "O".into(), lag_s: (lag * 60) as f64, capacity_lps: None },
                Link { id: "l2".into(), from: "J2".into(), to: "O".into(), lag_s: 30.0, capacity_lps: None },
            ],
            outfalls: vec!["O".into()],
        };
        let route = |u: &[f64], v: &[f64]| {
            let m = BTreeMap::from([
                ("J1".to_string(), Hydrograph::new("J1", 60, u.to_vec())),
                ("J2".to_string(), Hydrograph::new("J2", 60, v.to_vec())),
            ]);
            hydrology::route(&m, &net).unwrap().remove("O").unwrap()
        };
        let scale = |u: &[f64], c: f64| u.iter().map(|v| v * c).collect::<Vec<_>>();
        let combined = route(&scale(&x, a), &scale(&y, b));
        let rx = route(&x, &vec![0.0; y.len()]);
        let ry = route(&vec![0.0; x.len()], &y);
        for i in 0..combined.len() {
            let lhs = combined.flows[i];
            let rhs = a * rx.flows.get(i).copied().unwrap_or(0.0) + b * ry.flows.get(i).copied().unwrap_or(0.0);
            prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + lhs.abs()));
        }
        let vin: f64 = (x.iter().map(|v| v * a).sum::<f64>() + y.iter().map(|v| v * b).sum::<f64>()) * 60.0 / 1000.0;
        prop_assert!((combined.volume_m3() - vin).abs() <= 1e-9 * (1.0 + vin));
    }

    #[test]
    fn control_capacity_is_linear(
        areas in proptest::collection::vec(0.0..2.0f64, 5),
        more in proptest::collection::vec(0.0..2.0f64, 5),
        c in 0.0..10.0f64,
    ) {
        let cat = LidCatalog::default();
        let mk = |v: &[f64]| Scenario::from_areas("s", &LidKind::ALL.iter().copied().zip(v.iter().copied()).collect::<Vec<_>>());
        let cap = |v: &[f64]| lid::control_capacity(&mk(v), &cat).unwrap();
        let scaled: Vec<f64> = areas.iter().map(|a| a * c).collect();
        let sum: Vec<f64> = areas.iter().zip(&more).map(|(a, b)| a + b).collect();
        prop_assert!((cap(&scaled) - c * cap(&areas)).abs() <= 1e-9 * (1.0 + cap(&scaled)));
        prop_assert!((cap(&sum) - cap(&areas) - cap(&more)).abs() <= 1e-9 * (1.0 + cap(&sum)));
    }

    #[test]
    fn lid_never_spills_below_capacity(kind in 0usize..5, fill in 0.0..0.999f64, steps in 1usize..20) {
        let spec = LidSpec::default_for(LidKind::ALL[kind]);
        let area = 50.0;
        let total_m3 = spec.static_capacity() * area * fill;
        let q = total_m3 / steps as f64 * 1000.0 / 60.0;
        let inflow = Hydrograph::new("in", 60, vec![q; steps]);
        let r = lid::simulate_lid_unit(&spec, area, &inflow, &[], &SimulationSettings::default()).unwrap();
        prop_assert_eq!(r.overflow_m3, 0.0);
        prop_assert!(r.closure_error() <= 1e-9);
    }

    #[test]
    fn allocation_inverts_capacity(required in 0.0..20000.0f64, raw in proptest::collection::vec(0.01..1.0f64, 5)) {
        let total: f64 = raw.iter().sum();
        let shares: BTreeMap<LidKind, f64> = LidKind::ALL.iter().copied().zip(raw.iter().map(|r| r / total)).collect();
        let cat = LidCatalog::default();
        let areas = lid::allocate_areas(required, &shares, &cat).unwrap();
        let s = Scenario::from_areas("s", &areas.into_iter().collect::<Vec<_>>());
        let cap = lid::control_capacity(&s, &cat).unwrap();
        prop_assert!((cap - required).abs() <= 1e-6 * required.max(1.0));
    }
}

#[test]
fn composite_coefficient_brackets() {
    let uses = [(0.2, 1.0), (0.4, 1.0)].map(|(psi, a)| hydrology::LandUse {
        name: "x".into(),
        runoff_coefficient: psi,
        area_ha: a,
        surface: hydrology::SurfaceClass::Green,
    });
    assert_relative_eq!(hydrology::composite_runoff_coefficient(&uses).unwrap(), 0.3, epsilon = 1e-12);
}
