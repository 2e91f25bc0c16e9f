// One subcatchment under a 26 mm storm, bare and with a bio-retention cell
// and a storage tank, routed to an outfall through a 2-minute link.
//
// ```bash
// cargo run --example simulate_scenarios
// ```

use std::collections::BTreeMap;

use lid_eval::hydrology::{self, Link, Network, SimulationSettings, Subcatchment};
use lid_eval::lid::{LidCatalog, LidKind, LidPlacement};
use lid_eval::metrics;
use lid_eval::storm_gen::{self, IdfParams};

pub fn run_example() -> lid_eval::Result<()> {
    let storm = storm_gen::chicago_hyetograph(26.0, 90.0, 0.5, &IdfParams { a: 39.8, b: 11.4, n: 0.8 }, 60)?;
    let sc = Subcatchment::simple("S1", 10.0, 0.6, "J1");
    let catalog = LidCatalog::default();
    let settings = SimulationSettings::default();
    let network = Network {
        links: vec![Link {
            id: "L1".into(),
            from: "J1".into(),
            to: "OUT".into(),
            lag_s: 120.0,
            capacity_lps: None,
        }],
        outfalls: vec!["OUT".into()],
    };

    let mut bio = LidPlacement::new("S1", LidKind::BioRetention, 0.15);
    bio.treated_fraction = Some(0.2);
    let mut tank = LidPlacement::new("S1", LidKind::StorageTank, 0.03);
    tank.treated_fraction = Some(0.1);
    let cases = [("bare", vec![]), ("with LID", vec![bio, tank])];

    let mut base: Option<(f64, metrics::PeakStats)> = None;
    for (label, placements) in cases {
        let r = hydrology::simulate_subcatchment(&sc, &storm, &placements, &catalog, &settings)?;
        let routed = hydrology::route(&BTreeMap::from([("J1".to_string(), r.hydrograph.clone())]), &network)?;
        let out = &routed["OUT"];
        let peak = metrics::peak_stats(out)?;
        let b = &r.balance;
        println!(
            "{label:<9} runoff {:7.1} m3, infiltration {:7.1} m3, LID captured {:6.1} m3, closure {:.2e}",
            b.runoff_m3,
            b.infiltration_m3,
            b.lid_captured_m3(),
            b.closure_error()
        );
        println!("          peak {:.1} L/s at minute {:.0}", peak.peak_lps, peak.peak_time_s / 60.0);
        for u in &r.lid_units {
            println!(
                "          {}: in {:.1} m3, infiltrated {:.1}, held {:.1}, spilled {:.1}",
                u.kind,
                u.inflow_m3(),
                u.infiltration_m3,
                u.final_storage_m3,
                u.overflow_m3
            );
        }
        match &base {
            None => base = Some((out.volume_m3(), peak)),
            Some((v, p)) => println!(
                "          runoff reduction {:.1}%, peak reduction {:.1}%",
                metrics::reduction(*v, out.volume_m3())?,
                metrics::reduction(p.peak_lps, peak.peak_lps)?
            ),
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> lid_eval::Result<()> {
    run_example()
}
