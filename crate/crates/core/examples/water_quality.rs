// Pollutant buildup over dry days, washoff by simulated runoff, and the
// load removed by a bio-retention cell.
//
// ```bash
// cargo run --example water_quality
// ```

use lid_eval::hydrology::{self, SimulationSettings, Subcatchment};
use lid_eval::lid::{self, LidCatalog, LidKind, LidPlacement};
use lid_eval::quality::{self, PollutantSpec};
use lid_eval::storm_gen::{self, IdfParams};

pub fn run_example() -> lid_eval::Result<()> {
    let mut tss = PollutantSpec::new("TSS", 60.0, 5.0, 0.08, 1.2);
    tss.removal.insert(LidKind::BioRetention, 0.85);

    for days in [1.0, 3.0, 7.0, 14.0] {
        println!("after {days:>2} dry days: {:.1} kg/ha on the surface", quality::buildup(&tss, days)?);
    }

    let storm = storm_gen::chicago_hyetograph(26.0, 90.0, 0.5, &IdfParams { a: 39.8, b: 11.4, n: 0.8 }, 60)?;
    let sc = Subcatchment::simple("S1", 5.0, 0.7, "J1");
    let catalog = LidCatalog::default();
    let settings = SimulationSettings::default();

    for placements in [vec![], vec![LidPlacement::new("S1", LidKind::BioRetention, 0.1)]] {
        let hydro = hydrology::simulate_subcatchment(&sc, &storm, &placements, &catalog, &settings)?;
        let tf = lid::resolve_treated_fractions(&sc, &placements, &catalog)?;
        let q = quality::simulate_quality(&tss, &sc, &hydro, &placements, &tf, 7.0)?;
        println!(
            "{} LID: built up {:.1} kg, washed {:.1} kg, delivered {:.1} kg, EMC {:.1} mg/L",
            placements.len(),
            q.initial_mass_kg,
            q.washed_off_kg,
            quality::event_load(&q.outlet),
            quality::event_mean_concentration(&q.outlet, &hydro.hydrograph)?
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> lid_eval::Result<()> {
    run_example()
}
