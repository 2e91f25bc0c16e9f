// Sizing chain: composite runoff coefficient, existing capacity, the volume
// new facilities must hold, and the capacity of each candidate scenario.
//
// ```bash
// cargo run --example lid_sizing
// ```

use lid_eval::hydrology::{self, LandUse, SurfaceClass};
use lid_eval::lid::{self, LidCatalog, LidKind, Scenario};

fn land_use(name: &str, psi: f64, area_ha: f64, surface: SurfaceClass) -> LandUse {
    LandUse {
        name: name.to_string(),
        runoff_coefficient: psi,
        area_ha,
        surface,
    }
}

pub fn run_example() -> lid_eval::Result<()> {
    let uses = [
        land_use("Asphalt roof", 0.90, 12.56, SurfaceClass::Roof),
        land_use("Concrete or asphalt pavement", 0.90, 22.38, SurfaceClass::Road),
        land_use("Courts and track field", 0.90, 2.76, SurfaceClass::Road),
        land_use("Dry masonry pavement", 0.40, 0.77, SurfaceClass::Road),
        land_use("Parking lot", 0.20, 3.15, SurfaceClass::Road),
        land_use("Training field", 0.25, 0.96, SurfaceClass::Green),
        land_use("Football field", 0.15, 1.43, SurfaceClass::Green),
        land_use("Greenland", 0.15, 20.59, SurfaceClass::Green),
    ];
    let area: f64 = uses.iter().map(|u| u.area_ha).sum();
    let psi = hydrology::composite_runoff_coefficient(&uses)?;
    println!("site {area:.2} ha, composite coefficient {psi:.4}");
    println!("26 mm produces {:.0} m3", hydrology::runoff_volume(psi, 26.0, area)?);

    let existing = [
        ("storage tanks".to_string(), 1108.0),
        ("sunken green".to_string(), 571.0),
        ("infiltration pond".to_string(), 50.0),
    ];
    let have = lid::existing_capacity(&existing, psi, area)?;
    let need = lid::required_volume(26.0, psi, area, have.volume_m3)?;
    println!(
        "existing {:.0} m3 (= {:.2} mm); new facilities must hold {need:.0} m3",
        have.volume_m3, have.depth_mm
    );

    use LidKind::*;
    let table = [
        ("1", [0.757, 0.429, 0.847, 0.142, 0.316]),
        ("2", [1.035, 0.529, 0.941, 0.243, 0.189]),
        ("3", [0.850, 0.350, 0.305, 0.325, 0.426]),
        ("4", [1.125, 0.480, 1.500, 0.120, 0.035]),
        ("5", [0.675, 0.780, 0.850, 0.248, 0.281]),
    ];
    let catalog = LidCatalog::default();
    for (name, a) in table {
        let kinds = [BioRetention, GrassedSwale, SunkenGreen, PermeablePavement, StorageTank];
        let areas: Vec<(LidKind, f64)> = kinds.into_iter().zip(a).collect();
        let s = Scenario::from_areas(name, &areas);
        let cap = lid::control_capacity(&s, &catalog)?;
        let p = lid::area_proportions(&s)?;
        println!(
            "scenario {name}: {:.3} ha, {cap:.0} m3, bio-retention {:.1}%, sunken green {:.1}%",
            s.total_area_ha(),
            p[&BioRetention] * 100.0,
            p[&SunkenGreen] * 100.0
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> lid_eval::Result<()> {
    run_example()
}
