// Compares the simulated baseline hydrograph at one outfall with an observed
// series using the Nash-Sutcliffe efficiency.
//
// ```bash
// cargo run --example nse_validation
// ```

use std::fs::File;

use lid_eval::metrics::{self, TimeSeries};
use lid_eval::project::{pipeline, ProjectConfig};

pub fn run_example() -> lid_eval::Result<()> {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/data");
    let cfg = ProjectConfig::load(format!("{dir}/sports_center.toml"))?;
    let storm = cfg.storms()?.remove(1);
    let run = pipeline::simulate_event(&cfg, &cfg.catalog(), None, "26mm", &storm)?;
    let simulated = TimeSeries::from_hydrograph(&run.outfalls["A"]);

    let path = format!("{dir}/observed_A.csv");
    let observed = TimeSeries::from_csv(File::open(&path).map_err(|e| lid_eval::Error::io(&path, e))?)?;
    let fit = metrics::nse_at_observations(&observed, &simulated)?;
    println!(
        "outfall A: NSE {:.3} over {} observations ({})",
        fit.nse,
        fit.n_points,
        if fit.pass { "acceptable" } else { "not acceptable" }
    );

    let shifted = TimeSeries::new(
        simulated.times_s.iter().map(|t| t + 900.0).collect(),
        simulated.values.clone(),
    )?;
    let late = metrics::nse_at_observations(&observed, &shifted)?;
    println!("same run 15 min late: NSE {:.3}", late.nse);
    Ok(())
}

#[allow(dead_code)]
fn main() -> lid_eval::Result<()> {
    run_example()
}
