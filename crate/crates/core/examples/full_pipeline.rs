// Runs a whole project file: storms, sizing, simulation, weights, ranking
// and report tables, written to a directory with a hashed manifest.
//
// ```bash
// cargo run --example full_pipeline -- /tmp/lid-out
// ```

use std::path::PathBuf;

use lid_eval::project::{pipeline, ProjectConfig};

pub fn run_example_in(out: &std::path::Path) -> lid_eval::Result<()> {
    let cfg = ProjectConfig::load(concat!(env!("CARGO_MANIFEST_DIR"), "/data/sports_center.toml"))?;
    let manifest = pipeline::run_pipeline(&cfg, out)?;
    for row in &manifest.compliance {
        println!(
            "scenario {}: {:.0} of {:.0} m3 {}",
            row.scenario,
            row.capacity_m3,
            row.required_m3,
            if row.compliant { "ok" } else { "short" }
        );
    }
    if let Some(r) = &manifest.ranking {
        println!("ranking: {}", r.order.join(" > "));
    }
    if let Some(e) = manifest.max_closure_error {
        println!("largest water-balance error {:.2e}", e);
    }
    println!("{} files under {}", manifest.files.len(), out.display());
    let report = std::fs::read_to_string(out.join("report/report.md")).map_err(|e| lid_eval::Error::io(out, e))?;
    if let Some(last) = report.split("## ").last() {
        println!("## {last}");
    }
    Ok(())
}

pub fn run_example() -> lid_eval::Result<()> {
    run_example_in(&std::env::temp_dir().join("lid-eval-full-pipeline"))
}

#[allow(dead_code)]
fn main() -> lid_eval::Result<()> {
    match std::env::args_os().nth(1) {
        Some(dir) => run_example_in(&PathBuf::from(dir)),
        None => run_example(),
    }
}
