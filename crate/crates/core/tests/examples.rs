macro_rules! example {
    ($module:ident, $file:literal) => {
        #[allow(dead_code)]
        mod $module {
            include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/", $file));
        }
    };
}

example!(design_storms, "design_storms.rs");
example!(lid_sizing, "lid_sizing.rs");
example!(ahp_weights, "ahp_weights.rs");
example!(table6_ranking, "table6_ranking.rs");
example!(simulate_scenarios, "simulate_scenarios.rs");
example!(water_quality, "water_quality.rs");
example!(nse_validation, "nse_validation.rs");
example!(full_pipeline, "full_pipeline.rs");

#[test]
fn design_storms_runs() {
    design_storms::run_example().unwrap();
}

#[test]
fn lid_sizing_runs() {
    lid_sizing::run_example().unwrap();
}

#[test]
fn ahp_weights_runs() {
    ahp_weights::run_example().unwrap();
}

#[test]
fn table6_ranking_runs() {
    table6_ranking::run_example().unwrap();
}

#[test]
fn simulate_scenarios_runs() {
    simulate_scenarios::run_example().unwrap();
}

#[test]
fn water_quality_runs() {
    water_quality::run_example().unwrap();
}

#[test]
fn nse_validation_runs() {
    nse_validation::run_example().unwrap();
}

#[test]
fn full_pipeline_runs() {
    let dir = tempfile::tempdir().unwrap();
    full_pipeline::run_example_in(dir.path()).unwrap();
}
