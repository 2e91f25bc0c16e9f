use std::path::{Path, PathBuf};

use lid_eval::project::config::validate_config;
use lid_eval::project::report::{self, ReportTables};
use lid_eval::project::{evaluate_project, run_pipeline, ProjectConfig};
use lid_eval::Error;

fn data_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data")
}

fn example() -> ProjectConfig {
    ProjectConfig::load(data_dir().join("sports_center.toml")).unwrap()
}

fn errors_of(cfg: &ProjectConfig) -> Vec<String> {
    match validate_config(cfg) {
        Err(Error::InvalidConfig(list)) => list,
        Err(e) => panic!("unexpected error kind: {e}"),
        Ok(()) => Vec::new(),
    }
}

#[test]
fn example_project_is_valid() {
    assert!(errors_of(&example()).is_empty());
}

#[test]
fn unknown_subcatchment_is_named() {
    let mut cfg = example();
    cfg.scenarios[2].placements[0].subcatchment = "Z".into();
    let errs = errors_of(&cfg);
    assert_eq!(errs.len(), 1, "{errs:?}");
    assert!(errs[0].contains("'Z'") && errs[0].contains("scenarios"), "{}", errs[0]);
}

#[test]
fn oversized_lid_area_is_named() {
    let mut cfg = example();
    cfg.scenarios[0].placements[0].area_ha = 50.0;
    cfg.scenarios[0].placements[0].treated_fraction = None;
    let errs = errors_of(&cfg);
    assert!(errs.iter().any(|e| e.contains("'A'") && e.contains("area")), "{errs:?}");
}

#[test]
fn problems_are_reported_together() {
    let mut cfg = example();
    cfg.schema_version = 9;
    cfg.links[0].to = "nowhere".into();
    cfg.hierarchy.retain(|n| n.name != "landscape");
    let errs = errors_of(&cfg);
    assert!(errs.len() >= 3, "{errs:?}");
}

#[test]
fn unknown_fields_fail_to_parse() {
    let text = std::fs::read_to_string(data_dir().join("sports_center.toml")).unwrap();
    let bad = text.replacen("schema_version = 1", "schema_version = 1\ncolour = \"blue\"", 1);
    let err = ProjectConfig::parse(&bad, data_dir()).unwrap_err();
    assert!(err.is_validation());
}

#[test]
fn zero_scenarios_run_baseline_only() {
    let mut cfg = example();
    cfg.scenarios.clear();
    cfg.indicators.direct.clear();
    validate_config(&cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let manifest = run_pipeline(&cfg, dir.path()).unwrap();
    assert!(manifest.scenarios.is_empty());
    assert!(manifest.ranking.is_none());
    assert!(dir.path().join("hydrographs/baseline__26mm.csv").exists());
    let tables = ReportTables::from_json(&std::fs::read_to_string(dir.path().join("report/report.json")).unwrap()).unwrap();
    let benefits = tables.get("benefits").unwrap();
    assert!(benefits.rows.is_empty());
    assert_eq!(benefits.columns, ["Scenario", "Rank"]);
}

#[test]
fn undersized_scenario_is_flagged() {
    let mut cfg = example();
    let scale = 7000.0 / 8263.0;
    for p in &mut cfg.scenarios[0].placements {
        p.area_ha *= scale;
    }
    let dir = tempfile::tempdir().unwrap();
    let manifest = run_pipeline(&cfg, dir.path()).unwrap();
    let row = manifest.compliance.iter().find(|r| r.scenario == "1").unwrap();
    assert!((row.capacity_m3 - 7000.0).abs() < 1.0);
    assert!(!row.compliant);
    assert!(manifest.compliance.iter().filter(|r| r.scenario != "1").all(|r| r.compliant));
    assert_eq!(lid_eval::project::pipeline::noncompliant(&manifest).into_iter().collect::<Vec<_>>(), ["1"]);
}

#[test]
fn direct_injection_bypasses_hydrology() {
    let mut cfg = example();
    cfg.indicators.simulate = Some(false);
    let results = evaluate_project(&cfg).unwrap();
    assert!(results.runs.is_empty());
    assert_eq!(results.ranking().unwrap().order, ["4", "1", "2", "3", "5"]);
}

#[test]
fn simulated_project_respects_physical_bounds() {
    let results = evaluate_project(&example()).unwrap();
    assert_eq!(results.runs.len(), 18);
    assert!(results.max_closure_error().unwrap() <= 0.005);
    let env = results.environmental.as_ref().unwrap();
    for row in &env.values {
        assert!((10.0..=30.0).contains(&row[0]), "runoff reduction {}", row[0]);
    }
    for run in results.runs.iter().filter(|r| r.scenario != "baseline") {
        let base = results.run("baseline", &run.storm).unwrap();
        for (p, load) in &run.summary.loads_kg {
            assert!(*load <= base.summary.loads_kg[p] * (1.0 + 1e-12), "{} {} {p}", run.scenario, run.storm);
        }
    }
}

#[test]
fn report_json_round_trips() {
    let results = evaluate_project(&example()).unwrap();
    let tables = report::render_tables(&results);
    let back = ReportTables::from_json(&tables.to_json().unwrap()).unwrap();
    assert_eq!(back, tables);
    assert_eq!(back.to_markdown(), tables.to_markdown());
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let cfg = example();
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let ma = run_pipeline(&cfg, a.path()).unwrap();
    let mb = run_pipeline(&cfg, b.path()).unwrap();
    assert_eq!(ma.files, mb.files);
    for rel in ma.files.keys() {
        assert_eq!(
            std::fs::read(a.path().join(rel)).unwrap(),
            std::fs::read(b.path().join(rel)).unwrap(),
            "{rel}"
        );
    }
}

#[test]
fn missing_direct_file_is_a_runtime_error() {
    let mut cfg = example();
    cfg.indicators.direct[0].path = "no_such_table.csv".into();
    let err = evaluate_project(&cfg).unwrap_err();
    assert!(!err.is_validation(), "{err}");
}
