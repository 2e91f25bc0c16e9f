//! Storms, sizing, simulation, indicators, weights and ranking in one pass.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::ahp::ConsistencyReport;
use crate::error::{Error, Result, StageExt};
use crate::evaluator::{
    self, BenefitReport, EventSummary, IndicatorTable, NormalizedTable, Polarity, Ranking, Source, WeightTree,
};
use crate::hydrology::{self, Hydrograph, WaterBalance};
use crate::lid::{self, ExistingCapacity, LidCatalog, LidKind, Scenario};
use crate::metrics;
use crate::quality::{self, Pollutograph};
use crate::storm_gen::Hyetograph;

use super::config::{target_depth, ProjectConfig, StormConfig};
use super::report;

/// Name used for the no-LID run.
pub const BASELINE: &str = "baseline";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LandUseRow {
    pub name: String,
    pub runoff_coefficient: f64,
    pub area_ha: f64,
    pub volume_m3: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplianceRow {
    pub scenario: String,
    pub areas_ha: BTreeMap<LidKind, f64>,
    pub total_area_ha: f64,
    pub capacity_m3: f64,
    pub required_m3: f64,
    /// False when capacity falls short of the required volume by more than the tolerance.
    pub compliant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizingSummary {
    pub land_uses: Vec<LandUseRow>,
    pub area_ha: f64,
    pub composite_coefficient: f64,
    pub target_depth_mm: f64,
    pub total_volume_m3: f64,
    pub existing: ExistingCapacity,
    pub required_m3: f64,
    pub scenarios: Vec<ComplianceRow>,
}

/// One scenario under one storm, routed to the outfalls.
#[derive(Debug, Clone, PartialEq)]
pub struct EventRun {
    pub scenario: String,
    pub storm: String,
    pub outfalls: BTreeMap<String, Hydrograph>,
    /// Pollutant -> outfall -> load series.
    pub loads: BTreeMap<String, BTreeMap<String, Pollutograph>>,
    pub summary: EventSummary,
    pub balance: WaterBalance,
}

/// Everything computed for a project, before anything is written.
#[derive(Debug, Clone)]
pub struct ProjectResults {
    pub storms: Vec<(String, Hyetograph)>,
    pub sizing: Option<SizingSummary>,
    /// Baseline runs first, then scenarios in config order; storms vary fastest.
    pub runs: Vec<EventRun>,
    pub environmental: Option<IndicatorTable>,
    pub facility: Option<IndicatorTable>,
    /// Raw values of every leaf that was normalized here.
    pub raw: Option<IndicatorTable>,
    pub weights: Option<WeightTree>,
    pub consistency: BTreeMap<String, ConsistencyReport>,
    pub report: Option<BenefitReport>,
    /// Leaf -> where its values came from.
    pub leaf_sources: BTreeMap<String, String>,
}

impl ProjectResults {
    pub fn ranking(&self) -> Option<&Ranking> {
        self.report.as_ref().map(|r| &r.ranking)
    }

    pub fn run(&self, scenario: &str, storm: &str) -> Option<&EventRun> {
        self.runs.iter().find(|r| r.scenario == scenario && r.storm == storm)
    }

    /// Largest relative water-balance error over all runs.
    pub fn max_closure_error(&self) -> Option<f64> {
        self.runs.iter().map(|r| r.balance.closure_error()).reduce(f64::max)
    }
}

/// Land-use table aggregated over subcatchments by name, in first-seen order.
pub fn land_use_rows(cfg: &ProjectConfig, depth_mm: f64) -> Result<Vec<LandUseRow>> {
    let mut order: Vec<String> = Vec::new();
    let mut acc: BTreeMap<String, (f64, f64)> = BTreeMap::new();
    for lu in cfg.subcatchments.iter().flat_map(|s| &s.land_uses) {
        if !acc.contains_key(&lu.name) {
            order.push(lu.name.clone());
        }
        let e = acc.entry(lu.name.clone()).or_default();
        e.0 += lu.area_ha;
        e.1 += lu.area_ha * lu.runoff_coefficient;
    }
    order
        .into_iter()
        .map(|name| {
            let (area, weighted) = acc[&name];
            let psi = weighted / area;
            Ok(LandUseRow {
                volume_m3: hydrology::runoff_volume(psi, depth_mm, area)?,
                name,
                runoff_coefficient: psi,
                area_ha: area,
            })
        })
        .collect()
}

pub fn sizing_summary(cfg: &ProjectConfig, catalog: &LidCatalog) -> Result<Option<SizingSummary>> {
    let Some(sz) = &cfg.sizing else { return Ok(None) };
    let depth = target_depth(cfg)?.ok_or_else(|| Error::Config("no target depth for sizing".into()))?;
    let land_uses: Vec<_> = cfg.subcatchments.iter().flat_map(|s| s.land_uses.iter().cloned()).collect();
    let psi = hydrology::composite_runoff_coefficient(&land_uses)?;
    let area: f64 = land_uses.iter().map(|l| l.area_ha).sum();
    let rows = land_use_rows(cfg, depth)?;
    let existing: Vec<(String, f64)> = sz.existing.iter().map(|f| (f.name.clone(), f.volume_m3)).collect();
    let existing = lid::existing_capacity(&existing, psi, area)?;
    let required = lid::required_volume(depth, psi, area, existing.volume_m3)?;
    let scenarios = cfg
        .scenarios
        .iter()
        .map(|s| {
            let capacity = lid::control_capacity(s, catalog)?;
            let compliant = capacity >= required - sz.tolerance_m3;
            if !compliant {
                log::warn!(
                    "scenario '{}' controls {capacity:.0} m3 of the {required:.0} m3 required",
                    s.name
                );
            }
            Ok(ComplianceRow {
                scenario: s.name.clone(),
                areas_ha: s.area_by_kind(),
                total_area_ha: s.total_area_ha(),
                capacity_m3: capacity,
                required_m3: required,
                compliant,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Some(SizingSummary {
        total_volume_m3: hydrology::runoff_volume(psi, depth, area)?,
        land_uses: rows,
        area_ha: area,
        composite_coefficient: psi,
        target_depth_mm: depth,
        existing,
        required_m3: required,
        scenarios,
    }))
}

/// Simulates every subcatchment under `storm` and routes flows and loads to the outfalls.
pub fn simulate_event(
    cfg: &ProjectConfig,
    catalog: &LidCatalog,
    scenario: Option<&Scenario>,
    storm_label: &str,
    storm: &Hyetograph,
) -> Result<EventRun> {
    let network = cfg.network();
    let mut inflows: BTreeMap<String, Hydrograph> = BTreeMap::new();
    let mut load_inflows: BTreeMap<String, BTreeMap<String, Hydrograph>> = BTreeMap::new();
    let mut balance = WaterBalance::default();
    for sc in &cfg.subcatchments {
        let placements: Vec<_> = scenario
            .map(|s| s.in_subcatchment(&sc.id).cloned().collect())
            .unwrap_or_default();
        let res = hydrology::simulate_subcatchment(sc, storm, &placements, catalog, &cfg.simulation)?;
        let treated = lid::resolve_treated_fractions(sc, &placements, catalog)?;
        for spec in &cfg.pollutants {
            let q = quality::simulate_quality(spec, sc, &res, &placements, &treated, cfg.storm.antecedent_dry_days)?;
            load_inflows
                .entry(spec.name.clone())
                .or_default()
                .entry(sc.outlet.clone())
                .or_insert_with(|| Hydrograph::zeros(sc.outlet.clone(), res.hydrograph.step_s, 0))
                .add(&q.outlet.as_series());
        }
        inflows
            .entry(sc.outlet.clone())
            .or_insert_with(|| Hydrograph::zeros(sc.outlet.clone(), res.hydrograph.step_s, 0))
            .add(&res.hydrograph);
        balance.accumulate(&res.balance);
    }
    let outfalls = hydrology::route(&inflows, &network)?;
    let mut loads = BTreeMap::new();
    for spec in &cfg.pollutants {
        let routed = hydrology::route(load_inflows.get(&spec.name).unwrap_or(&BTreeMap::new()), &network)?;
        let per_outfall: BTreeMap<String, Pollutograph> = routed
            .into_iter()
            .map(|(o, h)| (o, Pollutograph::from_series(&spec.name, h)))
            .collect();
        loads.insert(spec.name.clone(), per_outfall);
    }

    let mut total = Hydrograph::zeros("total", cfg.simulation.step_s, 0);
    for h in outfalls.values() {
        total.add(h);
    }
    let (peak_lps, peak_time_s) = match metrics::peak_stats(&total) {
        Ok(p) => (p.peak_lps, p.peak_time_s),
        Err(_) => (0.0, 0.0),
    };
    let summary = EventSummary {
        volume_m3: total.volume_m3(),
        peak_lps,
        peak_time_s,
        loads_kg: loads
            .iter()
            .map(|(p, per)| (p.clone(), per.values().map(quality::event_load).sum()))
            .collect(),
    };
    Ok(EventRun {
        scenario: scenario.map(|s| s.name.clone()).unwrap_or_else(|| BASELINE.to_string()),
        storm: storm_label.to_string(),
        outfalls,
        loads,
        summary,
        balance,
    })
}

/// Baseline and scenario runs for every storm, in parallel. Results come
/// back in a fixed order regardless of scheduling.
pub fn simulate_all(
    cfg: &ProjectConfig,
    catalog: &LidCatalog,
    storms: &[(String, Hyetograph)],
) -> Result<Vec<EventRun>> {
    let mut tasks: Vec<(Option<&Scenario>, &str, &Hyetograph)> = Vec::new();
    for sc in std::iter::once(None).chain(cfg.scenarios.iter().map(Some)) {
        for (label, storm) in storms {
            tasks.push((sc, label.as_str(), storm));
        }
    }
    tasks
        .par_iter()
        .map(|&(sc, label, storm)| simulate_event(cfg, catalog, sc, label, storm))
        .collect()
}

/// Environmental indicators from the runs, averaged over storms.
pub fn environmental_table(cfg: &ProjectConfig, runs: &[EventRun]) -> Result<IndicatorTable> {
    let of = |name: &str| -> Vec<EventSummary> {
        runs.iter().filter(|r| r.scenario == name).map(|r| r.summary.clone()).collect()
    };
    let baseline = of(BASELINE);
    let scenarios: Vec<(String, Vec<EventSummary>)> = cfg.scenarios.iter().map(|s| (s.name.clone(), of(&s.name))).collect();
    let pollutants: Vec<String> = cfg.pollutants.iter().map(|p| p.name.clone()).collect();
    evaluator::evaluate_environmental(&baseline, &scenarios, &pollutants)
}

enum LeafOrigin {
    Direct { table: usize, verbatim: bool },
    Simulated,
    Facility,
}

/// Runs every stage without touching the file system (inputs excepted).
pub fn evaluate_project(cfg: &ProjectConfig) -> Result<ProjectResults> {
    let catalog = cfg.catalog();
    let storms: Vec<(String, Hyetograph)> = cfg
        .storms()
        .stage("storms")?
        .into_iter()
        .zip(&cfg.storm.depths_mm)
        .map(|(h, &d)| (StormConfig::label(d), h))
        .collect();
    let sizing = sizing_summary(cfg, &catalog).stage("sizing")?;

    let (tree, consistency) = if cfg.hierarchy.is_empty() {
        (None, BTreeMap::new())
    } else {
        let (t, c) = cfg.weight_tree().stage("weights")?;
        (Some(t), c)
    };
    let direct = cfg.direct_tables().stage("indicators")?;

    // Decide where each leaf comes from before running anything expensive.
    let mut origins: Vec<(String, Polarity, LeafOrigin)> = Vec::new();
    if let Some(tree) = &tree {
        for leaf in tree.leaves() {
            let b = leaf.binding();
            let direct_hit = direct.iter().position(|(_, t)| t.indicators.contains(&leaf.name));
            let take_direct = b.source == Source::Direct || cfg.indicators.prefer_direct;
            let origin = match (take_direct, direct_hit, b.source) {
                (true, Some(i), _) => LeafOrigin::Direct {
                    table: i,
                    verbatim: direct[i].0.normalized,
                },
                (_, _, Source::Simulated) => LeafOrigin::Simulated,
                (_, _, Source::FacilityDerived) => LeafOrigin::Facility,
                (_, None, Source::Direct) => {
                    return Err(Error::MissingIndicator(leaf.name.clone())).stage("indicators")
                }
                (false, Some(_), Source::Direct) => unreachable!("direct leaves always take direct values"),
            };
            origins.push((leaf.name.clone(), b.polarity, origin));
        }
    }

    let needs_sim = origins.iter().any(|(_, _, o)| matches!(o, LeafOrigin::Simulated));
    let simulate = match cfg.indicators.simulate {
        Some(false) if needs_sim => {
            return Err(Error::Config("simulated indicators requested but simulation is disabled".into()))
                .stage("simulation")
        }
        Some(s) => s,
        None => needs_sim,
    } && !cfg.subcatchments.is_empty();

    let runs = if simulate {
        simulate_all(cfg, &catalog, &storms).stage("simulation")?
    } else {
        Vec::new()
    };
    let environmental = if simulate && !cfg.scenarios.is_empty() {
        Some(environmental_table(cfg, &runs).stage("environmental indicators")?)
    } else {
        None
    };

    let facility_leaves: Vec<(String, evaluator::FacilityMode)> = tree
        .iter()
        .flat_map(|t| t.leaves())
        .filter(|l| origins.iter().any(|(n, _, o)| n == &l.name && matches!(o, LeafOrigin::Facility)))
        .map(|l| (l.name.clone(), l.binding().mode))
        .collect();
    let facility = if !facility_leaves.is_empty() && !cfg.scenarios.is_empty() {
        Some(evaluator::facility_indicator_scores(&cfg.scenarios, &catalog, &facility_leaves).stage("facility indicators")?)
    } else {
        None
    };

    let mut leaf_sources = BTreeMap::new();
    let mut raw = None;
    let mut report = None;
    if let (Some(tree), false) = (&tree, cfg.scenarios.is_empty()) {
        let names = cfg.scenario_names();
        let mut raw_cols: Vec<(String, Vec<f64>)> = Vec::new();
        let mut verbatim_cols: Vec<(String, Vec<f64>)> = Vec::new();
        let mut polarities = BTreeMap::new();
        for (leaf, polarity, origin) in &origins {
            let (table, verbatim, label) = match origin {
                LeafOrigin::Direct { table, verbatim } => {
                    let (d, t) = &direct[*table];
                    (t.select_scenarios(&names).stage("indicators")?, *verbatim, d.path.display().to_string())
                }
                LeafOrigin::Simulated => (
                    environmental.clone().ok_or_else(|| Error::MissingIndicator(leaf.clone())).stage("indicators")?,
                    false,
                    "simulated".to_string(),
                ),
                LeafOrigin::Facility => (
                    facility.clone().ok_or_else(|| Error::MissingIndicator(leaf.clone())).stage("indicators")?,
                    false,
                    "facility_derived".to_string(),
                ),
            };
            let col = table
                .column(leaf)
                .ok_or_else(|| Error::MissingIndicator(leaf.clone()))
                .stage("indicators")?;
            leaf_sources.insert(leaf.clone(), label);
            if verbatim {
                verbatim_cols.push((leaf.clone(), col));
            } else {
                polarities.insert(leaf.clone(), *polarity);
                raw_cols.push((leaf.clone(), col));
            }
        }
        let to_table = |cols: &[(String, Vec<f64>)]| {
            let values = (0..names.len()).map(|m| cols.iter().map(|c| c.1[m]).collect()).collect();
            IndicatorTable::new(names.clone(), cols.iter().map(|c| c.0.clone()).collect(), values)
        };
        let raw_table = to_table(&raw_cols).stage("indicators")?;
        let mut normalized = if raw_cols.is_empty() {
            NormalizedTable::verbatim(&raw_table)
        } else {
            evaluator::normalize(&raw_table, &polarities, cfg.indicators.zero_column).stage("normalization")?
        };
        if !verbatim_cols.is_empty() {
            let v = NormalizedTable::verbatim(&to_table(&verbatim_cols).stage("indicators")?);
            normalized = normalized.merged(&v).stage("normalization")?;
        }
        // Present columns in hierarchy order.
        let order: Vec<String> = origins.iter().map(|(n, _, _)| n.clone()).collect();
        let normalized = NormalizedTable {
            values: (0..names.len())
                .map(|m| order.iter().map(|id| normalized.column(id).expect("column present")[m]).collect())
                .collect(),
            indicators: order,
            scenarios: names.clone(),
        };
        report = Some(evaluator::rollup(tree, &normalized).stage("rollup")?);
        raw = Some(raw_table);
    }

    Ok(ProjectResults {
        storms,
        sizing,
        runs,
        environmental,
        facility,
        raw,
        weights: tree,
        consistency,
        report,
        leaf_sources,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StormInfo {
    pub label: String,
    pub depth_mm: f64,
    pub peak_min: f64,
}

/// Record of one pipeline run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub timestamp: String,
    pub config_hash: String,
    pub storms: Vec<StormInfo>,
    pub scenarios: Vec<String>,
    pub simulated: bool,
    pub max_closure_error: Option<f64>,
    pub compliance: Vec<ComplianceRow>,
    pub ranking: Option<Ranking>,
    /// Output path relative to the run directory -> SHA-256 of its contents.
    pub files: BTreeMap<String, String>,
}

/// Hash of the config and every input file it references.
pub fn config_hash(cfg: &ProjectConfig) -> Result<String> {
    let mut h = Sha256::new();
    h.update(serde_json::to_vec(cfg)?);
    let mut inputs: Vec<PathBuf> = cfg.indicators.direct.iter().map(|d| d.path.clone()).collect();
    inputs.extend(cfg.storm.rain_record.clone());
    inputs.extend(cfg.weights.matrices.clone());
    for p in inputs {
        let path = cfg.resolve(&p);
        h.update(fs::read(&path).map_err(|e| Error::io(&path, e))?);
    }
    Ok(hex::encode(h.finalize()))
}

/// Collects output files in memory so they can be hashed and written in one place.
#[derive(Default)]
pub(crate) struct OutputSet {
    files: BTreeMap<String, Vec<u8>>,
}

impl OutputSet {
    pub(crate) fn add(&mut self, rel: impl Into<String>, bytes: Vec<u8>) {
        self.files.insert(rel.into(), bytes);
    }

    pub(crate) fn add_csv(&mut self, rel: impl Into<String>, f: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<()> {
        let mut buf = Vec::new();
        f(&mut buf)?;
        self.add(rel, buf);
        Ok(())
    }

    pub(crate) fn add_json<T: Serialize>(&mut self, rel: impl Into<String>, value: &T) -> Result<()> {
        let mut buf = serde_json::to_vec_pretty(value)?;
        buf.push(b'\n');
        self.add(rel, buf);
        Ok(())
    }

    pub(crate) fn write(self, out: &Path) -> Result<BTreeMap<String, String>> {
        let mut hashes = BTreeMap::new();
        for (rel, bytes) in self.files {
            let path = out.join(&rel);
            if let Some(dir) = path.parent() {
                fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            }
            fs::write(&path, &bytes).map_err(|e| Error::io(&path, e))?;
            hashes.insert(rel, hex::encode(Sha256::digest(&bytes)));
        }
        Ok(hashes)
    }
}

/// Writes `t_s` plus one column per named series, padding with zeros.
pub(crate) fn wide_csv(step_s: u32, cols: &[(String, &[f64])], buf: &mut Vec<u8>) -> Result<()> {
    let mut w = csv::Writer::from_writer(buf);
    let mut header = vec!["t_s".to_string()];
    header.extend(cols.iter().map(|c| c.0.clone()));
    w.write_record(&header)?;
    let len = cols.iter().map(|c| c.1.len()).max().unwrap_or(0);
    for i in 0..len {
        let mut rec = vec![(i as u64 * step_s as u64).to_string()];
        rec.extend(cols.iter().map(|c| c.1.get(i).copied().unwrap_or(0.0).to_string()));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

fn run_outputs(cfg: &ProjectConfig, results: &ProjectResults, set: &mut OutputSet) -> Result<()> {
    for (label, h) in &results.storms {
        set.add_csv(format!("storms/{label}.csv"), |b| h.write_csv(b))?;
    }
    if results.runs.is_empty() {
        return Ok(());
    }
    let step = cfg.simulation.step_s;
    for run in &results.runs {
        let stem = format!("{}__{}", run.scenario, run.storm);
        let cols: Vec<(String, &[f64])> = run
            .outfalls
            .iter()
            .map(|(o, h)| (format!("{o}_Lps"), h.flows.as_slice()))
            .collect();
        set.add_csv(format!("hydrographs/{stem}.csv"), |b| wide_csv(step, &cols, b))?;
        if !run.loads.is_empty() {
            let cols: Vec<(String, &[f64])> = run
                .loads
                .iter()
                .flat_map(|(p, per)| per.iter().map(move |(o, pg)| (format!("{o}_{p}_kg"), pg.loads_kg.as_slice())))
                .collect();
            set.add_csv(format!("pollutographs/{stem}.csv"), |b| wide_csv(step, &cols, b))?;
        }
    }
    let pollutants: Vec<&str> = cfg.pollutants.iter().map(|p| p.name.as_str()).collect();
    set.add_csv("events.csv", |buf| {
        let mut w = csv::Writer::from_writer(buf);
        let mut header: Vec<String> = ["scenario", "storm", "volume_m3", "peak_Lps", "peak_time_s"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        header.extend(pollutants.iter().map(|p| format!("{p}_kg")));
        w.write_record(&header)?;
        for r in &results.runs {
            let s = &r.summary;
            let mut rec = vec![
                r.scenario.clone(),
                r.storm.clone(),
                s.volume_m3.to_string(),
                s.peak_lps.to_string(),
                s.peak_time_s.to_string(),
            ];
            rec.extend(pollutants.iter().map(|p| s.loads_kg.get(*p).copied().unwrap_or(0.0).to_string()));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    })?;
    set.add_csv("balance.csv", |buf| {
        let mut w = csv::Writer::from_writer(buf);
        w.write_record([
            "scenario",
            "storm",
            "rainfall_m3",
            "runoff_m3",
            "infiltration_m3",
            "evaporation_m3",
            "surface_storage_m3",
            "lid_infiltration_m3",
            "lid_storage_m3",
            "closure_error",
        ])?;
        for r in &results.runs {
            let b = &r.balance;
            w.write_record([
                r.scenario.clone(),
                r.storm.clone(),
                b.rainfall_m3.to_string(),
                b.runoff_m3.to_string(),
                b.infiltration_m3.to_string(),
                b.evaporation_m3.to_string(),
                b.final_surface_storage_m3.to_string(),
                b.lid_infiltration_m3.to_string(),
                b.lid_final_storage_m3.to_string(),
                b.closure_error().to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    })?;
    Ok(())
}

fn evaluation_outputs(results: &ProjectResults, set: &mut OutputSet) -> Result<()> {
    if let Some(t) = &results.environmental {
        set.add_csv("indicators/environmental.csv", |b| t.write_csv(b))?;
    }
    if let Some(t) = &results.facility {
        set.add_csv("indicators/facility.csv", |b| t.write_csv(b))?;
    }
    if let Some(t) = &results.raw {
        set.add_csv("indicators/raw.csv", |b| t.write_csv(b))?;
    }
    if let Some(tree) = &results.weights {
        set.add_json("weights.json", tree)?;
    }
    if !results.consistency.is_empty() {
        set.add_json("consistency.json", &results.consistency)?;
    }
    if let Some(r) = &results.report {
        set.add_csv("indicators/normalized.csv", |b| r.normalized.write_csv(b))?;
        set.add_json("benefit_report.json", r)?;
        set.add_csv("ranking.csv", |buf| {
            let mut w = csv::Writer::from_writer(buf);
            w.write_record(["rank", "scenario", "score"])?;
            for (i, (s, v)) in r.ranking.order.iter().zip(&r.ranking.scores).enumerate() {
                w.write_record([(i + 1).to_string(), s.clone(), v.to_string()])?;
            }
            w.flush().map_err(|e| Error::io("<csv>", e))?;
            Ok(())
        })?;
    }
    if !results.leaf_sources.is_empty() {
        set.add_json("indicators/sources.json", &results.leaf_sources)?;
    }
    Ok(())
}

/// Storm hyetographs only.
pub fn write_storms(cfg: &ProjectConfig, out: &Path) -> Result<Vec<String>> {
    let mut set = OutputSet::default();
    for (h, &d) in cfg.storms()?.iter().zip(&cfg.storm.depths_mm) {
        set.add_csv(format!("storms/{}.csv", StormConfig::label(d)), |b| h.write_csv(b))?;
    }
    Ok(set.write(out)?.into_keys().collect())
}

/// Storms, baseline and scenario runs and the environmental indicators,
/// without weights or ranking.
pub fn simulate_project(cfg: &ProjectConfig) -> Result<ProjectResults> {
    let catalog = cfg.catalog();
    let storms: Vec<(String, Hyetograph)> = cfg
        .storms()
        .stage("storms")?
        .into_iter()
        .zip(&cfg.storm.depths_mm)
        .map(|(h, &d)| (StormConfig::label(d), h))
        .collect();
    if cfg.subcatchments.is_empty() {
        return Err(Error::Config("no subcatchments to simulate".into()));
    }
    let runs = simulate_all(cfg, &catalog, &storms).stage("simulation")?;
    let environmental = if cfg.scenarios.is_empty() {
        None
    } else {
        Some(environmental_table(cfg, &runs).stage("environmental indicators")?)
    };
    Ok(ProjectResults {
        storms,
        sizing: None,
        runs,
        environmental,
        facility: None,
        raw: None,
        weights: None,
        consistency: BTreeMap::new(),
        report: None,
        leaf_sources: BTreeMap::new(),
    })
}

pub fn write_simulation(cfg: &ProjectConfig, results: &ProjectResults, out: &Path) -> Result<Vec<String>> {
    let mut set = OutputSet::default();
    run_outputs(cfg, results, &mut set)?;
    if let Some(t) = &results.environmental {
        set.add_csv("indicators/environmental.csv", |b| t.write_csv(b))?;
    }
    Ok(set.write(out)?.into_keys().collect())
}

/// Runs the full pipeline and writes every result under `out`.
///
/// All files except `manifest.json` depend only on the config and its
/// inputs; the manifest adds a timestamp and the hashes of the others.
pub fn run_pipeline(cfg: &ProjectConfig, out: &Path) -> Result<RunManifest> {
    let results = evaluate_project(cfg)?;
    write_results(cfg, &results, out)
}

pub fn write_results(cfg: &ProjectConfig, results: &ProjectResults, out: &Path) -> Result<RunManifest> {
    let mut set = OutputSet::default();
    run_outputs(cfg, results, &mut set).stage("output")?;
    evaluation_outputs(results, &mut set).stage("output")?;
    if let Some(s) = &results.sizing {
        set.add_json("sizing.json", s).stage("output")?;
    }
    report::add_report_files(results, &mut set).stage("report")?;
    let files = set.write(out).stage("output")?;

    let manifest = RunManifest {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        config_hash: config_hash(cfg)?,
        storms: results
            .storms
            .iter()
            .map(|(label, h)| StormInfo {
                label: label.clone(),
                depth_mm: h.total_depth_mm,
                peak_min: h.peak_index() as f64 * h.step_s as f64 / 60.0,
            })
            .collect(),
        scenarios: cfg.scenario_names(),
        simulated: !results.runs.is_empty(),
        max_closure_error: results.max_closure_error(),
        compliance: results.sizing.as_ref().map(|s| s.scenarios.clone()).unwrap_or_default(),
        ranking: results.ranking().cloned(),
        files,
    };
    let path = out.join("manifest.json");
    let mut bytes = serde_json::to_vec_pretty(&manifest)?;
    bytes.push(b'\n');
    fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
    Ok(manifest)
}

/// Scenarios whose static capacity falls short of the requirement.
pub fn noncompliant(manifest: &RunManifest) -> BTreeSet<&str> {
    manifest
        .compliance
        .iter()
        .filter(|c| !c.compliant)
        .map(|c| c.scenario.as_str())
        .collect()
}
