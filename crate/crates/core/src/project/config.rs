//! Project file schema and eager validation.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::ahp::{self, PairwiseMatrix};
use crate::error::{Error, Result};
use crate::evaluator::{self, FacilityMode, FlatNode, IndicatorTable, Source, WeightTree, ZeroColumnPolicy};
use crate::hydrology::{Link, Network, SimulationSettings, Subcatchment};
use crate::lid::{LidCatalog, LidKind, LidSpec, Scenario};
use crate::quality::PollutantSpec;
use crate::storm_gen::{self, AtrcrOptions, Hyetograph, IdfParams, RainRecord, StormShape};

pub const SCHEMA_VERSION: u32 = 1;

fn default_duration() -> f64 {
    90.0
}
fn default_peak_ratio() -> f64 {
    0.5
}
fn default_step() -> u32 {
    60
}
fn default_dry_days() -> f64 {
    7.0
}
fn default_target_atrcr() -> f64 {
    0.75
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StormConfig {
    pub depths_mm: Vec<f64>,
    #[serde(default = "default_duration")]
    pub duration_min: f64,
    #[serde(default = "default_peak_ratio")]
    pub peak_ratio: f64,
    #[serde(default)]
    pub idf: IdfParams,
    #[serde(default = "default_step")]
    pub step_s: u32,
    #[serde(default = "default_dry_days")]
    pub antecedent_dry_days: f64,
    /// Event-depth record (`date,depth_mm`) for ATRCR statistics.
    #[serde(default)]
    pub rain_record: Option<PathBuf>,
    #[serde(default = "default_target_atrcr")]
    pub target_atrcr: f64,
    #[serde(default)]
    pub atrcr: AtrcrOptions,
}

impl StormConfig {
    pub fn shape(&self) -> StormShape {
        StormShape {
            duration_min: self.duration_min,
            peak_ratio: self.peak_ratio,
            idf: self.idf,
            step_s: self.step_s,
        }
    }

    /// Storm label used in file names, e.g. `26mm`.
    pub fn label(depth_mm: f64) -> String {
        format!("{depth_mm}mm")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExistingFacility {
    pub name: String,
    pub volume_m3: f64,
}

fn default_tolerance() -> f64 {
    10.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SizingConfig {
    /// Capture depth; when absent it is read off the ATRCR curve.
    #[serde(default)]
    pub target_depth_mm: Option<f64>,
    #[serde(default)]
    pub existing: Vec<ExistingFacility>,
    /// Shortfall below the required volume tolerated before a scenario is flagged, m³.
    #[serde(default = "default_tolerance")]
    pub tolerance_m3: f64,
}

/// Partial override of a catalog entry; unset fields keep the kind's defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LidOverride {
    pub kind: LidKind,
    pub unit_capacity: Option<f64>,
    pub berm_mm: Option<f64>,
    pub soil_thickness_mm: Option<f64>,
    pub soil_porosity: Option<f64>,
    pub soil_ksat_mm_hr: Option<f64>,
    pub storage_thickness_mm: Option<f64>,
    pub storage_void_ratio: Option<f64>,
    pub underdrain_coeff: Option<f64>,
    pub seepage_mm_hr: Option<f64>,
    #[serde(default)]
    pub favorability: BTreeMap<String, f64>,
    pub unit_cost_weight: Option<f64>,
}

impl LidOverride {
    pub fn apply(&self) -> LidSpec {
        let mut s = LidSpec::default_for(self.kind);
        macro_rules! set {
            ($($f:ident),*) => { $( if let Some(v) = self.$f { s.$f = v; } )* };
        }
        set!(
            unit_capacity,
            berm_mm,
            soil_thickness_mm,
            soil_porosity,
            soil_ksat_mm_hr,
            storage_thickness_mm,
            storage_void_ratio,
            underdrain_coeff,
            seepage_mm_hr,
            unit_cost_weight
        );
        s.favorability.extend(self.favorability.iter().map(|(k, v)| (k.clone(), *v)));
        s
    }
}

/// An externally supplied indicator table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DirectTable {
    pub path: PathBuf,
    /// Already normalized; used verbatim.
    #[serde(default)]
    pub normalized: bool,
}

fn default_zero_policy() -> ZeroColumnPolicy {
    ZeroColumnPolicy::Uniform
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IndicatorConfig {
    #[serde(default)]
    pub direct: Vec<DirectTable>,
    /// Take a leaf from a direct table whenever one provides it.
    #[serde(default)]
    pub prefer_direct: bool,
    /// `None` simulates only when some leaf needs simulated values.
    #[serde(default)]
    pub simulate: Option<bool>,
    #[serde(default = "default_zero_policy")]
    pub zero_column: ZeroColumnPolicy,
}

impl Default for IndicatorConfig {
    fn default() -> Self {
        Self {
            direct: Vec::new(),
            prefer_direct: false,
            simulate: None,
            zero_column: default_zero_policy(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightsConfig {
    /// Pairwise matrices per internal node; overrides hierarchy weights.
    #[serde(default)]
    pub matrices: Option<PathBuf>,
    /// Keep matrices whose CR is at or above the threshold.
    #[serde(default)]
    pub force: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProjectConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub name: String,
    pub storm: StormConfig,
    #[serde(default)]
    pub simulation: SimulationSettings,
    #[serde(default)]
    pub sizing: Option<SizingConfig>,
    #[serde(default)]
    pub subcatchments: Vec<Subcatchment>,
    #[serde(default)]
    pub links: Vec<Link>,
    #[serde(default)]
    pub outfalls: Vec<String>,
    #[serde(default)]
    pub pollutants: Vec<PollutantSpec>,
    #[serde(default)]
    pub lid: Vec<LidOverride>,
    #[serde(default)]
    pub scenarios: Vec<Scenario>,
    #[serde(default)]
    pub hierarchy: Vec<FlatNode>,
    #[serde(default)]
    pub weights: WeightsConfig,
    #[serde(default)]
    pub indicators: IndicatorConfig,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    /// Directory relative paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl ProjectConfig {
    /// Parses a project file without semantic checks.
    pub fn parse(text: &str, base_dir: impl Into<PathBuf>) -> Result<Self> {
        let mut cfg: ProjectConfig = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        cfg.base_dir = base_dir.into();
        Ok(cfg)
    }

    /// Reads, parses and validates a project file.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let cfg = Self::parse(&text, base).map_err(|e| match e {
            Error::Parse(msg) => Error::Parse(format!("{}: {msg}", path.display())),
            other => other,
        })?;
        validate_config(&cfg)?;
        Ok(cfg)
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn catalog(&self) -> LidCatalog {
        let mut catalog = LidCatalog::default();
        for o in &self.lid {
            catalog.insert(o.apply());
        }
        catalog
    }

    pub fn network(&self) -> Network {
        Network {
            links: self.links.clone(),
            outfalls: self.outfalls.clone(),
        }
    }

    pub fn storms(&self) -> Result<Vec<Hyetograph>> {
        storm_gen::design_storm_suite(&self.storm.depths_mm, &self.storm.shape())
    }

    pub fn rain_record(&self) -> Result<Option<RainRecord>> {
        let Some(p) = &self.storm.rain_record else { return Ok(None) };
        let path = self.resolve(p);
        let file = fs::File::open(&path).map_err(|e| Error::io(&path, e))?;
        RainRecord::from_csv(file).map(Some)
    }

    pub fn matrices(&self) -> Result<Option<BTreeMap<String, PairwiseMatrix>>> {
        let Some(p) = &self.weights.matrices else { return Ok(None) };
        let path = self.resolve(p);
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        ahp::parse_matrices(&text).map(Some)
    }

    /// The hierarchy with final weights, from matrices when given.
    pub fn weight_tree(&self) -> Result<(WeightTree, BTreeMap<String, ahp::ConsistencyReport>)> {
        match self.matrices()? {
            Some(mats) => {
                let skeleton = WeightTree::from_flat(&self.hierarchy, false)?;
                ahp::weight_tree(&skeleton, &mats, self.weights.force)
            }
            None => Ok((WeightTree::from_flat(&self.hierarchy, true)?, BTreeMap::new())),
        }
    }

    pub fn direct_tables(&self) -> Result<Vec<(DirectTable, IndicatorTable)>> {
        self.indicators
            .direct
            .iter()
            .map(|d| {
                let path = self.resolve(&d.path);
                let file = fs::File::open(&path).map_err(|e| Error::io(&path, e))?;
                let table = IndicatorTable::from_csv(file)
                    .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
                Ok((d.clone(), table))
            })
            .collect()
    }

    /// Ids of the environmental indicators the simulator produces.
    pub fn simulated_indicator_ids(&self) -> Vec<String> {
        let mut ids = vec![
            evaluator::RUNOFF_REDUCTION.to_string(),
            evaluator::PEAK_REDUCTION.to_string(),
            evaluator::PEAK_DELAY.to_string(),
        ];
        ids.extend(self.pollutants.iter().map(|p| evaluator::pollutant_indicator(&p.name)));
        ids
    }

    pub fn scenario_names(&self) -> Vec<String> {
        self.scenarios.iter().map(|s| s.name.clone()).collect()
    }
}

/// Checks every section and reports all problems at once.
pub fn validate_config(cfg: &ProjectConfig) -> Result<()> {
    let mut errs: Vec<String> = Vec::new();
    let mut push = |section: &str, msg: String| errs.push(format!("[{section}] {msg}"));

    if cfg.schema_version != SCHEMA_VERSION {
        push(
            "schema_version",
            format!("unsupported schema version {} (expected {SCHEMA_VERSION})", cfg.schema_version),
        );
    }

    // storm
    let st = &cfg.storm;
    if st.depths_mm.is_empty() {
        push("storm", "depths_mm is empty".into());
    }
    match cfg.storms() {
        Ok(storms) => {
            if let Some(first) = storms.first() {
                if let Err(e) = cfg.simulation.validate(first) {
                    push("simulation", e.to_string());
                }
            }
        }
        Err(e) => push("storm", e.to_string()),
    }
    if !(st.antecedent_dry_days >= 0.0) {
        push("storm", "antecedent_dry_days must be >= 0".into());
    }
    if !(st.target_atrcr > 0.0 && st.target_atrcr < 1.0) {
        push("storm", "target_atrcr must lie in (0, 1)".into());
    }
    if let Err(e) = cfg.rain_record() {
        push("storm.rain_record", e.to_string());
    }

    // catchment
    let mut ids = BTreeSet::new();
    for sc in &cfg.subcatchments {
        if !ids.insert(sc.id.as_str()) {
            push("subcatchments", format!("duplicate id '{}'", sc.id));
        }
        for p in sc.problems() {
            push(&format!("subcatchments.{}", sc.id), p);
        }
    }
    let network = cfg.network();
    if !cfg.subcatchments.is_empty() {
        if cfg.outfalls.is_empty() {
            push("outfalls", "no outfalls defined".into());
        }
        if let Err(e) = network.topological_order() {
            push("links", e.to_string());
        }
        for sc in &cfg.subcatchments {
            if !network.contains_node(&sc.outlet) {
                push(
                    &format!("subcatchments.{}", sc.id),
                    format!("outlet '{}' is not a link end or outfall", sc.outlet),
                );
            }
        }
    }

    // pollutants
    let mut pnames = BTreeSet::new();
    for p in &cfg.pollutants {
        if !pnames.insert(p.name.to_lowercase()) {
            push("pollutants", format!("duplicate pollutant '{}'", p.name));
        }
        for msg in p.problems() {
            push(&format!("pollutants.{}", p.name), msg);
        }
    }

    // lid catalog
    let catalog = cfg.catalog();
    let mut kinds = BTreeSet::new();
    for o in &cfg.lid {
        if !kinds.insert(o.kind) {
            push("lid", format!("kind '{}' listed twice", o.kind));
        }
    }
    for spec in catalog.specs() {
        for msg in spec.problems() {
            push(&format!("lid.{}", spec.kind), msg);
        }
    }

    // scenarios
    let mut snames = BTreeSet::new();
    for s in &cfg.scenarios {
        if !snames.insert(s.name.as_str()) {
            push("scenarios", format!("duplicate scenario '{}'", s.name));
        }
        for msg in s.problems(&cfg.subcatchments, &catalog) {
            push(&format!("scenarios.{}", s.name), msg);
        }
    }

    // sizing
    if let Some(sz) = &cfg.sizing {
        if !cfg.subcatchments.iter().any(|s| !s.land_uses.is_empty()) {
            push("sizing", "needs land uses on the subcatchments".into());
        }
        if sz.target_depth_mm.is_none() && cfg.storm.rain_record.is_none() {
            push("sizing", "set target_depth_mm or storm.rain_record".into());
        }
        if let Some(d) = sz.target_depth_mm {
            if !(d > 0.0) {
                push("sizing", "target_depth_mm must be > 0".into());
            }
        }
        if !(sz.tolerance_m3 >= 0.0) {
            push("sizing", "tolerance_m3 must be >= 0".into());
        }
        for f in &sz.existing {
            if !(f.volume_m3 >= 0.0) {
                push("sizing.existing", format!("'{}' has a negative volume", f.name));
            }
        }
    }

    // hierarchy, weights and indicator sources
    if cfg.hierarchy.is_empty() {
        if !cfg.scenarios.is_empty() {
            push("hierarchy", "scenarios are defined but no indicator hierarchy".into());
        }
    } else {
        match cfg.weight_tree() {
            Err(e) => push("hierarchy", e.to_string()),
            Ok((tree, _)) => {
                let direct = match cfg.direct_tables() {
                    Ok(d) => d,
                    Err(e) => {
                        push("indicators.direct", e.to_string());
                        Vec::new()
                    }
                };
                for (d, t) in &direct {
                    for name in cfg.scenario_names() {
                        if !t.scenarios.contains(&name) {
                            push(
                                "indicators.direct",
                                format!("{} has no row for scenario '{name}'", d.path.display()),
                            );
                        }
                    }
                }
                let simulated = cfg.simulated_indicator_ids();
                for leaf in tree.leaves() {
                    let in_direct = direct.iter().any(|(_, t)| t.indicators.contains(&leaf.name));
                    let b = leaf.binding();
                    let ok = match b.source {
                        Source::Direct => in_direct,
                        Source::Simulated => {
                            (cfg.indicators.prefer_direct && in_direct)
                                || (simulated.contains(&leaf.name) && !cfg.subcatchments.is_empty())
                        }
                        Source::FacilityDerived => {
                            if cfg.indicators.prefer_direct && in_direct {
                                true
                            } else {
                                facility_scores_defined(cfg, &catalog, &leaf.name, b.mode, &mut |m| {
                                    push("lid", m)
                                })
                            }
                        }
                    };
                    if !ok {
                        push(
                            &format!("hierarchy.{}", leaf.name),
                            format!("no {:?} source provides this indicator", b.source).to_lowercase(),
                        );
                    }
                }
            }
        }
    }

    if errs.is_empty() {
        Ok(())
    } else {
        Err(Error::InvalidConfig(errs))
    }
}

fn facility_scores_defined(
    cfg: &ProjectConfig,
    catalog: &LidCatalog,
    indicator: &str,
    mode: FacilityMode,
    report: &mut impl FnMut(String),
) -> bool {
    if mode == FacilityMode::Reciprocal {
        return true;
    }
    let used: BTreeSet<LidKind> = cfg
        .scenarios
        .iter()
        .flat_map(|s| s.placements.iter().filter(|p| p.area_ha > 0.0).map(|p| p.kind))
        .collect();
    let mut ok = true;
    for kind in used {
        if catalog.get(kind).map(|s| !s.favorability.contains_key(indicator)).unwrap_or(true) {
            report(format!("kind '{kind}' has no favorability score for '{indicator}'"));
            ok = false;
        }
    }
    ok
}

/// ATRCR helper shared by the CLI and the pipeline.
pub fn target_depth(cfg: &ProjectConfig) -> Result<Option<f64>> {
    if let Some(d) = cfg.sizing.as_ref().and_then(|s| s.target_depth_mm) {
        return Ok(Some(d));
    }
    match cfg.rain_record()? {
        Some(rec) => storm_gen::invert_atrcr(&rec, cfg.storm.target_atrcr, &cfg.storm.atrcr).map(Some),
        None => Ok(None),
    }
}
