//! LID facilities: catalog, static sizing arithmetic and event-scale unit
//! simulation.
//!
//! Sizing works with a fixed runoff-control capacity per unit surface area
//! (m³ per m²). Event simulation uses a layered fill-and-spill store whose
//! static capacity is the same number, so both views agree on how much a
//! facility can hold.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hydrology::{Hydrograph, SimulationSettings, Subcatchment};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LidKind {
    #[serde(alias = "bioretention", alias = "bio_retention_cell")]
    BioRetention,
    #[serde(alias = "swale", alias = "vegetative_swale")]
    GrassedSwale,
    #[serde(alias = "sunken_green_space", alias = "depressed_green")]
    SunkenGreen,
    #[serde(alias = "porous_pavement", alias = "permeable_paving")]
    PermeablePavement,
    #[serde(alias = "tank", alias = "rain_tank")]
    StorageTank,
}

impl LidKind {
    pub const ALL: [LidKind; 5] = [
        LidKind::BioRetention,
        LidKind::GrassedSwale,
        LidKind::SunkenGreen,
        LidKind::PermeablePavement,
        LidKind::StorageTank,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            LidKind::BioRetention => "bio_retention",
            LidKind::GrassedSwale => "grassed_swale",
            LidKind::SunkenGreen => "sunken_green",
            LidKind::PermeablePavement => "permeable_pavement",
            LidKind::StorageTank => "storage_tank",
        }
    }
}

impl fmt::Display for LidKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for LidKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(s.to_string()))
            .map_err(|_| Error::validation(format!("unknown LID kind '{s}'")))
    }
}

fn one() -> f64 {
    1.0
}

/// Physical and scoring description of one facility kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LidSpec {
    pub kind: LidKind,
    /// Runoff control capacity per unit area, m³/m².
    pub unit_capacity: f64,
    #[serde(default)]
    pub berm_mm: f64,
    #[serde(default)]
    pub soil_thickness_mm: f64,
    #[serde(default = "one")]
    pub soil_porosity: f64,
    #[serde(default)]
    pub soil_ksat_mm_hr: f64,
    #[serde(default)]
    pub storage_thickness_mm: f64,
    #[serde(default = "one")]
    pub storage_void_ratio: f64,
    /// Underdrain outflow `c * head^0.5` (mm/hr, head in mm); 0 disables it.
    #[serde(default)]
    pub underdrain_coeff: f64,
    /// Exfiltration rate into native soil, mm/hr.
    #[serde(default)]
    pub seepage_mm_hr: f64,
    /// Indicator id -> score. Consumed by facility-derived indicators.
    #[serde(default)]
    pub favorability: BTreeMap<String, f64>,
    #[serde(default = "one")]
    pub unit_cost_weight: f64,
}

impl LidSpec {
    /// Default layering for each kind; static capacity equals the unit capacity.
    pub fn default_for(kind: LidKind) -> Self {
        let base = LidSpec {
            kind,
            unit_capacity: 0.0,
            berm_mm: 0.0,
            soil_thickness_mm: 0.0,
            soil_porosity: 1.0,
            soil_ksat_mm_hr: 0.0,
            storage_thickness_mm: 0.0,
            storage_void_ratio: 1.0,
            underdrain_coeff: 0.0,
            seepage_mm_hr: 0.0,
            favorability: BTreeMap::new(),
            unit_cost_weight: 1.0,
        };
        match kind {
            LidKind::BioRetention => LidSpec {
                unit_capacity: 0.3,
                berm_mm: 150.0,
                soil_thickness_mm: 300.0,
                soil_porosity: 0.4,
                soil_ksat_mm_hr: 50.0,
                storage_thickness_mm: 100.0,
                storage_void_ratio: 0.3,
                underdrain_coeff: 1.0,
                seepage_mm_hr: 10.0,
                ..base
            },
            LidKind::GrassedSwale => LidSpec {
                unit_capacity: 0.15,
                berm_mm: 150.0,
                seepage_mm_hr: 12.0,
                ..base
            },
            LidKind::SunkenGreen => LidSpec {
                unit_capacity: 0.25,
                berm_mm: 100.0,
                soil_thickness_mm: 150.0,
                soil_porosity: 0.5,
                soil_ksat_mm_hr: 30.0,
                storage_thickness_mm: 300.0,
                storage_void_ratio: 0.25,
                seepage_mm_hr: 8.0,
                ..base
            },
            LidKind::PermeablePavement => LidSpec {
                unit_capacity: 0.05,
                storage_thickness_mm: 250.0,
                storage_void_ratio: 0.2,
                seepage_mm_hr: 5.0,
                ..base
            },
            LidKind::StorageTank => LidSpec {
                unit_capacity: 1.0,
                storage_thickness_mm: 1000.0,
                storage_void_ratio: 1.0,
                ..base
            },
        }
    }

    /// Water held by the layers when full, m³ per m² of facility.
    pub fn static_capacity(&self) -> f64 {
        (self.berm_mm + self.soil_thickness_mm * self.soil_porosity + self.storage_thickness_mm * self.storage_void_ratio)
            / 1000.0
    }

    fn storage_capacity_mm(&self) -> f64 {
        self.storage_thickness_mm * self.storage_void_ratio
    }

    fn exfiltration_mm_hr(&self) -> f64 {
        if self.kind == LidKind::StorageTank {
            return 0.0;
        }
        if self.soil_thickness_mm > 0.0 {
            self.seepage_mm_hr.min(self.soil_ksat_mm_hr)
        } else {
            self.seepage_mm_hr
        }
    }

    pub fn problems(&self) -> Vec<String> {
        let k = self.kind;
        let mut out = Vec::new();
        if !(self.unit_capacity > 0.0) {
            out.push(format!("lid '{k}': unit_capacity must be > 0"));
        }
        for (name, v) in [("soil_porosity", self.soil_porosity), ("storage_void_ratio", self.storage_void_ratio)] {
            if !(v > 0.0 && v <= 1.0) {
                out.push(format!("lid '{k}': {name} must lie in (0, 1]"));
            }
        }
        for (name, v) in [
            ("berm_mm", self.berm_mm),
            ("soil_thickness_mm", self.soil_thickness_mm),
            ("soil_ksat_mm_hr", self.soil_ksat_mm_hr),
            ("storage_thickness_mm", self.storage_thickness_mm),
            ("underdrain_coeff", self.underdrain_coeff),
            ("seepage_mm_hr", self.seepage_mm_hr),
        ] {
            if !(v >= 0.0) {
                out.push(format!("lid '{k}': {name} must be >= 0"));
            }
        }
        if let Some((ind, _)) = self.favorability.iter().find(|(_, &v)| !(v >= 0.0)) {
            out.push(format!("lid '{k}': favorability for '{ind}' must be >= 0"));
        }
        if !(self.unit_cost_weight > 0.0) {
            out.push(format!("lid '{k}': unit_cost_weight must be > 0"));
        }
        out
    }
}

/// Facility specs keyed by kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LidCatalog {
    specs: BTreeMap<LidKind, LidSpec>,
}

impl Default for LidCatalog {
    fn default() -> Self {
        Self {
            specs: LidKind::ALL.iter().map(|&k| (k, LidSpec::default_for(k))).collect(),
        }
    }
}

impl LidCatalog {
    pub fn new(specs: impl IntoIterator<Item = LidSpec>) -> Self {
        Self {
            specs: specs.into_iter().map(|s| (s.kind, s)).collect(),
        }
    }

    pub fn get(&self, kind: LidKind) -> Result<&LidSpec> {
        self.specs
            .get(&kind)
            .ok_or_else(|| Error::Config(format!("LID kind '{kind}' is not in the catalog")))
    }

    pub fn insert(&mut self, spec: LidSpec) {
        self.specs.insert(spec.kind, spec);
    }

    pub fn specs(&self) -> impl Iterator<Item = &LidSpec> {
        self.specs.values()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LidPlacement {
    pub subcatchment: String,
    pub kind: LidKind,
    pub area_ha: f64,
    /// Share of the host subcatchment's runoff routed into this unit.
    #[serde(default)]
    pub treated_fraction: Option<f64>,
}

impl LidPlacement {
    pub fn new(subcatchment: &str, kind: LidKind, area_ha: f64) -> Self {
        Self {
            subcatchment: subcatchment.to_string(),
            kind,
            area_ha,
            treated_fraction: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    #[serde(default)]
    pub placements: Vec<LidPlacement>,
}

impl Scenario {
    /// A site-level scenario with one placement per kind on a nominal `site` subcatchment.
    pub fn from_areas(name: &str, areas: &[(LidKind, f64)]) -> Self {
        Self {
            name: name.to_string(),
            placements: areas
                .iter()
                .map(|&(k, a)| LidPlacement::new("site", k, a))
                .collect(),
        }
    }

    /// Total area per kind, ha. Every kind is present.
    pub fn area_by_kind(&self) -> BTreeMap<LidKind, f64> {
        let mut out: BTreeMap<LidKind, f64> = LidKind::ALL.iter().map(|&k| (k, 0.0)).collect();
        for p in &self.placements {
            *out.entry(p.kind).or_default() += p.area_ha;
        }
        out
    }

    pub fn total_area_ha(&self) -> f64 {
        self.placements.iter().map(|p| p.area_ha).sum()
    }

    pub fn in_subcatchment<'a>(&'a self, id: &'a str) -> impl Iterator<Item = &'a LidPlacement> + 'a {
        self.placements.iter().filter(move |p| p.subcatchment == id)
    }

    /// Checks placement invariants against the catchment definition.
    pub fn problems(&self, subcatchments: &[Subcatchment], catalog: &LidCatalog) -> Vec<String> {
        let mut out = Vec::new();
        let name = &self.name;
        let mut per_sc: BTreeMap<&str, f64> = BTreeMap::new();
        for (i, p) in self.placements.iter().enumerate() {
            if !(p.area_ha >= 0.0) {
                out.push(format!("scenario '{name}' placement {i}: area must be >= 0"));
            }
            if let Some(tf) = p.treated_fraction {
                if !(0.0..=1.0).contains(&tf) {
                    out.push(format!("scenario '{name}' placement {i}: treated_fraction must lie in [0, 1]"));
                }
            }
            if catalog.get(p.kind).is_err() {
                out.push(format!("scenario '{name}' placement {i}: kind '{}' missing from catalog", p.kind));
            }
            match subcatchments.iter().find(|s| s.id == p.subcatchment) {
                None => out.push(format!(
                    "scenario '{name}' placement {i}: unknown subcatchment '{}'",
                    p.subcatchment
                )),
                Some(_) => *per_sc.entry(p.subcatchment.as_str()).or_default() += p.area_ha,
            }
        }
        for (id, area) in per_sc {
            let sc = subcatchments.iter().find(|s| s.id == id).expect("checked above");
            if area > sc.area_ha * (1.0 + 1e-9) {
                out.push(format!(
                    "scenario '{name}': LID area {area:.4} ha exceeds subcatchment '{id}' area {} ha",
                    sc.area_ha
                ));
            }
            let treated: f64 = self
                .in_subcatchment(id)
                .filter_map(|p| p.treated_fraction)
                .sum();
            if treated > 1.0 + 1e-9 {
                out.push(format!(
                    "scenario '{name}': treated fractions in subcatchment '{id}' sum to {treated:.3} > 1"
                ));
            }
        }
        out
    }
}

/// Static runoff control capacity, m³.
pub fn control_capacity(scenario: &Scenario, catalog: &LidCatalog) -> Result<f64> {
    scenario
        .placements
        .iter()
        .map(|p| Ok(p.area_ha * 1.0e4 * catalog.get(p.kind)?.unit_capacity))
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExistingCapacity {
    pub volume_m3: f64,
    /// Rainfall depth the volume corresponds to, by inverting `W = 10 psi h F`.
    pub depth_mm: f64,
}

/// Sums the capacity of facilities already on site.
pub fn existing_capacity(facilities: &[(String, f64)], psi: f64, area_ha: f64) -> Result<ExistingCapacity> {
    if let Some((label, v)) = facilities.iter().find(|(_, v)| !(*v >= 0.0)) {
        return Err(Error::validation(format!("existing facility '{label}' has negative volume {v}")));
    }
    let volume: f64 = facilities.iter().map(|(_, v)| v).sum();
    let denom = 10.0 * psi * area_ha;
    let depth = if volume == 0.0 {
        0.0
    } else if denom > 0.0 {
        volume / denom
    } else {
        return Err(Error::validation("runoff coefficient and area must be > 0"));
    };
    Ok(ExistingCapacity {
        volume_m3: volume,
        depth_mm: depth,
    })
}

/// Volume still to be controlled by new facilities, m³.
pub fn required_volume(target_depth_mm: f64, psi: f64, area_ha: f64, existing_m3: f64) -> Result<f64> {
    if !(existing_m3 >= 0.0) {
        return Err(Error::validation("existing capacity must be >= 0"));
    }
    let total = crate::hydrology::runoff_volume(psi, target_depth_mm, area_ha)?;
    Ok((total - existing_m3).max(0.0))
}

/// Converts volume shares into facility areas (ha).
pub fn allocate_areas(
    required_m3: f64,
    shares: &BTreeMap<LidKind, f64>,
    catalog: &LidCatalog,
) -> Result<BTreeMap<LidKind, f64>> {
    if !(required_m3 >= 0.0) {
        return Err(Error::validation("required volume must be >= 0"));
    }
    let total: f64 = shares.values().sum();
    if (total - 1.0).abs() > 1e-6 || shares.values().any(|&s| !(s >= 0.0)) {
        return Err(Error::validation(format!(
            "volume shares must be non-negative and sum to 1 (got {total})"
        )));
    }
    shares
        .iter()
        .map(|(&kind, &share)| {
            let cap = catalog.get(kind)?.unit_capacity;
            if !(cap > 0.0) {
                return Err(Error::validation(format!("LID kind '{kind}' has zero unit capacity")));
            }
            Ok((kind, required_m3 * share / cap / 1.0e4))
        })
        .collect()
}

/// Share of total LID area taken by each kind.
pub fn area_proportions(scenario: &Scenario) -> Result<BTreeMap<LidKind, f64>> {
    let total = scenario.total_area_ha();
    if !(total > 0.0) {
        return Err(Error::validation(format!("scenario '{}' has no LID area", scenario.name)));
    }
    Ok(scenario
        .area_by_kind()
        .into_iter()
        .map(|(k, a)| (k, a / total))
        .collect())
}

/// Splits runoff among the placements of one subcatchment.
///
/// Explicit fractions are taken as given. Placements without one share a pool
/// equal to the subcatchment's impervious fraction (capped so the total stays
/// at most 1), in proportion to their static capacity.
pub fn resolve_treated_fractions(
    sc: &Subcatchment,
    placements: &[LidPlacement],
    catalog: &LidCatalog,
) -> Result<Vec<f64>> {
    let explicit: f64 = placements.iter().filter_map(|p| p.treated_fraction).sum();
    if explicit > 1.0 + 1e-9 {
        return Err(Error::Config(format!(
            "treated fractions in subcatchment '{}' sum to {explicit} > 1",
            sc.id
        )));
    }
    let pool = sc.impervious_fraction.min(1.0 - explicit).max(0.0);
    let mut weights = Vec::with_capacity(placements.len());
    for p in placements {
        weights.push(match p.treated_fraction {
            Some(_) => 0.0,
            None => p.area_ha * catalog.get(p.kind)?.unit_capacity,
        });
    }
    let wsum: f64 = weights.iter().sum();
    Ok(placements
        .iter()
        .zip(&weights)
        .map(|(p, w)| match p.treated_fraction {
            Some(tf) => tf,
            None if wsum > 0.0 => pool * w / wsum,
            None => 0.0,
        })
        .collect())
}

/// Outcome of one LID unit over an event. Volumes in m³.
#[derive(Debug, Clone, PartialEq)]
pub struct LidUnitResult {
    pub kind: LidKind,
    pub area_m2: f64,
    /// Underdrain flow plus overflow, returned to the host outlet.
    pub outflow: Hydrograph,
    pub runon_m3: f64,
    pub rainfall_m3: f64,
    pub infiltration_m3: f64,
    pub underdrain_m3: f64,
    pub overflow_m3: f64,
    pub final_storage_m3: f64,
}

impl LidUnitResult {
    pub fn inflow_m3(&self) -> f64 {
        self.runon_m3 + self.rainfall_m3
    }

    pub fn outflow_m3(&self) -> f64 {
        self.underdrain_m3 + self.overflow_m3
    }

    pub fn closure_error(&self) -> f64 {
        let inflow = self.inflow_m3();
        let resid = inflow - self.outflow_m3() - self.infiltration_m3 - self.final_storage_m3;
        if inflow > 0.0 {
            resid.abs() / inflow
        } else {
            resid.abs()
        }
    }

    /// Fraction of the water entering the unit that leaves it as outflow.
    pub fn pass_through(&self) -> f64 {
        let inflow = self.inflow_m3();
        if inflow > 0.0 {
            (self.outflow_m3() / inflow).clamp(0.0, 1.0)
        } else {
            1.0
        }
    }
}

/// Runs one facility through an event, starting empty.
///
/// The unit is a single store that fills bottom-up (storage layer, soil pores,
/// then surface ponding up to the berm). Exfiltration and the underdrain are
/// the only rate-limited losses; anything above the static capacity spills.
pub fn simulate_lid_unit(
    spec: &LidSpec,
    area_m2: f64,
    inflow: &Hydrograph,
    rainfall_mm: &[f64],
    settings: &SimulationSettings,
) -> Result<LidUnitResult> {
    if !(area_m2 >= 0.0) {
        return Err(Error::validation("LID area must be >= 0"));
    }
    if inflow.step_s == 0 {
        return Err(Error::validation("inflow step must be positive"));
    }
    let issues = spec.problems();
    if let Some(first) = issues.into_iter().next() {
        return Err(Error::Config(first));
    }
    let dt = inflow.step_s as f64;
    let steps = inflow.len().max(rainfall_mm.len());
    let capacity = spec.static_capacity() * 1000.0;
    let storage_cap = spec.storage_capacity_mm();
    let exfil_rate = spec.exfiltration_mm_hr();

    let mut out_flows = Vec::with_capacity(steps);
    let (mut runon_m3, mut rain_m3) = (0.0, 0.0);
    let (mut infil_mm, mut ud_mm, mut over_mm) = (0.0, 0.0, 0.0);
    let mut stored = 0.0_f64;

    for s in 0..steps {
        let q_in = inflow.flows.get(s).copied().unwrap_or(0.0);
        let rain = rainfall_mm.get(s).copied().unwrap_or(0.0);
        let runon_vol = q_in * dt / 1000.0;
        runon_m3 += runon_vol;
        rain_m3 += rain * area_m2 / 1000.0;
        if area_m2 == 0.0 {
            out_flows.push(q_in);
            continue;
        }
        let input_mm = runon_vol / area_m2 * 1000.0 + rain;
        let mut step_out_mm = 0.0;
        let mut t = 0.0;
        while t < dt - 1e-9 {
            let remaining = dt - t;
            let head = stored.min(storage_cap);
            let loss_rate = exfil_rate + spec.underdrain_coeff * head.sqrt();
            let mut h = remaining;
            if loss_rate * h / 3600.0 > settings.max_depth_change_mm {
                let pieces = (loss_rate * h / 3600.0 / settings.max_depth_change_mm).ceil();
                h = (remaining / pieces).max(1.0_f64.min(remaining));
            }
            stored += input_mm * h / dt;
            let exfil = (exfil_rate * h / 3600.0).min(stored);
            stored -= exfil;
            let head = stored.min(storage_cap);
            let ud = (spec.underdrain_coeff * head.sqrt() * h / 3600.0).min(head);
            stored -= ud;
            let spill = (stored - capacity).max(0.0);
            stored -= spill;
            infil_mm += exfil;
            ud_mm += ud;
            over_mm += spill;
            step_out_mm += ud + spill;
            t += h;
        }
        out_flows.push(step_out_mm * area_m2 / 1000.0 * 1000.0 / dt);
    }

    let to_m3 = |mm: f64| mm * area_m2 / 1000.0;
    let (underdrain_m3, overflow_m3) = if area_m2 == 0.0 {
        (0.0, runon_m3)
    } else {
        (to_m3(ud_mm), to_m3(over_mm))
    };
    Ok(LidUnitResult {
        kind: spec.kind,
        area_m2,
        outflow: Hydrograph::new(spec.kind.to_string(), inflow.step_s, out_flows),
        runon_m3,
        rainfall_m3: rain_m3,
        infiltration_m3: to_m3(infil_mm),
        underdrain_m3,
        overflow_m3,
        final_storage_m3: to_m3(stored),
    })
}

/// Writes a scenario table with one area column per kind plus the total.
pub fn write_scenario_table<W: Write>(scenarios: &[Scenario], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["scenario".to_string()];
    header.extend(LidKind::ALL.iter().map(|k| format!("{k}_ha")));
    header.push("total_ha".to_string());
    w.write_record(&header)?;
    for sc in scenarios {
        let mut row = vec![sc.name.clone()];
        row.extend(sc.area_by_kind().values().map(|a| format!("{a:.3}")));
        row.push(format!("{:.3}", sc.total_area_ha()));
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn default_layers_match_unit_capacity() {
        for spec in LidCatalog::default().specs() {
            assert_abs_diff_eq!(spec.static_capacity(), spec.unit_capacity, epsilon = 1e-12);
            assert!(spec.problems().is_empty(), "{:?}", spec.problems());
        }
    }

    #[test]
    fn kind_aliases_parse() {
        assert_eq!("bioretention".parse::<LidKind>().unwrap(), LidKind::BioRetention);
        assert_eq!("sunken_green".parse::<LidKind>().unwrap(), LidKind::SunkenGreen);
        assert!("green_roof".parse::<LidKind>().is_err());
    }

    #[test]
    fn empty_scenario_capacity() {
        let s = Scenario { name: "none".into(), placements: vec![] };
        assert_eq!(control_capacity(&s, &LidCatalog::default()).unwrap(), 0.0);
        assert!(area_proportions(&s).is_err());
    }

    #[test]
    fn unknown_kind_in_catalog() {
        let catalog = LidCatalog::new([LidSpec::default_for(LidKind::StorageTank)]);
        let s = Scenario::from_areas("x", &[(LidKind::BioRetention, 1.0)]);
        assert!(control_capacity(&s, &catalog).is_err());
    }

    #[test]
    fn existing_capacity_empty() {
        let e = existing_capacity(&[], 0.59, 64.61).unwrap();
        assert_eq!((e.volume_m3, e.depth_mm), (0.0, 0.0));
    }

    #[test]
    fn required_volume_clamps() {
        assert_eq!(required_volume(26.0, 0.5, 1.0, 1.0e6).unwrap(), 0.0);
    }

    #[test]
    fn allocate_single_kind_and_zero() {
        let catalog = LidCatalog::default();
        let shares = BTreeMap::from([(LidKind::StorageTank, 1.0)]);
        let a = allocate_areas(8258.0, &shares, &catalog).unwrap();
        assert_abs_diff_eq!(a[&LidKind::StorageTank], 0.8258, epsilon = 1e-12);
        let z = allocate_areas(0.0, &shares, &catalog).unwrap();
        assert_eq!(z[&LidKind::StorageTank], 0.0);
        let bad = BTreeMap::from([(LidKind::StorageTank, 0.5)]);
        assert!(allocate_areas(1.0, &bad, &catalog).is_err());
    }

    #[test]
    fn single_facility_proportion() {
        let s = Scenario::from_areas("one", &[(LidKind::GrassedSwale, 0.4)]);
        assert_eq!(area_proportions(&s).unwrap()[&LidKind::GrassedSwale], 1.0);
    }

    fn settings() -> SimulationSettings {
        SimulationSettings::default()
    }

    #[test]
    fn tank_bucket_arithmetic() {
        let spec = LidSpec::default_for(LidKind::StorageTank);
        // 150 m³ over 10 minutes.
        let inflow = Hydrograph::new("in", 60, vec![250.0; 10]);
        let r = simulate_lid_unit(&spec, 100.0, &inflow, &[], &settings()).unwrap();
        assert_abs_diff_eq!(r.final_storage_m3, 100.0, epsilon = 1e-9);
        assert_abs_diff_eq!(r.overflow_m3, 50.0, epsilon = 1e-9);
        assert_eq!(r.infiltration_m3, 0.0);
        assert!(r.closure_error() < 1e-12);
    }

    #[test]
    fn half_capacity_inflow_never_spills() {
        for spec in LidCatalog::default().specs() {
            let area = 50.0;
            let cap_m3 = spec.static_capacity() * area;
            let per_step = cap_m3 * 0.5 / 20.0 * 1000.0 / 60.0;
            let inflow = Hydrograph::new("in", 60, vec![per_step; 20]);
            let r = simulate_lid_unit(spec, area, &inflow, &[], &settings()).unwrap();
            assert_eq!(r.overflow_m3, 0.0, "{}", spec.kind);
            assert!(r.closure_error() < 1e-9);
        }
    }

    #[test]
    fn zero_area_unit_passes_inflow() {
        let spec = LidSpec::default_for(LidKind::BioRetention);
        let inflow = Hydrograph::new("in", 60, vec![5.0, 1.0]);
        let r = simulate_lid_unit(&spec, 0.0, &inflow, &[1.0, 1.0], &settings()).unwrap();
        assert_eq!(r.outflow.flows, vec![5.0, 1.0]);
        assert!(r.closure_error() < 1e-12);
    }

    #[test]
    fn treated_fraction_defaults() {
        let sc = Subcatchment::simple("S", 10.0, 0.6, "O");
        let catalog = LidCatalog::default();
        let ps = vec![
            LidPlacement::new("S", LidKind::StorageTank, 0.1),  // 1000 m³
            LidPlacement::new("S", LidKind::BioRetention, 1.0 / 3.0), // 1000 m³
        ];
        let tf = resolve_treated_fractions(&sc, &ps, &catalog).unwrap();
        assert_abs_diff_eq!(tf[0], 0.3, epsilon = 1e-12);
        assert_abs_diff_eq!(tf[1], 0.3, epsilon = 1e-12);

        let mut ps2 = ps.clone();
        ps2[0].treated_fraction = Some(0.7);
        let tf = resolve_treated_fractions(&sc, &ps2, &catalog).unwrap();
        assert_eq!(tf[0], 0.7);
        assert_abs_diff_eq!(tf[1], 0.3, epsilon = 1e-12);

        ps2[1].treated_fraction = Some(0.5);
        assert!(resolve_treated_fractions(&sc, &ps2, &catalog).is_err());
    }

    #[test]
    fn scenario_table_csv() {
        let s = Scenario::from_areas("4", &[(LidKind::BioRetention, 1.125), (LidKind::SunkenGreen, 1.5)]);
        let mut out = Vec::new();
        write_scenario_table(&[s], &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(text.starts_with("scenario,bio_retention_ha,grassed_swale_ha"));
        assert!(text.contains("4,1.125,0.000,1.500,0.000,0.000,2.625"));
    }
}
