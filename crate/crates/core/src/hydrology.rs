//! Event-scale rainfall-runoff.
//!
//! Each subcatchment is split into an impervious and a pervious subarea, both
//! treated as nonlinear reservoirs:
//!
//! ```text
//! dd/dt = i - f - q,    q = (W/A) (1/n) (d - ds)^(5/3) S^(1/2)
//! ```
//!
//! Infiltration on the pervious part follows Horton's capacity curve
//! `f(t) = fc + (f0 - fc) exp(-k t)`. A share of the runoff can be diverted
//! into LID units (see [`crate::lid`]); their outflow rejoins the outlet.
//! Outlet hydrographs are carried to outfalls by pure translation routing.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lid::{self, LidCatalog, LidPlacement, LidUnitResult};
use crate::storm_gen::Hyetograph;

/// Horton infiltration constants: rates in mm/hr, decay in 1/hr.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HortonParams {
    pub f0: f64,
    pub fc: f64,
    pub k: f64,
}

impl Default for HortonParams {
    fn default() -> Self {
        Self {
            f0: 76.2,
            fc: 3.81,
            k: 4.14,
        }
    }
}

impl HortonParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.fc >= 0.0 && self.f0 >= self.fc && self.k > 0.0) {
            return Err(Error::validation(format!(
                "Horton parameters need f0 >= fc >= 0 and k > 0 (f0={}, fc={}, k={})",
                self.f0, self.fc, self.k
            )));
        }
        Ok(())
    }

    /// Cumulative infiltration capacity from 0 to `t` hours, mm.
    pub fn cumulative(&self, t_hours: f64) -> f64 {
        self.fc * t_hours + (self.f0 - self.fc) / self.k * (1.0 - (-self.k * t_hours).exp())
    }
}

/// Infiltration capacity at `t` hours after the start of rain, mm/hr.
pub fn horton_rate(p: &HortonParams, t_hours: f64) -> Result<f64> {
    if !(t_hours >= 0.0) {
        return Err(Error::validation(format!("time must be >= 0, got {t_hours}")));
    }
    Ok(p.fc + (p.f0 - p.fc) * (-p.k * t_hours).exp())
}

/// Surface classes used for pollutant buildup.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SurfaceClass {
    Road,
    Roof,
    Green,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LandUse {
    pub name: String,
    pub runoff_coefficient: f64,
    pub area_ha: f64,
    pub surface: SurfaceClass,
}

fn default_dstore_imperv() -> f64 {
    1.27
}
fn default_dstore_perv() -> f64 {
    2.5
}
fn default_n_imperv() -> f64 {
    0.012
}
fn default_n_perv() -> f64 {
    0.15
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Subcatchment {
    pub id: String,
    pub area_ha: f64,
    pub impervious_fraction: f64,
    pub width_m: f64,
    pub slope: f64,
    #[serde(default = "default_dstore_imperv")]
    pub dstore_imperv_mm: f64,
    #[serde(default = "default_dstore_perv")]
    pub dstore_perv_mm: f64,
    #[serde(default = "default_n_imperv")]
    pub n_imperv: f64,
    #[serde(default = "default_n_perv")]
    pub n_perv: f64,
    #[serde(default)]
    pub horton: HortonParams,
    #[serde(default)]
    pub land_uses: Vec<LandUse>,
    pub outlet: String,
}

impl Subcatchment {
    /// A uniform subcatchment with default SWMM-manual parameters and no land-use table.
    pub fn simple(id: &str, area_ha: f64, impervious_fraction: f64, outlet: &str) -> Self {
        Self {
            id: id.to_string(),
            area_ha,
            impervious_fraction,
            width_m: 100.0 * area_ha.sqrt() * 2.0,
            slope: 0.01,
            dstore_imperv_mm: default_dstore_imperv(),
            dstore_perv_mm: default_dstore_perv(),
            n_imperv: default_n_imperv(),
            n_perv: default_n_perv(),
            horton: HortonParams::default(),
            land_uses: Vec::new(),
            outlet: outlet.to_string(),
        }
    }

    pub fn area_m2(&self) -> f64 {
        self.area_ha * 1.0e4
    }

    /// Returns every invariant violation found, prefixed by the subcatchment id.
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        let id = &self.id;
        if !(self.area_ha > 0.0) {
            out.push(format!("subcatchment '{id}': area must be > 0"));
        }
        if !(0.0..=1.0).contains(&self.impervious_fraction) {
            out.push(format!("subcatchment '{id}': impervious_fraction must lie in [0, 1]"));
        }
        if !(self.width_m > 0.0) || !(self.slope > 0.0) {
            out.push(format!("subcatchment '{id}': width and slope must be > 0"));
        }
        if !(self.dstore_imperv_mm >= 0.0) || !(self.dstore_perv_mm >= 0.0) {
            out.push(format!("subcatchment '{id}': depression storage must be >= 0"));
        }
        if !(self.n_imperv > 0.0) || !(self.n_perv > 0.0) {
            out.push(format!("subcatchment '{id}': Manning roughness must be > 0"));
        }
        if let Err(e) = self.horton.validate() {
            out.push(format!("subcatchment '{id}': {e}"));
        }
        if !self.land_uses.is_empty() {
            let total: f64 = self.land_uses.iter().map(|l| l.area_ha).sum();
            if (total - self.area_ha).abs() > 1e-3 * self.area_ha {
                out.push(format!(
                    "subcatchment '{id}': land-use areas sum to {total} ha but the area is {} ha",
                    self.area_ha
                ));
            }
            for lu in &self.land_uses {
                if !(0.0..=1.0).contains(&lu.runoff_coefficient) || !(lu.area_ha > 0.0) {
                    out.push(format!(
                        "subcatchment '{id}': land use '{}' needs a coefficient in [0, 1] and a positive area",
                        lu.name
                    ));
                }
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        match self.problems().into_iter().next() {
            Some(p) => Err(Error::Config(p)),
            None => Ok(()),
        }
    }
}

/// A conduit abstracted to a translation lag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Link {
    pub id: String,
    pub from: String,
    pub to: String,
    #[serde(default)]
    pub lag_s: f64,
    #[serde(default)]
    pub capacity_lps: Option<f64>,
}

/// Flow series at one site; each value is the mean flow over its step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hydrograph {
    pub site: String,
    pub step_s: u32,
    /// L/s
    pub flows: Vec<f64>,
}

impl Hydrograph {
    pub fn new(site: impl Into<String>, step_s: u32, flows: Vec<f64>) -> Self {
        Self {
            site: site.into(),
            step_s,
            flows,
        }
    }

    pub fn zeros(site: impl Into<String>, step_s: u32, len: usize) -> Self {
        Self::new(site, step_s, vec![0.0; len])
    }

    /// Total volume, m³.
    pub fn volume_m3(&self) -> f64 {
        self.flows.iter().sum::<f64>() * self.step_s as f64 / 1000.0
    }

    pub fn len(&self) -> usize {
        self.flows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.flows.is_empty()
    }

    /// Elementwise sum, padding the shorter series with zeros.
    pub fn add(&mut self, other: &Hydrograph) {
        if other.flows.len() > self.flows.len() {
            self.flows.resize(other.flows.len(), 0.0);
        }
        for (a, b) in self.flows.iter_mut().zip(&other.flows) {
            *a += b;
        }
    }

    /// Writes `t_s,flow_Lps`; `t_s` is the start of each step.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["t_s", "flow_Lps"])?;
        for (i, q) in self.flows.iter().enumerate() {
            w.write_record([(i as u64 * self.step_s as u64).to_string(), q.to_string()])?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimulationSettings {
    pub step_s: u32,
    /// Simulated time after the end of rain, minutes.
    pub tail_min: f64,
    pub evaporation_mm_hr: f64,
    /// Explicit-Euler sub-stepping kicks in above this depth change per step.
    pub max_depth_change_mm: f64,
}

impl Default for SimulationSettings {
    fn default() -> Self {
        Self {
            step_s: 60,
            tail_min: 240.0,
            evaporation_mm_hr: 0.0,
            max_depth_change_mm: 1.0,
        }
    }
}

impl SimulationSettings {
    pub fn validate(&self, storm: &Hyetograph) -> Result<()> {
        if self.step_s == 0 {
            return Err(Error::validation("simulation step must be positive"));
        }
        let (a, b) = (self.step_s, storm.step_s);
        if a % b != 0 && b % a != 0 {
            return Err(Error::validation(format!(
                "simulation step {a} s and rainfall step {b} s must divide one another"
            )));
        }
        if !(self.tail_min >= 0.0) || !(self.evaporation_mm_hr >= 0.0) || !(self.max_depth_change_mm > 0.0) {
            return Err(Error::validation("tail, evaporation and sub-step threshold must be non-negative"));
        }
        Ok(())
    }

    pub fn steps_for(&self, storm: &Hyetograph) -> usize {
        let total_s = storm.duration_min * 60.0 + self.tail_min * 60.0;
        (total_s / self.step_s as f64).ceil() as usize
    }
}

/// Rainfall depth (mm) falling between `t0` and `t1` seconds.
pub(crate) fn rain_depth(storm: &Hyetograph, t0: f64, t1: f64) -> f64 {
    if t1 <= t0 || storm.is_empty() {
        return 0.0;
    }
    let step = storm.step_s as f64;
    let end = storm.len() as f64 * step;
    let (t0, t1) = (t0.max(0.0), t1.min(end));
    if t1 <= t0 {
        return 0.0;
    }
    let mut depth = 0.0;
    let first = (t0 / step).floor() as usize;
    let last = ((t1 / step).ceil() as usize).min(storm.len());
    for idx in first..last {
        let a = (idx as f64 * step).max(t0);
        let b = ((idx + 1) as f64 * step).min(t1);
        if b > a {
            depth += storm.intensities[idx] * (b - a) / 3600.0;
        }
    }
    depth
}

/// Volume accounting for one subcatchment run, m³.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct WaterBalance {
    pub rainfall_m3: f64,
    pub runoff_m3: f64,
    pub infiltration_m3: f64,
    pub evaporation_m3: f64,
    pub final_surface_storage_m3: f64,
    pub lid_infiltration_m3: f64,
    pub lid_final_storage_m3: f64,
}

impl WaterBalance {
    /// Volume captured by LID units (infiltrated or still held).
    pub fn lid_captured_m3(&self) -> f64 {
        self.lid_infiltration_m3 + self.lid_final_storage_m3
    }

    pub fn residual_m3(&self) -> f64 {
        self.rainfall_m3
            - self.runoff_m3
            - self.infiltration_m3
            - self.evaporation_m3
            - self.final_surface_storage_m3
            - self.lid_captured_m3()
    }

    /// Relative closure error; zero when nothing fell.
    pub fn closure_error(&self) -> f64 {
        if self.rainfall_m3 <= 0.0 {
            return self.residual_m3().abs();
        }
        self.residual_m3().abs() / self.rainfall_m3
    }

    pub fn accumulate(&mut self, o: &WaterBalance) {
        self.rainfall_m3 += o.rainfall_m3;
        self.runoff_m3 += o.runoff_m3;
        self.infiltration_m3 += o.infiltration_m3;
        self.evaporation_m3 += o.evaporation_m3;
        self.final_surface_storage_m3 += o.final_surface_storage_m3;
        self.lid_infiltration_m3 += o.lid_infiltration_m3;
        self.lid_final_storage_m3 += o.lid_final_storage_m3;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubcatchmentResult {
    /// Flow delivered to the outlet.
    pub hydrograph: Hydrograph,
    pub balance: WaterBalance,
    /// Runoff rate off the non-LID surface, mm/hr per step. Drives washoff.
    pub surface_runoff_mm_hr: Vec<f64>,
    /// Area not occupied by LID units, ha.
    pub surface_area_ha: f64,
    /// One entry per LID placement, in placement order.
    pub lid_units: Vec<LidUnitResult>,
}

/// Largest relative change of the outflow rate allowed within one sub-step.
const MAX_OUTFLOW_CHANGE: f64 = 0.01;

struct Subarea {
    area_m2: f64,
    dstore_mm: f64,
    /// q = alpha * (d - ds)^(5/3) with d in mm and q in mm/hr.
    alpha: f64,
    horton: Option<HortonParams>,
}

#[derive(Default)]
struct SubareaTotals {
    infiltration_mm: f64,
    evaporation_mm: f64,
}

impl Subarea {
    fn new(sc: &Subcatchment, area_m2: f64, dstore_mm: f64, n: f64, horton: Option<HortonParams>) -> Self {
        // Manning in SI, per unit area, converted from m/s to mm/hr with depth in mm.
        let alpha_si = sc.width_m / sc.area_m2() / n * sc.slope.sqrt();
        let alpha = alpha_si * 1000.0 * 3600.0 * (1.0e-3_f64).powf(5.0 / 3.0);
        Self {
            area_m2,
            dstore_mm,
            alpha,
            horton,
        }
    }

    fn outflow_rate(&self, depth: f64) -> f64 {
        let excess = depth - self.dstore_mm;
        if excess <= 0.0 {
            0.0
        } else {
            self.alpha * excess.powf(5.0 / 3.0)
        }
    }

    /// dq/dd at `depth`, 1/hr.
    fn outflow_slope(&self, depth: f64) -> f64 {
        let excess = depth - self.dstore_mm;
        if excess <= 0.0 {
            0.0
        } else {
            5.0 / 3.0 * self.alpha * excess.powf(2.0 / 3.0)
        }
    }

    /// Runs the reservoir over the storm; returns the runoff depth (mm) leaving in each step.
    fn run(
        &self,
        storm: &Hyetograph,
        settings: &SimulationSettings,
        steps: usize,
        totals: &mut SubareaTotals,
    ) -> (Vec<f64>, f64) {
        let dt = settings.step_s as f64;
        let evap = settings.evaporation_mm_hr;
        let mut depth = 0.0_f64;
        let mut out = Vec::with_capacity(steps);
        for s in 0..steps {
            let t_start = s as f64 * dt;
            let t_end = t_start + dt;
            let mut t = t_start;
            let mut step_out = 0.0;
            while t < t_end - 1e-9 {
                let remaining = t_end - t;
                let rain_rate = storm.intensity_at(t);
                let infil_rate = match &self.horton {
                    Some(h) => h.fc + (h.f0 - h.fc) * (-h.k * t / 3600.0).exp(),
                    None => 0.0,
                };
                let rate = rain_rate - infil_rate.min(rain_rate + depth * 3600.0 / remaining)
                    - self.outflow_rate(depth);
                let mut h = remaining;
                let pieces = (rate.abs() * h / 3600.0 / settings.max_depth_change_mm)
                    .max(self.outflow_slope(depth) * h / 3600.0 / MAX_OUTFLOW_CHANGE)
                    .ceil();
                if pieces > 1.0 {
                    h = (remaining / pieces).max(1.0_f64.min(remaining));
                }
                let rain = rain_depth(storm, t, t + h);
                let mut available = depth + rain;
                let infil = match &self.horton {
                    Some(hp) => (hp.cumulative((t + h) / 3600.0) - hp.cumulative(t / 3600.0)).min(available),
                    None => 0.0,
                };
                available -= infil;
                let ev = (evap * h / 3600.0).min(available);
                available -= ev;
                let q = (self.outflow_rate(depth) * h / 3600.0).min((available - self.dstore_mm).max(0.0));
                depth = available - q;
                step_out += q;
                totals.infiltration_mm += infil;
                totals.evaporation_mm += ev;
                t += h;
            }
            out.push(step_out);
        }
        (out, depth)
    }
}

/// Simulates one subcatchment, optionally with LID placements inside it.
pub fn simulate_subcatchment(
    sc: &Subcatchment,
    storm: &Hyetograph,
    placements: &[LidPlacement],
    catalog: &LidCatalog,
    settings: &SimulationSettings,
) -> Result<SubcatchmentResult> {
    settings.validate(storm)?;
    sc.validate()?;
    for p in placements {
        if p.subcatchment != sc.id {
            return Err(Error::Config(format!(
                "placement of {} belongs to '{}', not '{}'",
                p.kind, p.subcatchment, sc.id
            )));
        }
    }
    let lid_area_ha: f64 = placements.iter().map(|p| p.area_ha).sum();
    if lid_area_ha > sc.area_ha * (1.0 + 1e-9) {
        return Err(Error::Config(format!(
            "LID area {lid_area_ha} ha exceeds subcatchment '{}' area {} ha",
            sc.id, sc.area_ha
        )));
    }
    let treated = lid::resolve_treated_fractions(sc, placements, catalog)?;
    let steps = settings.steps_for(storm);
    let dt = settings.step_s as f64;

    let surface_m2 = ((sc.area_ha - lid_area_ha) * 1.0e4).max(0.0);
    let imperv = Subarea::new(sc, surface_m2 * sc.impervious_fraction, sc.dstore_imperv_mm, sc.n_imperv, None);
    let perv = Subarea::new(
        sc,
        surface_m2 * (1.0 - sc.impervious_fraction),
        sc.dstore_perv_mm,
        sc.n_perv,
        Some(sc.horton),
    );

    let mut imp_totals = SubareaTotals::default();
    let mut perv_totals = SubareaTotals::default();
    let (imp_out, imp_depth) = imperv.run(storm, settings, steps, &mut imp_totals);
    let (perv_out, perv_depth) = perv.run(storm, settings, steps, &mut perv_totals);

    // Surface runoff volume per step, m³.
    let surface_runoff: Vec<f64> = imp_out
        .iter()
        .zip(&perv_out)
        .map(|(a, b)| (a * imperv.area_m2 + b * perv.area_m2) / 1000.0)
        .collect();
    let surface_runoff_mm_hr: Vec<f64> = surface_runoff
        .iter()
        .map(|v| {
            if surface_m2 > 0.0 {
                v / surface_m2 * 1000.0 * 3600.0 / dt
            } else {
                0.0
            }
        })
        .collect();

    let total_treated: f64 = treated.iter().sum();
    let mut outlet_m3: Vec<f64> = surface_runoff.iter().map(|v| v * (1.0 - total_treated)).collect();

    let rain_per_step: Vec<f64> = (0..steps)
        .map(|s| rain_depth(storm, s as f64 * dt, (s + 1) as f64 * dt))
        .collect();

    let mut balance = WaterBalance::default();
    let mut lid_units = Vec::with_capacity(placements.len());
    for (p, &tf) in placements.iter().zip(&treated) {
        let spec = catalog.get(p.kind)?;
        let inflow = Hydrograph::new(
            format!("{}:{}", sc.id, p.kind),
            settings.step_s,
            surface_runoff.iter().map(|v| v * tf * 1000.0 / dt).collect(),
        );
        let unit = lid::simulate_lid_unit(spec, p.area_ha * 1.0e4, &inflow, &rain_per_step, settings)?;
        for (o, q) in outlet_m3.iter_mut().zip(&unit.outflow.flows) {
            *o += q * dt / 1000.0;
        }
        balance.lid_infiltration_m3 += unit.infiltration_m3;
        balance.lid_final_storage_m3 += unit.final_storage_m3;
        lid_units.push(unit);
    }

    let total_rain_mm: f64 = rain_per_step.iter().sum();
    balance.rainfall_m3 = total_rain_mm * sc.area_m2() / 1000.0;
    balance.runoff_m3 = outlet_m3.iter().sum();
    balance.infiltration_m3 = perv_totals.infiltration_mm * perv.area_m2 / 1000.0;
    balance.evaporation_m3 =
        (imp_totals.evaporation_mm * imperv.area_m2 + perv_totals.evaporation_mm * perv.area_m2) / 1000.0;
    balance.final_surface_storage_m3 = (imp_depth * imperv.area_m2 + perv_depth * perv.area_m2) / 1000.0;

    Ok(SubcatchmentResult {
        hydrograph: Hydrograph::new(
            sc.outlet.clone(),
            settings.step_s,
            outlet_m3.iter().map(|v| (v * 1000.0 / dt).max(0.0)).collect(),
        ),
        balance,
        surface_runoff_mm_hr,
        surface_area_ha: surface_m2 / 1.0e4,
        lid_units,
    })
}

/// Drainage network: translation links plus the set of terminal outfalls.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Network {
    pub links: Vec<Link>,
    pub outfalls: Vec<String>,
}

impl Network {
    /// Checks structure and returns nodes in upstream-to-downstream order.
    pub fn topological_order(&self) -> Result<Vec<String>> {
        let outfalls: BTreeSet<&str> = self.outfalls.iter().map(String::as_str).collect();
        let mut downstream: BTreeMap<&str, &Link> = BTreeMap::new();
        for link in &self.links {
            if !(link.lag_s >= 0.0) {
                return Err(Error::Config(format!("link '{}' has a negative lag", link.id)));
            }
            if outfalls.contains(link.from.as_str()) {
                return Err(Error::Config(format!(
                    "link '{}' leaves outfall '{}'",
                    link.id, link.from
                )));
            }
            if downstream.insert(link.from.as_str(), link).is_some() {
                return Err(Error::Config(format!(
                    "node '{}' has more than one outgoing link",
                    link.from
                )));
            }
        }
        let mut nodes: BTreeSet<&str> = outfalls.clone();
        for link in &self.links {
            nodes.insert(&link.from);
            nodes.insert(&link.to);
        }
        // Each node has at most one downstream link, so following the chain
        // either reaches an outfall, a dead end, or repeats a node.
        for &start in &nodes {
            let mut path = vec![start];
            let mut cur = start;
            while let Some(link) = downstream.get(cur) {
                cur = link.to.as_str();
                if let Some(pos) = path.iter().position(|&n| n == cur) {
                    let mut cycle: Vec<String> = path[pos..].iter().map(|s| s.to_string()).collect();
                    cycle.push(cur.to_string());
                    return Err(Error::Cycle(cycle));
                }
                path.push(cur);
            }
            if !outfalls.contains(cur) {
                return Err(Error::Config(format!(
                    "node '{start}' does not drain to an outfall (dead end at '{cur}')"
                )));
            }
        }
        // Depth from outfall; deeper nodes come first.
        let depth_of = |n: &str| {
            let mut d = 0usize;
            let mut cur = n;
            while let Some(link) = downstream.get(cur) {
                cur = link.to.as_str();
                d += 1;
            }
            d
        };
        let mut ordered: Vec<(usize, &str)> = nodes.iter().map(|&n| (depth_of(n), n)).collect();
        ordered.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(b.1)));
        Ok(ordered.into_iter().map(|(_, n)| n.to_string()).collect())
    }

    pub fn contains_node(&self, id: &str) -> bool {
        self.outfalls.iter().any(|o| o == id) || self.links.iter().any(|l| l.from == id || l.to == id)
    }
}

fn shift(h: &Hydrograph, steps: usize) -> Vec<f64> {
    let mut out = vec![0.0; steps];
    out.extend_from_slice(&h.flows);
    out
}

/// Routes node inflows to outfalls. A link with lag `L` delays flow by
/// `round(L / step)` steps; series are extended so no volume is lost.
pub fn route(inflows: &BTreeMap<String, Hydrograph>, network: &Network) -> Result<BTreeMap<String, Hydrograph>> {
    let order = network.topological_order()?;
    let step = match inflows.values().next() {
        Some(h) => h.step_s,
        None => {
            return Ok(network
                .outfalls
                .iter()
                .map(|o| (o.clone(), Hydrograph::zeros(o.clone(), 60, 0)))
                .collect())
        }
    };
    for (site, h) in inflows {
        if h.step_s != step {
            return Err(Error::validation("all routed hydrographs must share a step"));
        }
        if !network.contains_node(site) {
            return Err(Error::Config(format!("inflow site '{site}' is not a network node")));
        }
    }
    let downstream: BTreeMap<&str, &Link> = network.links.iter().map(|l| (l.from.as_str(), l)).collect();
    let mut at_node: BTreeMap<String, Hydrograph> = BTreeMap::new();
    for (site, h) in inflows {
        at_node
            .entry(site.clone())
            .or_insert_with(|| Hydrograph::zeros(site.clone(), step, 0))
            .add(h);
    }
    for node in &order {
        let Some(link) = downstream.get(node.as_str()) else { continue };
        let Some(h) = at_node.remove(node) else { continue };
        let lag_steps = (link.lag_s / step as f64).round() as usize;
        if let Some(cap) = link.capacity_lps {
            let peak = h.flows.iter().cloned().fold(0.0, f64::max);
            if peak > cap {
                log::warn!("link '{}' carries {peak:.1} L/s above its {cap:.1} L/s capacity", link.id);
            }
        }
        let moved = Hydrograph::new(link.to.clone(), step, shift(&h, lag_steps));
        at_node
            .entry(link.to.clone())
            .or_insert_with(|| Hydrograph::zeros(link.to.clone(), step, 0))
            .add(&moved);
    }
    Ok(network
        .outfalls
        .iter()
        .map(|o| {
            let mut h = at_node
                .remove(o)
                .unwrap_or_else(|| Hydrograph::zeros(o.clone(), step, 0));
            h.site = o.clone();
            (o.clone(), h)
        })
        .collect())
}

/// Area-weighted mean runoff coefficient.
pub fn composite_runoff_coefficient(land_uses: &[LandUse]) -> Result<f64> {
    if land_uses.is_empty() {
        return Err(Error::validation("no land uses given"));
    }
    if land_uses.iter().any(|l| !(l.area_ha > 0.0)) {
        return Err(Error::validation("land-use areas must be > 0"));
    }
    let area: f64 = land_uses.iter().map(|l| l.area_ha).sum();
    Ok(land_uses.iter().map(|l| l.runoff_coefficient * l.area_ha).sum::<f64>() / area)
}

/// Rational-method runoff volume `W = 10 * psi * h * F` (m³, with h in mm and F in ha).
pub fn runoff_volume(psi: f64, depth_mm: f64, area_ha: f64) -> Result<f64> {
    if !(psi >= 0.0 && depth_mm >= 0.0 && area_ha >= 0.0) {
        return Err(Error::validation("runoff volume inputs must be >= 0"));
    }
    Ok(10.0 * psi * depth_mm * area_ha)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn horton_closed_form() {
        let p = HortonParams::default();
        assert_eq!(horton_rate(&p, 0.0).unwrap(), 76.2);
        assert!(horton_rate(&p, 100.0).unwrap() - 3.81 < 1e-6);
        assert_abs_diff_eq!(horton_rate(&p, 0.5).unwrap(), 12.9517, epsilon = 0.01);
        assert!(horton_rate(&p, -1.0).is_err());
        let bad = HortonParams { f0: 1.0, fc: 2.0, k: 1.0 };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn rain_depth_partial_intervals() {
        let storm = Hyetograph::from_intensities(600, vec![6.0, 12.0]).unwrap();
        assert_abs_diff_eq!(rain_depth(&storm, 0.0, 1200.0), 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(rain_depth(&storm, 300.0, 900.0), 0.5 + 1.0, epsilon = 1e-12);
        assert_eq!(rain_depth(&storm, 1200.0, 5000.0), 0.0);
    }

    #[test]
    fn zero_rain_gives_zero_runoff() {
        let sc = Subcatchment::simple("S", 2.0, 0.5, "O");
        let storm = Hyetograph::from_intensities(60, vec![0.0; 30]).unwrap();
        let r = simulate_subcatchment(&sc, &storm, &[], &LidCatalog::default(), &SimulationSettings::default())
            .unwrap();
        assert!(r.hydrograph.flows.iter().all(|&q| q == 0.0));
        assert_eq!(r.balance.infiltration_m3, 0.0);
        assert_eq!(r.balance.closure_error(), 0.0);
    }

    #[test]
    fn impervious_without_storage_passes_all_rain() {
        let mut sc = Subcatchment::simple("S", 1.0, 1.0, "O");
        sc.dstore_imperv_mm = 0.0;
        let storm = Hyetograph::from_intensities(60, vec![30.0; 30]).unwrap();
        let settings = SimulationSettings {
            tail_min: 24.0 * 60.0,
            ..Default::default()
        };
        let r = simulate_subcatchment(&sc, &storm, &[], &LidCatalog::default(), &settings).unwrap();
        let rain = 15.0 * 10.0;
        assert!((r.hydrograph.volume_m3() - rain).abs() / rain < 0.005);
        assert!(r.balance.closure_error() < 1e-9);
    }

    #[test]
    fn lid_area_larger_than_subcatchment_is_rejected() {
        let sc = Subcatchment::simple("S", 1.0, 0.5, "O");
        let storm = Hyetograph::from_intensities(60, vec![10.0; 10]).unwrap();
        let p = LidPlacement::new("S", crate::lid::LidKind::BioRetention, 1.5);
        let err = simulate_subcatchment(&sc, &storm, &[p], &LidCatalog::default(), &SimulationSettings::default())
            .unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn mismatched_steps_rejected() {
        let sc = Subcatchment::simple("S", 1.0, 0.5, "O");
        let storm = Hyetograph::from_intensities(70, vec![10.0; 10]).unwrap();
        assert!(simulate_subcatchment(&sc, &storm, &[], &LidCatalog::default(), &SimulationSettings::default())
            .is_err());
    }

    fn net(links: Vec<Link>, outfalls: &[&str]) -> Network {
        Network {
            links,
            outfalls: outfalls.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn link(id: &str, from: &str, to: &str, lag: f64) -> Link {
        Link {
            id: id.into(),
            from: from.into(),
            to: to.into(),
            lag_s: lag,
            capacity_lps: None,
        }
    }

    #[test]
    fn route_identity_and_shift() {
        let h = Hydrograph::new("J", 60, vec![0.0, 1.0, 5.0, 2.0]);
        let inflows = BTreeMap::from([("J".to_string(), h.clone())]);
        let out = route(&inflows, &net(vec![link("L", "J", "O", 0.0)], &["O"])).unwrap();
        assert_eq!(out["O"].flows, h.flows);

        let out = route(&inflows, &net(vec![link("L", "J", "O", 180.0)], &["O"])).unwrap();
        assert_eq!(out["O"].flows, vec![0.0, 0.0, 0.0, 0.0, 1.0, 5.0, 2.0]);
    }

    #[test]
    fn route_merges_branches() {
        let a = Hydrograph::new("A", 60, vec![1.0, 2.0, 3.0, 0.0, 0.0]);
        let b = Hydrograph::new("B", 60, vec![0.0, 4.0, 1.0, 1.0, 0.0]);
        let network = net(
            vec![link("LA", "A", "J", 60.0), link("LB", "B", "J", 0.0), link("LJ", "J", "O", 60.0)],
            &["O"],
        );
        let inflows = BTreeMap::from([("A".to_string(), a), ("B".to_string(), b)]);
        let out = route(&inflows, &network).unwrap();
        // A shifted by 2, B shifted by 1, summed by hand.
        assert_eq!(out["O"].flows, vec![0.0, 0.0, 5.0, 3.0, 4.0, 0.0, 0.0]);
    }

    #[test]
    fn route_detects_cycles_and_dead_ends() {
        let cyc = net(vec![link("1", "A", "B", 0.0), link("2", "B", "A", 0.0)], &["O"]);
        match cyc.topological_order() {
            Err(Error::Cycle(names)) => {
                assert!(names.contains(&"A".to_string()) && names.contains(&"B".to_string()))
            }
            other => panic!("expected cycle, got {other:?}"),
        }
        let dead = net(vec![link("1", "A", "B", 0.0)], &["O"]);
        assert!(matches!(dead.topological_order(), Err(Error::Config(_))));
    }

    #[test]
    fn composite_coefficient_cases() {
        let lu = |psi: f64, a: f64| LandUse {
            name: "x".into(),
            runoff_coefficient: psi,
            area_ha: a,
            surface: SurfaceClass::Green,
        };
        assert_abs_diff_eq!(composite_runoff_coefficient(&[lu(0.7, 3.0)]).unwrap(), 0.7);
        assert_abs_diff_eq!(
            composite_runoff_coefficient(&[lu(0.2, 1.0), lu(0.4, 1.0)]).unwrap(),
            0.3,
            epsilon = 1e-12
        );
        assert!(composite_runoff_coefficient(&[]).is_err());
    }

    #[test]
    fn rational_volume() {
        assert_eq!(runoff_volume(0.5, 0.0, 10.0).unwrap(), 0.0);
        assert_abs_diff_eq!(runoff_volume(0.9, 26.0, 12.56).unwrap(), 2938.0, epsilon = 2.0);
        assert!(runoff_volume(-0.1, 1.0, 1.0).is_err());
    }

    #[test]
    fn land_use_area_mismatch_is_reported() {
        let mut sc = Subcatchment::simple("S", 2.0, 0.5, "O");
        sc.land_uses.push(LandUse {
            name: "roof".into(),
            runoff_coefficient: 0.9,
            area_ha: 1.0,
            surface: SurfaceClass::Roof,
        });
        assert_eq!(sc.problems().len(), 1);
    }
}
