//! Pollutant buildup, washoff and LID treatment.
//!
//! Buildup over the antecedent dry period uses the saturation form
//! `B = C1 t / (C2 + t)`. During the event the surface mass decays as
//! `dB/dt = -C3 q^C4 B`, integrated exactly over each step.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hydrology::{Hydrograph, Subcatchment, SubcatchmentResult, SurfaceClass};
use crate::lid::{LidKind, LidPlacement};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PollutantSpec {
    pub name: String,
    /// C1, kg/ha.
    pub buildup_max: f64,
    /// C2, days.
    pub half_saturation_days: f64,
    /// C3, with the washoff rate in 1/hr for runoff in mm/hr.
    pub washoff_coeff: f64,
    /// C4.
    pub washoff_exponent: f64,
    /// Per-surface override of `buildup_max`.
    #[serde(default)]
    pub surface_buildup_max: BTreeMap<SurfaceClass, f64>,
    /// Fraction of the load entering a facility that it removes.
    #[serde(default)]
    pub removal: BTreeMap<LidKind, f64>,
}

impl PollutantSpec {
    pub fn new(name: &str, c1: f64, c2: f64, c3: f64, c4: f64) -> Self {
        Self {
            name: name.to_string(),
            buildup_max: c1,
            half_saturation_days: c2,
            washoff_coeff: c3,
            washoff_exponent: c4,
            surface_buildup_max: BTreeMap::new(),
            removal: BTreeMap::new(),
        }
    }

    pub fn problems(&self) -> Vec<String> {
        let n = &self.name;
        let mut out = Vec::new();
        if !(self.buildup_max > 0.0 && self.half_saturation_days > 0.0 && self.washoff_coeff > 0.0) {
            out.push(format!("pollutant '{n}': C1, C2 and C3 must be > 0"));
        }
        if !(self.washoff_exponent >= 0.0) {
            out.push(format!("pollutant '{n}': washoff exponent must be >= 0"));
        }
        if self.surface_buildup_max.values().any(|&v| !(v > 0.0)) {
            out.push(format!("pollutant '{n}': surface buildup maxima must be > 0"));
        }
        for (kind, &r) in &self.removal {
            if !(0.0..=1.0).contains(&r) {
                out.push(format!("pollutant '{n}': removal for {kind} must lie in [0, 1]"));
            }
        }
        out
    }

    pub fn removal_for(&self, kind: LidKind) -> f64 {
        self.removal.get(&kind).copied().unwrap_or(0.0)
    }

    fn max_for(&self, surface: SurfaceClass) -> f64 {
        self.surface_buildup_max
            .get(&surface)
            .copied()
            .unwrap_or(self.buildup_max)
    }
}

fn saturation(c1: f64, c2: f64, days: f64) -> f64 {
    c1 * days / (c2 + days)
}

/// Mass per unit area after `antecedent_dry_days` of dry weather, kg/ha.
pub fn buildup(spec: &PollutantSpec, antecedent_dry_days: f64) -> Result<f64> {
    if !(antecedent_dry_days >= 0.0) {
        return Err(Error::validation(format!(
            "antecedent dry period must be >= 0, got {antecedent_dry_days}"
        )));
    }
    Ok(saturation(spec.buildup_max, spec.half_saturation_days, antecedent_dry_days))
}

/// Mass washed off a surface holding `available_kg` during `dt_s` seconds of
/// runoff at `runoff_mm_hr`.
pub fn washoff_step(spec: &PollutantSpec, runoff_mm_hr: f64, available_kg: f64, dt_s: f64) -> Result<f64> {
    if !(runoff_mm_hr >= 0.0 && available_kg >= 0.0 && dt_s >= 0.0) {
        return Err(Error::validation("washoff inputs must be >= 0"));
    }
    if runoff_mm_hr == 0.0 || available_kg == 0.0 {
        return Ok(0.0);
    }
    let rate = spec.washoff_coeff * runoff_mm_hr.powf(spec.washoff_exponent);
    Ok(available_kg * (1.0 - (-rate * dt_s / 3600.0).exp()))
}

/// Pollutant mass per step at one site.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pollutograph {
    pub pollutant: String,
    pub site: String,
    pub step_s: u32,
    pub loads_kg: Vec<f64>,
}

impl Pollutograph {
    pub fn new(pollutant: &str, site: &str, step_s: u32, loads_kg: Vec<f64>) -> Self {
        Self {
            pollutant: pollutant.to_string(),
            site: site.to_string(),
            step_s,
            loads_kg,
        }
    }

    /// Concentration in mg/L for each step with flow; `None` when dry.
    pub fn concentrations(&self, flow: &Hydrograph) -> Vec<Option<f64>> {
        self.loads_kg
            .iter()
            .enumerate()
            .map(|(i, &load)| {
                let q = flow.flows.get(i).copied().unwrap_or(0.0);
                if q > 0.0 {
                    Some(load * 1.0e6 / (q * self.step_s as f64))
                } else {
                    None
                }
            })
            .collect()
    }

    /// As a flow-like series so the translation router can carry it.
    pub(crate) fn as_series(&self) -> Hydrograph {
        Hydrograph::new(self.site.clone(), self.step_s, self.loads_kg.clone())
    }

    pub(crate) fn from_series(pollutant: &str, h: Hydrograph) -> Self {
        Self {
            pollutant: pollutant.to_string(),
            site: h.site,
            step_s: h.step_s,
            loads_kg: h.flows,
        }
    }

    /// Writes `t_s,load_kg,conc_mg_L`; the concentration is blank in dry steps.
    pub fn write_csv<W: Write>(&self, flow: &Hydrograph, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["t_s", "load_kg", "conc_mg_L"])?;
        for (i, (load, conc)) in self.loads_kg.iter().zip(self.concentrations(flow)).enumerate() {
            w.write_record([
                (i as u64 * self.step_s as u64).to_string(),
                load.to_string(),
                conc.map(|c| c.to_string()).unwrap_or_default(),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }
}

/// `out = in * (1 - treated_fraction * removal_fraction)` for every step.
pub fn apply_lid_removal(p: &Pollutograph, treated_fraction: f64, removal_fraction: f64) -> Result<Pollutograph> {
    if !(0.0..=1.0).contains(&treated_fraction) || !(0.0..=1.0).contains(&removal_fraction) {
        return Err(Error::validation("treated and removal fractions must lie in [0, 1]"));
    }
    let keep = 1.0 - treated_fraction * removal_fraction;
    Ok(Pollutograph {
        loads_kg: p.loads_kg.iter().map(|l| l * keep).collect(),
        ..p.clone()
    })
}

pub fn event_load(p: &Pollutograph) -> f64 {
    p.loads_kg.iter().sum()
}

/// Event mean concentration, mg/L. Zero when there is no flow.
pub fn event_mean_concentration(p: &Pollutograph, flow: &Hydrograph) -> Result<f64> {
    if p.step_s != flow.step_s {
        return Err(Error::validation("pollutograph and hydrograph steps differ"));
    }
    let litres = flow.flows.iter().sum::<f64>() * flow.step_s as f64;
    if litres <= 0.0 {
        return Ok(0.0);
    }
    Ok(event_load(p) * 1.0e6 / litres)
}

/// Per-pollutant outcome for one subcatchment.
#[derive(Debug, Clone, PartialEq)]
pub struct QualityResult {
    /// Load delivered to the outlet after treatment.
    pub outlet: Pollutograph,
    pub initial_mass_kg: f64,
    pub washed_off_kg: f64,
    pub residual_kg: f64,
}

/// Surface mass available at the start of the event on the non-LID area, kg.
pub fn initial_mass(spec: &PollutantSpec, sc: &Subcatchment, surface_area_ha: f64, dry_days: f64) -> Result<f64> {
    buildup(spec, dry_days)?;
    let per_area = if sc.land_uses.is_empty() {
        saturation(spec.buildup_max, spec.half_saturation_days, dry_days) * sc.area_ha
    } else {
        sc.land_uses
            .iter()
            .map(|lu| saturation(spec.max_for(lu.surface), spec.half_saturation_days, dry_days) * lu.area_ha)
            .sum()
    };
    Ok(per_area * surface_area_ha / sc.area_ha)
}

/// Washes the subcatchment surface with the simulated runoff and treats the
/// share routed through LID units.
///
/// Each unit lets through `pass_through * (1 - removal)` of the load it
/// receives, where `pass_through` is its outflow over inflow for the event.
pub fn simulate_quality(
    spec: &PollutantSpec,
    sc: &Subcatchment,
    hydro: &SubcatchmentResult,
    placements: &[LidPlacement],
    treated_fractions: &[f64],
    dry_days: f64,
) -> Result<QualityResult> {
    if placements.len() != hydro.lid_units.len() || placements.len() != treated_fractions.len() {
        return Err(Error::validation("placements, LID results and treated fractions must align"));
    }
    let step = hydro.hydrograph.step_s;
    let dt = step as f64;
    let b0 = initial_mass(spec, sc, hydro.surface_area_ha, dry_days)?;
    let mut b = b0;
    let mut washed = Vec::with_capacity(hydro.surface_runoff_mm_hr.len());
    for &q in &hydro.surface_runoff_mm_hr {
        let w = washoff_step(spec, q.max(0.0), b, dt)?;
        b -= w;
        washed.push(w);
    }
    let washed_total: f64 = washed.iter().sum();
    let reduction: f64 = placements
        .iter()
        .zip(&hydro.lid_units)
        .zip(treated_fractions)
        .map(|((p, unit), &tf)| tf * (1.0 - unit.pass_through() * (1.0 - spec.removal_for(p.kind))))
        .sum();
    let raw = Pollutograph::new(&spec.name, &sc.outlet, step, washed);
    let outlet = apply_lid_removal(&raw, 1.0, reduction.clamp(0.0, 1.0))?;
    Ok(QualityResult {
        outlet,
        initial_mass_kg: b0,
        washed_off_kg: washed_total,
        residual_kg: b,
    })
}
