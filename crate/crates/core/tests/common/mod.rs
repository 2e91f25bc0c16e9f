//! Brute-force references shared by the integration tests.
#![allow(dead_code)]

use lid_eval::lid::LidSpec;

/// Explicit Euler at 1 s for a pervious plane with constant infiltration,
/// worked in SI units.
pub fn plane_oracle(area_m2: f64, width_m: f64, n: f64, slope: f64, f_mm_hr: f64, rain: &[(f64, f64)], end_s: f64) -> f64 {
    let f = f_mm_hr / 1000.0 / 3600.0;
    let mut d = 0.0_f64;
    let mut runoff_m = 0.0;
    let mut t = 0.0;
    while t < end_s {
        let i = rain
            .iter()
            .find(|(until, _)| t < *until)
            .map(|(_, r)| r / 1000.0 / 3600.0)
            .unwrap_or(0.0);
        d += i;
        d -= f.min(d);
        let q = (width_m / area_m2 / n * slope.sqrt() * d.powf(5.0 / 3.0)).min(d);
        d -= q;
        runoff_m += q;
        t += 1.0;
    }
    runoff_m * area_m2
}

/// The same fill, drain and spill rules stepped at 1 s.
pub fn bucket_oracle(spec: &LidSpec, area_m2: f64, inflow_m3_per_s: &[(f64, f64)], end_s: f64) -> f64 {
    let cap = spec.berm_mm + spec.soil_thickness_mm * spec.soil_porosity + spec.storage_thickness_mm * spec.storage_void_ratio;
    let storage_cap = spec.storage_thickness_mm * spec.storage_void_ratio;
    let exfil = spec.seepage_mm_hr.min(spec.soil_ksat_mm_hr);
    let (mut s, mut out) = (0.0_f64, 0.0);
    let mut t = 0.0;
    while t < end_s {
        let q = inflow_m3_per_s.iter().find(|(until, _)| t < *until).map(|x| x.1).unwrap_or(0.0);
        s += q / area_m2 * 1000.0;
        s -= (exfil / 3600.0).min(s);
        let head = s.min(storage_cap);
        let ud = (spec.underdrain_coeff * head.sqrt() / 3600.0).min(head);
        s -= ud;
        let spill = (s - cap).max(0.0);
        s -= spill;
        out += ud + spill;
        t += 1.0;
    }
    out * area_m2 / 1000.0
}

