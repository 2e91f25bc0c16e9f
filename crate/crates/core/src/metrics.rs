//! Goodness of fit and event statistics.

use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hydrology::Hydrograph;

/// NSE threshold above which a model is accepted.
pub const NSE_ACCEPTANCE: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub nse: f64,
    pub n_points: usize,
    pub pass: bool,
}

/// Nash-Sutcliffe efficiency, `1 - sum (O - S)^2 / sum (O - mean O)^2`.
pub fn nse(observed: &[f64], simulated: &[f64]) -> Result<FitReport> {
    if observed.len() != simulated.len() {
        return Err(Error::validation(format!(
            "observed has {} values and simulated has {}",
            observed.len(),
            simulated.len()
        )));
    }
    if observed.len() < 2 {
        return Err(Error::validation("NSE needs at least two points"));
    }
    let mean = observed.iter().sum::<f64>() / observed.len() as f64;
    let denom: f64 = observed.iter().map(|o| (o - mean).powi(2)).sum();
    if denom == 0.0 {
        return Err(Error::ZeroVariance);
    }
    let num: f64 = observed.iter().zip(simulated).map(|(o, s)| (o - s).powi(2)).sum();
    let value = 1.0 - num / denom;
    Ok(FitReport {
        nse: value,
        n_points: observed.len(),
        pass: value > NSE_ACCEPTANCE,
    })
}

/// Irregular time series, seconds since the event start.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    pub times_s: Vec<f64>,
    pub values: Vec<f64>,
}

impl TimeSeries {
    pub fn new(times_s: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times_s.len() != values.len() {
            return Err(Error::validation("times and values differ in length"));
        }
        if times_s.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::validation("times must be strictly increasing"));
        }
        Ok(Self { times_s, values })
    }

    /// Reads `t_s,value`.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self> {
        #[derive(Deserialize)]
        struct Row {
            t_s: f64,
            value: f64,
        }
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let (mut t, mut v) = (Vec::new(), Vec::new());
        for row in rdr.deserialize() {
            let row: Row = row?;
            t.push(row.t_s);
            v.push(row.value);
        }
        Self::new(t, v)
    }

    /// Step-centred flows of a hydrograph are placed at the start of each step.
    pub fn from_hydrograph(h: &Hydrograph) -> Self {
        Self {
            times_s: (0..h.len()).map(|i| i as f64 * h.step_s as f64).collect(),
            values: h.flows.clone(),
        }
    }

    /// Linear interpolation; clamps to the end values outside the range.
    pub fn value_at(&self, t: f64) -> f64 {
        if self.times_s.is_empty() {
            return 0.0;
        }
        let idx = self.times_s.partition_point(|&x| x <= t);
        if idx == 0 {
            return self.values[0];
        }
        if idx == self.times_s.len() {
            return self.values[idx - 1];
        }
        let (t0, t1) = (self.times_s[idx - 1], self.times_s[idx]);
        let (v0, v1) = (self.values[idx - 1], self.values[idx]);
        v0 + (v1 - v0) * (t - t0) / (t1 - t0)
    }
}

/// NSE with the simulated series interpolated onto the observation times.
pub fn nse_at_observations(observed: &TimeSeries, simulated: &TimeSeries) -> Result<FitReport> {
    let sim: Vec<f64> = observed.times_s.iter().map(|&t| simulated.value_at(t)).collect();
    nse(&observed.values, &sim)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeakStats {
    pub peak_lps: f64,
    pub peak_time_s: f64,
    pub index: usize,
}

/// Largest flow and when it first occurs.
pub fn peak_stats(h: &Hydrograph) -> Result<PeakStats> {
    if h.is_empty() {
        return Err(Error::validation(format!("hydrograph '{}' is empty", h.site)));
    }
    let mut index = 0;
    for (i, &q) in h.flows.iter().enumerate() {
        if q > h.flows[index] {
            index = i;
        }
    }
    Ok(PeakStats {
        peak_lps: h.flows[index],
        peak_time_s: index as f64 * h.step_s as f64,
        index,
    })
}

/// Percent reduction from `base` to `scenario`. Negative values mean the
/// scenario is worse; they are logged, not clamped.
pub fn reduction(base: f64, scenario: f64) -> Result<f64> {
    if !(base > 0.0) {
        return Err(Error::validation(format!("reduction needs a positive baseline, got {base}")));
    }
    let pct = (base - scenario) / base * 100.0;
    if pct < 0.0 {
        log::warn!("scenario value {scenario} exceeds baseline {base} ({pct:.2}% reduction)");
    }
    Ok(pct)
}
