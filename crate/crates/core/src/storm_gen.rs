//! Rainfall statistics and synthetic design storms.
//!
//! The annual total runoff control rate (ATRCR) of a capture depth `h` is the
//! share of long-term rainfall volume that falls in events, or parts of
//! events, not exceeding `h`:
//!
//! ```text
//! ATRCR(h) = sum_i min(P_i, h) / sum_i P_i
//! ```
//!
//! Design hyetographs follow the Chicago construction. The instantaneous
//! intensity before the peak, with `tb` the time remaining to the peak, is
//! `A[(1-n)(tb/r) + b] / [(tb/r) + b]^(1+n)`; after the peak the same curve is
//! used with `ta/(1-r)`. Ordinates are averaged over each step by exact
//! integration of the curve and then rescaled to the requested total depth.

use std::io::{Read, Write};

use chrono::{Duration, NaiveDate, NaiveDateTime};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One discrete rainfall event.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RainEvent {
    pub start: NaiveDateTime,
    pub depth_mm: f64,
}

/// A series of discrete rainfall events, strictly ordered in time.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RainRecord {
    events: Vec<RainEvent>,
}

impl RainRecord {
    pub fn new(events: Vec<RainEvent>) -> Result<Self> {
        for (i, ev) in events.iter().enumerate() {
            if !(ev.depth_mm >= 0.0) || !ev.depth_mm.is_finite() {
                return Err(Error::validation(format!(
                    "rain event {i} has invalid depth {}",
                    ev.depth_mm
                )));
            }
        }
        for pair in events.windows(2) {
            if pair[1].start <= pair[0].start {
                return Err(Error::validation(format!(
                    "rain event dates must be strictly increasing ({} follows {})",
                    pair[1].start, pair[0].start
                )));
            }
        }
        Ok(Self { events })
    }

    /// Builds a record from bare depths, dated one day apart from 2000-01-01.
    /// Handy for statistics where dates do not matter.
    pub fn from_depths(depths: &[f64]) -> Result<Self> {
        let origin = NaiveDate::from_ymd_opt(2000, 1, 1)
            .expect("valid date")
            .and_hms_opt(0, 0, 0)
            .expect("valid time");
        let events = depths
            .iter()
            .enumerate()
            .map(|(i, &d)| RainEvent {
                start: origin + Duration::days(i as i64),
                depth_mm: d,
            })
            .collect();
        Self::new(events)
    }

    pub fn events(&self) -> &[RainEvent] {
        &self.events
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn max_depth(&self) -> f64 {
        self.events.iter().map(|e| e.depth_mm).fold(0.0, f64::max)
    }

    /// Reads a `date,depth_mm` CSV. Dates are ISO-8601, either a plain date or
    /// a date-time.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self> {
        #[derive(Deserialize)]
        struct Row {
            date: String,
            depth_mm: f64,
        }
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let mut events = Vec::new();
        for row in rdr.deserialize() {
            let row: Row = row?;
            events.push(RainEvent {
                start: parse_iso_datetime(&row.date)?,
                depth_mm: row.depth_mm,
            });
        }
        Self::new(events)
    }
}

pub(crate) fn parse_iso_datetime(s: &str) -> Result<NaiveDateTime> {
    if let Ok(dt) = NaiveDateTime::parse_from_str(s, "%Y-%m-%dT%H:%M:%S") {
        return Ok(dt);
    }
    if let Ok(dt) = NaiveDateTime::parse_from_str(s, "%Y-%m-%d %H:%M:%S") {
        return Ok(dt);
    }
    if let Ok(dt) = NaiveDateTime::parse_from_str(s, "%Y-%m-%dT%H:%M") {
        return Ok(dt);
    }
    NaiveDate::parse_from_str(s, "%Y-%m-%d")
        .map(|d| d.and_hms_opt(0, 0, 0).expect("midnight"))
        .map_err(|_| Error::Parse(format!("invalid ISO-8601 date '{s}'")))
}

/// Splits continuous gauge readings into discrete events. A dry spell of at
/// least `dry_gap` between wet readings starts a new event.
pub fn segment_events(readings: &[(NaiveDateTime, f64)], dry_gap: Duration) -> Result<RainRecord> {
    let mut events: Vec<RainEvent> = Vec::new();
    let mut last_wet: Option<NaiveDateTime> = None;
    for pair in readings.windows(2) {
        if pair[1].0 <= pair[0].0 {
            return Err(Error::validation("gauge readings must be strictly increasing in time"));
        }
    }
    for &(t, depth) in readings {
        if !(depth >= 0.0) {
            return Err(Error::validation(format!("negative gauge reading {depth} at {t}")));
        }
        if depth == 0.0 {
            continue;
        }
        match (last_wet, events.last_mut()) {
            (Some(prev), Some(ev)) if t - prev < dry_gap => ev.depth_mm += depth,
            _ => events.push(RainEvent {
                start: t,
                depth_mm: depth,
            }),
        }
        last_wet = Some(t);
    }
    RainRecord::new(events)
}

/// Options for ATRCR statistics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AtrcrOptions {
    /// Events with depth at or below this threshold are ignored.
    pub min_event_depth_mm: f64,
}

impl Default for AtrcrOptions {
    fn default() -> Self {
        Self {
            min_event_depth_mm: 2.0,
        }
    }
}

fn counted_depths(record: &RainRecord, opts: &AtrcrOptions) -> Result<Vec<f64>> {
    let depths: Vec<f64> = record
        .events()
        .iter()
        .map(|e| e.depth_mm)
        .filter(|&d| d > opts.min_event_depth_mm)
        .collect();
    if depths.is_empty() || depths.iter().sum::<f64>() <= 0.0 {
        return Err(Error::NoRainfall);
    }
    Ok(depths)
}

fn atrcr_of(depths: &[f64], total: f64, h: f64) -> f64 {
    depths.iter().map(|&p| p.min(h)).sum::<f64>() / total
}

/// ATRCR fraction for a single capture depth.
pub fn atrcr(record: &RainRecord, depth_mm: f64, opts: &AtrcrOptions) -> Result<f64> {
    Ok(atrcr_curve(record, &[depth_mm], opts)?[0].1)
}

/// Evaluates the ATRCR curve at each requested capture depth.
pub fn atrcr_curve(record: &RainRecord, depths: &[f64], opts: &AtrcrOptions) -> Result<Vec<(f64, f64)>> {
    if record.is_empty() {
        return Err(Error::NoRainfall);
    }
    if let Some(&bad) = depths.iter().find(|&&h| !(h >= 0.0)) {
        return Err(Error::validation(format!("capture depth must be >= 0, got {bad}")));
    }
    let counted = counted_depths(record, opts)?;
    let total: f64 = counted.iter().sum();
    Ok(depths.iter().map(|&h| (h, atrcr_of(&counted, total, h))).collect())
}

/// Smallest capture depth whose ATRCR reaches `target`, found by bisection.
/// The returned depth is within `tol_mm` above the exact answer.
pub fn invert_atrcr(record: &RainRecord, target: f64, opts: &AtrcrOptions) -> Result<f64> {
    invert_atrcr_tol(record, target, opts, 1e-3)
}

pub fn invert_atrcr_tol(record: &RainRecord, target: f64, opts: &AtrcrOptions, tol_mm: f64) -> Result<f64> {
    if record.is_empty() {
        return Err(Error::NoRainfall);
    }
    if !(target > 0.0 && target < 1.0) {
        return Err(Error::validation(format!(
            "ATRCR target must lie in (0, 1), got {target}"
        )));
    }
    let counted = counted_depths(record, opts)?;
    let total: f64 = counted.iter().sum();
    let (mut lo, mut hi) = (0.0_f64, counted.iter().cloned().fold(0.0, f64::max));
    while hi - lo > tol_mm {
        let mid = 0.5 * (lo + hi);
        if atrcr_of(&counted, total, mid) >= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Intensity-duration-frequency constants, `i = A / (t + b)^n` with `t` in minutes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IdfParams {
    pub a: f64,
    pub b: f64,
    pub n: f64,
}

impl Default for IdfParams {
    /// Placeholder constants for tests and demos; real projects supply local values.
    fn default() -> Self {
        Self {
            a: 20.0,
            b: 10.0,
            n: 0.75,
        }
    }
}

impl IdfParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.n < 1.0) {
            return Err(Error::DivergentIdf(self.n));
        }
        if !(self.a > 0.0) || !(self.b >= 0.0) || !(self.n >= 0.0) {
            return Err(Error::validation(format!(
                "IDF constants require A > 0, b >= 0, 0 <= n < 1 (got A={}, b={}, n={})",
                self.a, self.b, self.n
            )));
        }
        Ok(())
    }

    /// Depth accumulated over the most intense window of `t` minutes, up to a
    /// constant factor.
    fn window_depth(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        self.a * t / (t + self.b).powf(self.n)
    }
}

/// Rainfall intensity series for one storm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyetograph {
    pub step_s: u32,
    /// Mean intensity in each step, mm/hr.
    pub intensities: Vec<f64>,
    pub total_depth_mm: f64,
    pub duration_min: f64,
    pub peak_ratio: f64,
}

impl Hyetograph {
    /// Builds a hyetograph from observed or tabulated intensities.
    pub fn from_intensities(step_s: u32, intensities: Vec<f64>) -> Result<Self> {
        if step_s == 0 {
            return Err(Error::validation("hyetograph step must be positive"));
        }
        if intensities.iter().any(|&i| !(i >= 0.0) || !i.is_finite()) {
            return Err(Error::validation("hyetograph intensities must be finite and >= 0"));
        }
        let total = intensities.iter().sum::<f64>() * step_s as f64 / 3600.0;
        let peak = intensities
            .iter()
            .enumerate()
            .fold((0, f64::MIN), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc })
            .0;
        let n = intensities.len();
        Ok(Self {
            step_s,
            total_depth_mm: total,
            duration_min: step_s as f64 * n as f64 / 60.0,
            peak_ratio: if n == 0 { 0.5 } else { (peak as f64 + 0.5) / n as f64 },
            intensities,
        })
    }

    /// Integral of the series, mm.
    pub fn depth(&self) -> f64 {
        self.intensities.iter().sum::<f64>() * self.step_s as f64 / 3600.0
    }

    pub fn len(&self) -> usize {
        self.intensities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intensities.is_empty()
    }

    /// Intensity (mm/hr) in force at `t_s` seconds after the storm start.
    pub fn intensity_at(&self, t_s: f64) -> f64 {
        if t_s < 0.0 {
            return 0.0;
        }
        let idx = (t_s / self.step_s as f64).floor() as usize;
        self.intensities.get(idx).copied().unwrap_or(0.0)
    }

    /// Index of the largest ordinate; the earliest one on ties.
    pub fn peak_index(&self) -> usize {
        let mut best = 0;
        for (i, &v) in self.intensities.iter().enumerate() {
            if v > self.intensities[best] {
                best = i;
            }
        }
        best
    }

    /// Writes `t_min,intensity_mm_per_hr`, one row per step start.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["t_min", "intensity_mm_per_hr"])?;
        for (i, v) in self.intensities.iter().enumerate() {
            let t_min = i as f64 * self.step_s as f64 / 60.0;
            w.write_record([t_min.to_string(), v.to_string()])?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }
}

/// Generates a Chicago design storm of the given total depth.
pub fn chicago_hyetograph(
    depth_mm: f64,
    duration_min: f64,
    peak_ratio: f64,
    idf: &IdfParams,
    step_s: u32,
) -> Result<Hyetograph> {
    idf.validate()?;
    if !(depth_mm > 0.0) {
        return Err(Error::validation(format!("storm depth must be > 0, got {depth_mm}")));
    }
    if !(peak_ratio > 0.0 && peak_ratio < 1.0) {
        return Err(Error::validation(format!(
            "peak ratio must lie in (0, 1), got {peak_ratio}"
        )));
    }
    if step_s == 0 || !(duration_min > 0.0) {
        return Err(Error::validation("duration and step must be positive"));
    }
    let total_s = duration_min * 60.0;
    let steps = total_s / step_s as f64;
    if (steps - steps.round()).abs() > 1e-9 {
        return Err(Error::validation(format!(
            "step of {step_s} s does not divide a {duration_min} min storm"
        )));
    }
    let steps = steps.round() as usize;

    let peak_t = peak_ratio * duration_min;
    let before = |tb: f64| peak_ratio * idf.window_depth(tb / peak_ratio);
    let after = |ta: f64| (1.0 - peak_ratio) * idf.window_depth(ta / (1.0 - peak_ratio));
    // Cumulative (unscaled) mass from the storm start to `t` minutes.
    let mass = |t: f64| {
        if t <= peak_t {
            before(peak_t) - before(peak_t - t)
        } else {
            before(peak_t) + after(t - peak_t)
        }
    };

    let step_min = step_s as f64 / 60.0;
    let raw: Vec<f64> = (0..steps)
        .map(|i| {
            let t0 = i as f64 * step_min;
            let t1 = (i + 1) as f64 * step_min;
            (mass(t1) - mass(t0)).max(0.0)
        })
        .collect();
    let raw_depth = raw.iter().sum::<f64>() * step_s as f64 / 3600.0;
    if !(raw_depth > 0.0) || !raw_depth.is_finite() {
        return Err(Error::validation("IDF constants produce a degenerate storm"));
    }
    let scale = depth_mm / raw_depth;
    Ok(Hyetograph {
        step_s,
        intensities: raw.into_iter().map(|v| v * scale).collect(),
        total_depth_mm: depth_mm,
        duration_min,
        peak_ratio,
    })
}

/// Shared shape settings for a family of design storms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StormShape {
    pub duration_min: f64,
    pub peak_ratio: f64,
    pub idf: IdfParams,
    pub step_s: u32,
}

/// One Chicago storm per requested depth, in input order.
pub fn design_storm_suite(depths: &[f64], shape: &StormShape) -> Result<Vec<Hyetograph>> {
    depths
        .iter()
        .map(|&d| chicago_hyetograph(d, shape.duration_min, shape.peak_ratio, &shape.idf, shape.step_s))
        .collect()
}
