//! Markdown, CSV and JSON renderings of the result tables.
//!
//! Values are kept at full precision; rounding happens only when a table is
//! rendered as text (3 decimals for scores, 1 for percentages, whole minutes
//! for delays).

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluator;
use crate::lid::LidKind;

use super::pipeline::{OutputSet, ProjectResults};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Cell {
    Text(String),
    Num { value: f64, decimals: u8 },
}

impl Cell {
    fn num(value: f64, decimals: u8) -> Self {
        Cell::Num { value, decimals }
    }

    pub fn render(&self) -> String {
        match self {
            Cell::Text(s) => s.clone(),
            Cell::Num { value, decimals } => {
                let s = format!("{:.*}", *decimals as usize, value);
                // Avoid "-0.0" after rounding.
                if s.trim_start_matches('-').chars().all(|c| c == '0' || c == '.') {
                    s.trim_start_matches('-').to_string()
                } else {
                    s
                }
            }
        }
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub id: String,
    pub title: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    fn new(id: &str, title: &str, columns: Vec<String>) -> Self {
        Self {
            id: id.to_string(),
            title: title.to_string(),
            columns,
            rows: Vec::new(),
        }
    }

    pub fn to_markdown(&self) -> String {
        let mut s = format!("## {}\n\n| {} |\n|", self.title, self.columns.join(" | "));
        for _ in &self.columns {
            s.push_str("---|");
        }
        s.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::render).collect();
            let _ = writeln!(s, "| {} |", cells.join(" | "));
        }
        s
    }

    pub fn write_csv(&self, buf: &mut Vec<u8>) -> Result<()> {
        let mut w = csv::Writer::from_writer(buf);
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render))?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }

    /// Looks up a rendered cell by row label (first column) and column name.
    pub fn cell(&self, row_label: &str, column: &str) -> Option<&Cell> {
        let c = self.columns.iter().position(|x| x == column)?;
        self.rows
            .iter()
            .find(|r| r.first().map(Cell::render).as_deref() == Some(row_label))
            .and_then(|r| r.get(c))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportTables {
    pub tables: Vec<Table>,
}

impl ReportTables {
    pub fn get(&self, id: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.id == id)
    }

    pub fn to_markdown(&self) -> String {
        self.tables.iter().map(Table::to_markdown).collect::<Vec<_>>().join("\n")
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

fn indicator_decimals(id: &str) -> u8 {
    if id == evaluator::PEAK_DELAY {
        0
    } else if id.ends_with("_reduction") {
        1
    } else {
        3
    }
}

/// Builds the six tables; sections without data keep their headers.
pub fn render_tables(results: &ProjectResults) -> ReportTables {
    let mut tables = Vec::new();

    let mut t1 = Table::new(
        "land_use_runoff",
        "Runoff by land use",
        ["No.", "Land use", "Runoff coefficient", "Area (ha)", "Runoff (m3)"]
            .map(String::from)
            .to_vec(),
    );
    if let Some(s) = &results.sizing {
        for (i, lu) in s.land_uses.iter().enumerate() {
            t1.rows.push(vec![
                (i + 1).to_string().into(),
                lu.name.clone().into(),
                Cell::num(lu.runoff_coefficient, 2),
                Cell::num(lu.area_ha, 2),
                Cell::num(lu.volume_m3, 0),
            ]);
        }
        t1.rows.push(vec![
            "Total".into(),
            "".into(),
            Cell::num(s.composite_coefficient, 2),
            Cell::num(s.area_ha, 2),
            Cell::num(s.total_volume_m3, 0),
        ]);
    }
    tables.push(t1);

    let mut cols = vec!["Scenario".to_string()];
    cols.extend(LidKind::ALL.iter().map(|k| format!("{k} (ha)")));
    cols.extend(["Total (ha)", "Capacity (m3)", "Required (m3)", "Compliant"].map(String::from));
    let mut t2 = Table::new("scenario_areas", "LID areas and control capacity per scenario", cols);
    if let Some(s) = &results.sizing {
        for row in &s.scenarios {
            let mut r: Vec<Cell> = vec![row.scenario.clone().into()];
            r.extend(LidKind::ALL.iter().map(|k| Cell::num(row.areas_ha.get(k).copied().unwrap_or(0.0), 3)));
            r.push(Cell::num(row.total_area_ha, 3));
            r.push(Cell::num(row.capacity_m3, 0));
            r.push(Cell::num(row.required_m3, 0));
            r.push(if row.compliant { "yes" } else { "no" }.into());
            t2.rows.push(r);
        }
    }
    tables.push(t2);

    let mut t3 = Table::new(
        "weights",
        "Indicator weights",
        ["Indicator", "Parent", "Level", "Weight"].map(String::from).to_vec(),
    );
    if let Some(tree) = &results.weights {
        for (n, p, d) in tree.walk() {
            t3.rows.push(vec![
                n.name.clone().into(),
                p.unwrap_or("").into(),
                d.to_string().into(),
                Cell::num(n.weight, 3),
            ]);
        }
    }
    tables.push(t3);

    let raw = results.raw.as_ref();
    let mut cols = vec!["Scenario".to_string()];
    cols.extend(raw.iter().flat_map(|t| t.indicators.iter().cloned()));
    let mut t4 = Table::new("raw_indicators", "Raw indicator values", cols);
    if let Some(t) = raw {
        for (s, row) in t.scenarios.iter().zip(&t.values) {
            let mut r: Vec<Cell> = vec![s.clone().into()];
            r.extend(t.indicators.iter().zip(row).map(|(id, &v)| Cell::num(v, indicator_decimals(id))));
            t4.rows.push(r);
        }
    }
    tables.push(t4);

    let report = results.report.as_ref();
    let mut cols = vec!["Scenario".to_string()];
    cols.extend(report.iter().flat_map(|r| r.normalized.indicators.iter().cloned()));
    let mut t5 = Table::new("normalized_indicators", "Normalized indicator values", cols);
    if let Some(r) = report {
        for (s, row) in r.normalized.scenarios.iter().zip(&r.normalized.values) {
            let mut cells: Vec<Cell> = vec![s.clone().into()];
            cells.extend(row.iter().map(|&v| Cell::num(v, 3)));
            t5.rows.push(cells);
        }
    }
    tables.push(t5);

    let mut cols = vec!["Scenario".to_string()];
    if let Some(r) = report {
        cols.extend(r.benefits().iter().map(|n| n.name.clone()));
        cols.push(r.nodes[0].name.clone());
    }
    cols.push("Rank".to_string());
    let mut t6 = Table::new("benefits", "Individual and comprehensive benefits", cols);
    if let Some(r) = report {
        for (m, s) in r.scenarios.iter().enumerate() {
            let mut cells: Vec<Cell> = vec![s.clone().into()];
            cells.extend(r.benefits().iter().map(|n| Cell::num(n.scores[m], 3)));
            cells.push(Cell::num(r.comprehensive()[m], 3));
            let rank = r.ranking.order.iter().position(|x| x == s).map(|i| i + 1).unwrap_or(0);
            cells.push(rank.to_string().into());
            t6.rows.push(cells);
        }
    }
    tables.push(t6);

    ReportTables { tables }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Markdown,
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "md" | "markdown" => Ok(Format::Markdown),
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(Error::validation(format!("unknown report format '{other}'"))),
        }
    }
}

pub(crate) fn add_tables(tables: &ReportTables, formats: &[Format], set: &mut OutputSet) -> Result<()> {
    for f in formats {
        match f {
            Format::Markdown => set.add("report/report.md", tables.to_markdown().into_bytes()),
            Format::Json => set.add("report/report.json", tables.to_json()?.into_bytes()),
            Format::Csv => {
                for (i, t) in tables.tables.iter().enumerate() {
                    set.add_csv(format!("report/table{}_{}.csv", i + 1, t.id), |b| t.write_csv(b))?;
                }
            }
        }
    }
    Ok(())
}

pub(crate) fn add_report_files(results: &ProjectResults, set: &mut OutputSet) -> Result<()> {
    add_tables(&render_tables(results), &[Format::Markdown, Format::Csv, Format::Json], set)
}

/// Writes the chosen renderings under `out/report/`.
pub fn write_report(results: &ProjectResults, formats: &[Format], out: &std::path::Path) -> Result<Vec<String>> {
    let mut set = OutputSet::default();
    add_tables(&render_tables(results), formats, &mut set)?;
    Ok(set.write(out)?.into_keys().collect())
}
