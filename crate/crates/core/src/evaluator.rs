//! Indicator normalization, hierarchical roll-up and scenario ranking.
//!
//! Raw indicator values `X[k][m]` are made dimensionless per indicator with
//! `I[k][m] = X[k][m] / sum_m X[k][m]`. Each internal node of the weight tree
//! then scores every scenario as `B = sum_k W_k * I_k` over its children,
//! recursively up to the comprehensive benefit at the root.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lid::{LidCatalog, Scenario};
use crate::metrics;

/// Whether a larger raw value is better.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Polarity {
    #[default]
    Benefit,
    Cost,
}

/// Where a leaf's raw values come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Simulated,
    FacilityDerived,
    #[default]
    Direct,
}

/// How facility-derived values are computed from LID areas.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FacilityMode {
    /// `X = sum_f area_f * score_f`
    #[default]
    Favorability,
    /// `X = 1 / sum_f area_f * cost_f`
    Reciprocal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct LeafBinding {
    #[serde(default)]
    pub polarity: Polarity,
    #[serde(default)]
    pub source: Source,
    #[serde(default)]
    pub mode: FacilityMode,
}

/// One node of the indicator hierarchy. Leaves carry an indicator binding and
/// are identified by their name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub name: String,
    pub weight: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<Node>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub leaf: Option<LeafBinding>,
}

impl Node {
    pub fn leaf(name: &str, weight: f64, binding: LeafBinding) -> Self {
        Self {
            name: name.to_string(),
            weight,
            children: Vec::new(),
            leaf: Some(binding),
        }
    }

    pub fn group(name: &str, weight: f64, children: Vec<Node>) -> Self {
        Self {
            name: name.to_string(),
            weight,
            children,
            leaf: None,
        }
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }

    pub fn binding(&self) -> LeafBinding {
        self.leaf.unwrap_or_default()
    }

    fn visit<'a>(&'a self, parent: Option<&'a str>, depth: usize, f: &mut impl FnMut(&'a Node, Option<&'a str>, usize)) {
        f(self, parent, depth);
        for c in &self.children {
            c.visit(Some(&self.name), depth + 1, f);
        }
    }

    fn find_mut(&mut self, name: &str) -> Option<&mut Node> {
        if self.name == name {
            return Some(self);
        }
        self.children.iter_mut().find_map(|c| c.find_mut(name))
    }
}

/// Flat form used in project files: each node names its parent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlatNode {
    pub name: String,
    #[serde(default)]
    pub parent: Option<String>,
    #[serde(default)]
    pub weight: Option<f64>,
    #[serde(default)]
    pub polarity: Polarity,
    #[serde(default)]
    pub source: Source,
    #[serde(default)]
    pub mode: FacilityMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightTree {
    pub root: Node,
}

impl WeightTree {
    pub fn new(root: Node) -> Result<Self> {
        let tree = Self { root };
        tree.validate()?;
        Ok(tree)
    }

    /// Builds the tree without checking weights; used for skeletons whose
    /// weights are filled in later from pairwise matrices.
    pub fn unchecked(root: Node) -> Self {
        Self { root }
    }

    pub fn validate(&self) -> Result<()> {
        if (self.root.weight - 1.0).abs() > 1e-9 {
            return Err(Error::validation(format!(
                "root '{}' must have weight 1, got {}",
                self.root.name, self.root.weight
            )));
        }
        let mut problems = Vec::new();
        let mut names = BTreeSet::new();
        self.root.visit(None, 0, &mut |n, _, _| {
            if !names.insert(n.name.as_str()) {
                problems.push(format!("duplicate node name '{}'", n.name));
            }
            if !(n.weight >= 0.0) || !n.weight.is_finite() {
                problems.push(format!("node '{}' has invalid weight {}", n.name, n.weight));
            }
            if !n.is_leaf() {
                let sum: f64 = n.children.iter().map(|c| c.weight).sum();
                if (sum - 1.0).abs() > 1e-6 {
                    problems.push(format!("children of '{}' have weights summing to {sum:.6}", n.name));
                }
            }
        });
        match problems.into_iter().next() {
            Some(p) => Err(Error::validation(p)),
            None => Ok(()),
        }
    }

    /// Reassembles a tree from its flat form. Children keep file order.
    pub fn from_flat(nodes: &[FlatNode], require_weights: bool) -> Result<Self> {
        let roots: Vec<&FlatNode> = nodes.iter().filter(|n| n.parent.is_none()).collect();
        if roots.len() != 1 {
            return Err(Error::Config(format!(
                "hierarchy needs exactly one root node, found {}",
                roots.len()
            )));
        }
        let names: BTreeSet<&str> = nodes.iter().map(|n| n.name.as_str()).collect();
        if names.len() != nodes.len() {
            return Err(Error::Config("hierarchy node names must be unique".into()));
        }
        for n in nodes {
            if let Some(p) = &n.parent {
                if !names.contains(p.as_str()) {
                    return Err(Error::Config(format!("node '{}' has unknown parent '{p}'", n.name)));
                }
            }
        }
        fn build(flat: &FlatNode, nodes: &[FlatNode], depth: usize) -> Result<Node> {
            if depth > nodes.len() {
                return Err(Error::Cycle(vec![flat.name.clone()]));
            }
            let children = nodes
                .iter()
                .filter(|c| c.parent.as_deref() == Some(flat.name.as_str()))
                .map(|c| build(c, nodes, depth + 1))
                .collect::<Result<Vec<_>>>()?;
            let leaf = children.is_empty().then_some(LeafBinding {
                polarity: flat.polarity,
                source: flat.source,
                mode: flat.mode,
            });
            Ok(Node {
                name: flat.name.clone(),
                weight: flat.weight.unwrap_or(f64::NAN),
                children,
                leaf,
            })
        }
        let mut root = build(roots[0], nodes, 0)?;
        root.weight = 1.0;
        let mut seen = 0usize;
        root.visit(None, 0, &mut |_, _, _| seen += 1);
        if seen != nodes.len() {
            return Err(Error::Config("hierarchy contains nodes unreachable from the root".into()));
        }
        if require_weights {
            let mut missing = None;
            root.visit(None, 0, &mut |n, _, _| {
                if n.weight.is_nan() && missing.is_none() {
                    missing = Some(n.name.clone());
                }
            });
            if let Some(name) = missing {
                return Err(Error::Config(format!("node '{name}' has no weight")));
            }
            Self::new(root)
        } else {
            Ok(Self::unchecked(root))
        }
    }

    pub fn leaves(&self) -> Vec<&Node> {
        let mut out = Vec::new();
        self.root.visit(None, 0, &mut |n, _, _| {
            if n.is_leaf() {
                out.push(n);
            }
        });
        out
    }

    /// Nodes in depth-first order with their parent name and depth.
    pub fn walk(&self) -> Vec<(&Node, Option<&str>, usize)> {
        let mut out = Vec::new();
        self.root.visit(None, 0, &mut |n, p, d| out.push((n, p, d)));
        out
    }

    pub fn find(&self, name: &str) -> Option<&Node> {
        self.walk().into_iter().map(|(n, _, _)| n).find(|n| n.name == name)
    }

    fn parent_of(&self, name: &str) -> Option<&Node> {
        let parent = self
            .walk()
            .into_iter()
            .find(|(n, _, _)| n.name == name)
            .and_then(|(_, p, _)| p)?;
        self.find(parent)
    }

    /// Sets `node`'s weight to `w + delta` and rescales its siblings so they
    /// still sum to one.
    pub fn perturbed(&self, node: &str, delta: f64) -> Result<WeightTree> {
        let parent = self
            .parent_of(node)
            .ok_or_else(|| Error::validation(format!("'{node}' is the root or not in the tree")))?;
        let current = parent
            .children
            .iter()
            .find(|c| c.name == node)
            .map(|c| c.weight)
            .expect("child of its parent");
        let target = current + delta;
        if !(0.0..=1.0).contains(&target) {
            return Err(Error::validation(format!(
                "perturbed weight {target:.4} of '{node}' leaves [0, 1]"
            )));
        }
        let others = 1.0 - current;
        if others <= 0.0 && delta != 0.0 {
            return Err(Error::validation(format!("'{node}' has no siblings to rebalance")));
        }
        let scale = if others > 0.0 { (1.0 - target) / others } else { 1.0 };
        let parent_name = parent.name.clone();
        let mut tree = self.clone();
        let p = tree.root.find_mut(&parent_name).expect("parent exists");
        for c in &mut p.children {
            if c.name == node {
                c.weight = target;
            } else {
                c.weight *= scale;
                if c.weight < 0.0 {
                    return Err(Error::validation(format!("sibling '{}' would get a negative weight", c.name)));
                }
            }
        }
        Ok(tree)
    }
}

/// Raw indicator values, one row per scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndicatorTable {
    pub scenarios: Vec<String>,
    pub indicators: Vec<String>,
    /// `values[m][k]`: scenario m, indicator k.
    pub values: Vec<Vec<f64>>,
}

impl IndicatorTable {
    pub fn new(scenarios: Vec<String>, indicators: Vec<String>, values: Vec<Vec<f64>>) -> Result<Self> {
        if values.len() != scenarios.len() || values.iter().any(|r| r.len() != indicators.len()) {
            return Err(Error::validation("indicator table shape does not match its labels"));
        }
        if values.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::validation("indicator values must be finite"));
        }
        let uniq: BTreeSet<&String> = indicators.iter().collect();
        if uniq.len() != indicators.len() {
            return Err(Error::validation("indicator ids must be unique"));
        }
        Ok(Self {
            scenarios,
            indicators,
            values,
        })
    }

    pub fn column(&self, indicator: &str) -> Option<Vec<f64>> {
        let k = self.indicators.iter().position(|i| i == indicator)?;
        Some(self.values.iter().map(|row| row[k]).collect())
    }

    /// Columns of `other` appended; scenarios must match in order.
    pub fn merged(&self, other: &IndicatorTable) -> Result<IndicatorTable> {
        if self.scenarios.is_empty() && self.indicators.is_empty() {
            return Ok(other.clone());
        }
        if self.scenarios != other.scenarios {
            return Err(Error::validation("cannot merge indicator tables with different scenarios"));
        }
        let mut indicators = self.indicators.clone();
        indicators.extend(other.indicators.iter().cloned());
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a.iter().chain(b).copied().collect())
            .collect();
        IndicatorTable::new(self.scenarios.clone(), indicators, values)
    }

    /// Reorders rows to `order`; every scenario in `order` must be present.
    pub fn select_scenarios(&self, order: &[String]) -> Result<IndicatorTable> {
        let values = order
            .iter()
            .map(|s| {
                let m = self
                    .scenarios
                    .iter()
                    .position(|x| x == s)
                    .ok_or_else(|| Error::Config(format!("indicator table has no row for scenario '{s}'")))?;
                Ok(self.values[m].clone())
            })
            .collect::<Result<Vec<_>>>()?;
        IndicatorTable::new(order.to_vec(), self.indicators.clone(), values)
    }

    /// Reads `scenario,<indicator>...`. A trailing `%` on a value is ignored.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let header = rdr.headers()?.clone();
        if header.len() < 2 {
            return Err(Error::Parse("indicator CSV needs a scenario column and at least one indicator".into()));
        }
        let indicators: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
        let (mut scenarios, mut values) = (Vec::new(), Vec::new());
        for rec in rdr.records() {
            let rec = rec?;
            scenarios.push(rec.get(0).unwrap_or_default().to_string());
            let row = rec
                .iter()
                .skip(1)
                .map(|cell| {
                    cell.trim_end_matches('%')
                        .trim()
                        .parse::<f64>()
                        .map_err(|_| Error::Parse(format!("bad indicator value '{cell}'")))
                })
                .collect::<Result<Vec<_>>>()?;
            values.push(row);
        }
        Self::new(scenarios, indicators, values)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        write_matrix_csv(&self.scenarios, &self.indicators, &self.values, writer)
    }
}

fn write_matrix_csv<W: Write>(rows: &[String], cols: &[String], values: &[Vec<f64>], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["scenario".to_string()];
    header.extend(cols.iter().cloned());
    w.write_record(&header)?;
    for (name, row) in rows.iter().zip(values) {
        let mut rec = vec![name.clone()];
        rec.extend(row.iter().map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

/// What to do with a column whose values are all zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZeroColumnPolicy {
    #[default]
    Error,
    /// Replace with `1/M`; the indicator carries no information.
    Uniform,
}

/// Dimensionless values; every column sums to one unless injected verbatim.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizedTable {
    pub scenarios: Vec<String>,
    pub indicators: Vec<String>,
    pub values: Vec<Vec<f64>>,
}

impl NormalizedTable {
    /// Takes already-normalized values as they are.
    pub fn verbatim(table: &IndicatorTable) -> Self {
        Self {
            scenarios: table.scenarios.clone(),
            indicators: table.indicators.clone(),
            values: table.values.clone(),
        }
    }

    pub fn column(&self, indicator: &str) -> Option<Vec<f64>> {
        let k = self.indicators.iter().position(|i| i == indicator)?;
        Some(self.values.iter().map(|row| row[k]).collect())
    }

    pub fn merged(&self, other: &NormalizedTable) -> Result<NormalizedTable> {
        let a = IndicatorTable {
            scenarios: self.scenarios.clone(),
            indicators: self.indicators.clone(),
            values: self.values.clone(),
        };
        let b = IndicatorTable {
            scenarios: other.scenarios.clone(),
            indicators: other.indicators.clone(),
            values: other.values.clone(),
        };
        Ok(Self::verbatim(&a.merged(&b)?))
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        write_matrix_csv(&self.scenarios, &self.indicators, &self.values, writer)
    }
}

/// Linear normalization of every column. Cost-polarity columns are replaced
/// by their reciprocals first.
pub fn normalize(
    table: &IndicatorTable,
    polarities: &BTreeMap<String, Polarity>,
    zero_policy: ZeroColumnPolicy,
) -> Result<NormalizedTable> {
    let m = table.scenarios.len();
    if m == 0 {
        return Err(Error::validation("indicator table has no scenarios"));
    }
    let mut values = vec![vec![0.0; table.indicators.len()]; m];
    for (k, id) in table.indicators.iter().enumerate() {
        let mut col: Vec<f64> = table.values.iter().map(|row| row[k]).collect();
        if polarities.get(id).copied().unwrap_or_default() == Polarity::Cost {
            if col.iter().any(|&v| !(v > 0.0)) {
                return Err(Error::ZeroColumn(id.clone()));
            }
            col.iter_mut().for_each(|v| *v = 1.0 / *v);
        }
        let sum: f64 = col.iter().sum();
        if col.iter().all(|&v| v == 0.0) && zero_policy == ZeroColumnPolicy::Uniform {
            log::warn!("indicator '{id}' is zero for every scenario; using uniform 1/{m}");
            col.iter_mut().for_each(|v| *v = 1.0 / m as f64);
        } else if !(sum > 0.0) {
            return Err(Error::ZeroColumn(id.clone()));
        } else {
            if col.iter().any(|&v| v < 0.0) {
                log::warn!("indicator '{id}' has negative values; normalized shares may be negative");
            }
            col.iter_mut().for_each(|v| *v /= sum);
        }
        for (row, v) in values.iter_mut().zip(col) {
            row[k] = v;
        }
    }
    Ok(NormalizedTable {
        scenarios: table.scenarios.clone(),
        indicators: table.indicators.clone(),
        values,
    })
}

/// Scenario order by descending score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ranking {
    /// Best first.
    pub order: Vec<String>,
    /// Scores aligned with `order`.
    pub scores: Vec<f64>,
    /// Set when two scenarios share a score and name order decided.
    pub tie: bool,
}

impl Ranking {
    pub fn top(&self) -> Option<&str> {
        self.order.first().map(String::as_str)
    }
}

const TIE_EPS: f64 = 1e-12;

/// Ranks by descending score; equal scores fall back to name order.
pub fn rank(scenarios: &[String], scores: &[f64]) -> Ranking {
    let mut idx: Vec<usize> = (0..scenarios.len()).collect();
    idx.sort_by(|&a, &b| {
        scores[b]
            .partial_cmp(&scores[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| scenarios[a].cmp(&scenarios[b]))
    });
    let tie = idx.windows(2).any(|w| (scores[w[0]] - scores[w[1]]).abs() <= TIE_EPS);
    Ranking {
        order: idx.iter().map(|&i| scenarios[i].clone()).collect(),
        scores: idx.iter().map(|&i| scores[i]).collect(),
        tie,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeScores {
    pub name: String,
    pub parent: Option<String>,
    pub depth: usize,
    /// Weight relative to the parent.
    pub weight: f64,
    /// One score per scenario.
    pub scores: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenefitReport {
    pub scenarios: Vec<String>,
    /// Every tree node in depth-first order; the first entry is the root.
    pub nodes: Vec<NodeScores>,
    pub normalized: NormalizedTable,
    pub ranking: Ranking,
}

impl BenefitReport {
    pub fn scores(&self, node: &str) -> Option<&[f64]> {
        self.nodes.iter().find(|n| n.name == node).map(|n| n.scores.as_slice())
    }

    pub fn comprehensive(&self) -> &[f64] {
        &self.nodes[0].scores
    }

    /// The root's children (the individual benefits).
    pub fn benefits(&self) -> Vec<&NodeScores> {
        self.nodes.iter().filter(|n| n.depth == 1).collect()
    }

    pub fn score_of(&self, node: &str, scenario: &str) -> Option<f64> {
        let m = self.scenarios.iter().position(|s| s == scenario)?;
        self.scores(node).map(|s| s[m])
    }
}

fn node_scores(node: &Node, table: &NormalizedTable, out: &mut BTreeMap<String, Vec<f64>>) -> Result<Vec<f64>> {
    let scores = if node.is_leaf() {
        table
            .column(&node.name)
            .ok_or_else(|| Error::MissingIndicator(node.name.clone()))?
    } else {
        let mut acc = vec![0.0; table.scenarios.len()];
        for child in &node.children {
            let s = node_scores(child, table, out)?;
            for (a, v) in acc.iter_mut().zip(s) {
                *a += child.weight * v;
            }
        }
        acc
    };
    out.insert(node.name.clone(), scores.clone());
    Ok(scores)
}

/// Weighted summation up the tree and ranking on the root score.
pub fn rollup(tree: &WeightTree, table: &NormalizedTable) -> Result<BenefitReport> {
    tree.validate()?;
    let mut by_name = BTreeMap::new();
    node_scores(&tree.root, table, &mut by_name)?;
    let nodes: Vec<NodeScores> = tree
        .walk()
        .into_iter()
        .map(|(n, p, d)| NodeScores {
            name: n.name.clone(),
            parent: p.map(str::to_string),
            depth: d,
            weight: n.weight,
            scores: by_name.remove(&n.name).expect("every node scored"),
        })
        .collect();
    let ranking = rank(&table.scenarios, &nodes[0].scores);
    Ok(BenefitReport {
        scenarios: table.scenarios.clone(),
        nodes,
        normalized: table.clone(),
        ranking,
    })
}

/// Raw economic/social values from facility areas and per-kind scores.
pub fn facility_indicator_scores(
    scenarios: &[Scenario],
    catalog: &LidCatalog,
    leaves: &[(String, FacilityMode)],
) -> Result<IndicatorTable> {
    let mut values = vec![vec![0.0; leaves.len()]; scenarios.len()];
    for (m, sc) in scenarios.iter().enumerate() {
        let areas = sc.area_by_kind();
        for (k, (indicator, mode)) in leaves.iter().enumerate() {
            let mut total = 0.0;
            for (&kind, &area) in &areas {
                if area == 0.0 {
                    continue;
                }
                let spec = catalog.get(kind)?;
                let score = match (spec.favorability.get(indicator), mode) {
                    (Some(&s), _) => s,
                    (None, FacilityMode::Reciprocal) => spec.unit_cost_weight,
                    (None, FacilityMode::Favorability) => {
                        return Err(Error::Config(format!(
                            "LID kind '{kind}' has no favorability score for '{indicator}'"
                        )))
                    }
                };
                total += area * score;
            }
            values[m][k] = match mode {
                FacilityMode::Favorability => total,
                FacilityMode::Reciprocal if total > 0.0 => 1.0 / total,
                FacilityMode::Reciprocal => {
                    return Err(Error::validation(format!(
                        "scenario '{}' has zero cost basis for '{indicator}'",
                        sc.name
                    )))
                }
            };
        }
    }
    IndicatorTable::new(
        scenarios.iter().map(|s| s.name.clone()).collect(),
        leaves.iter().map(|(i, _)| i.clone()).collect(),
        values,
    )
}

/// Outfall totals for one storm, aggregated over all outfalls.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EventSummary {
    pub volume_m3: f64,
    pub peak_lps: f64,
    pub peak_time_s: f64,
    pub loads_kg: BTreeMap<String, f64>,
}

pub const RUNOFF_REDUCTION: &str = "runoff_reduction";
pub const PEAK_REDUCTION: &str = "peak_reduction";
pub const PEAK_DELAY: &str = "peak_delay";

/// Indicator id for a pollutant's load reduction, e.g. `tss_reduction`.
pub fn pollutant_indicator(pollutant: &str) -> String {
    format!("{}_reduction", pollutant.to_lowercase())
}

/// Environmental indicators per scenario, averaged over the storm suite.
/// Percentages for reductions, minutes for peak delay.
pub fn evaluate_environmental(
    baseline: &[EventSummary],
    scenarios: &[(String, Vec<EventSummary>)],
    pollutants: &[String],
) -> Result<IndicatorTable> {
    let mut indicators = vec![RUNOFF_REDUCTION.to_string(), PEAK_REDUCTION.to_string(), PEAK_DELAY.to_string()];
    indicators.extend(pollutants.iter().map(|p| pollutant_indicator(p)));
    let mut values = Vec::with_capacity(scenarios.len());
    for (name, runs) in scenarios {
        if runs.len() != baseline.len() || runs.is_empty() {
            return Err(Error::validation(format!(
                "scenario '{name}' was run on {} storms, baseline on {}",
                runs.len(),
                baseline.len()
            )));
        }
        let mut acc = vec![0.0; indicators.len()];
        for (base, run) in baseline.iter().zip(runs) {
            if !(base.volume_m3 > 0.0) {
                return Err(Error::validation("baseline runoff volume is zero"));
            }
            acc[0] += metrics::reduction(base.volume_m3, run.volume_m3)?;
            acc[1] += metrics::reduction(base.peak_lps, run.peak_lps)?;
            acc[2] += (run.peak_time_s - base.peak_time_s) / 60.0;
            for (j, p) in pollutants.iter().enumerate() {
                let b = base.loads_kg.get(p).copied().unwrap_or(0.0);
                let s = run.loads_kg.get(p).copied().unwrap_or(0.0);
                acc[3 + j] += metrics::reduction(b, s)?;
            }
        }
        let n = runs.len() as f64;
        values.push(acc.into_iter().map(|v| v / n).collect());
    }
    IndicatorTable::new(scenarios.iter().map(|(n, _)| n.clone()).collect(), indicators, values)
}

/// Ranking under `node` weight `w ± delta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityReport {
    pub node: String,
    pub delta: f64,
    pub base: Ranking,
    pub plus: Ranking,
    pub minus: Ranking,
    pub top_changed: bool,
}

pub fn weight_sensitivity(
    tree: &WeightTree,
    table: &NormalizedTable,
    node: &str,
    delta: f64,
) -> Result<SensitivityReport> {
    let base = rollup(tree, table)?.ranking;
    let plus = rollup(&tree.perturbed(node, delta)?, table)?.ranking;
    let minus = rollup(&tree.perturbed(node, -delta)?, table)?.ranking;
    let top_changed = plus.top() != base.top() || minus.top() != base.top();
    Ok(SensitivityReport {
        node: node.to_string(),
        delta,
        base,
        plus,
        minus,
        top_changed,
    })
}
