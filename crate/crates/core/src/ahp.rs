//! Pairwise-comparison weighting with the principal-eigenvector method.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluator::{Node, WeightTree};

/// Random consistency index for n = 1..=9.
pub const RANDOM_INDEX: [f64; 9] = [0.0, 0.0, 0.58, 0.90, 1.12, 1.24, 1.32, 1.41, 1.45];

/// Judgments at or above this ratio are rejected.
pub const CR_THRESHOLD: f64 = 0.1;

const RECIPROCAL_TOL: f64 = 1e-9;
const POWER_TOL: f64 = 1e-12;
const POWER_MAX_ITER: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseMatrix {
    pub labels: Vec<String>,
    /// Row-major; `entries[i][j]` is how much more important i is than j.
    pub entries: Vec<Vec<f64>>,
}

impl PairwiseMatrix {
    pub fn new(labels: Vec<String>, entries: Vec<Vec<f64>>) -> Result<Self> {
        let m = Self { labels, entries };
        m.validate()?;
        Ok(m)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Fills the lower triangle with reciprocals. `upper[i]` holds the entries
    /// `a[i][i+1..]`.
    pub fn from_upper_triangle(labels: Vec<String>, upper: &[Vec<f64>]) -> Result<Self> {
        let n = labels.len();
        let mut entries = vec![vec![1.0; n]; n];
        for i in 0..n {
            let row = upper.get(i).map(Vec::as_slice).unwrap_or(&[]);
            if row.len() != n - i - 1 {
                return Err(Error::validation(format!(
                    "upper-triangle row {} needs {} entries, got {}",
                    i + 1,
                    n - i - 1,
                    row.len()
                )));
            }
            for (off, &v) in row.iter().enumerate() {
                let j = i + 1 + off;
                entries[i][j] = v;
                entries[j][i] = 1.0 / v;
            }
        }
        Self::new(labels, entries)
    }

    /// The perfectly consistent matrix `a_ij = w_i / w_j`.
    pub fn from_weights(labels: Vec<String>, weights: &[f64]) -> Result<Self> {
        if labels.len() != weights.len() {
            return Err(Error::validation("labels and weights differ in length"));
        }
        if weights.iter().any(|&w| !(w > 0.0)) {
            return Err(Error::validation("weights must be positive"));
        }
        let entries = weights.iter().map(|wi| weights.iter().map(|wj| wi / wj).collect()).collect();
        Self::new(labels, entries)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.labels.len();
        if n == 0 {
            return Err(Error::validation("pairwise matrix is empty"));
        }
        if self.entries.len() != n || self.entries.iter().any(|r| r.len() != n) {
            return Err(Error::validation(format!("pairwise matrix must be {n}x{n}")));
        }
        let mut outside_scale = false;
        for i in 0..n {
            if (self.entries[i][i] - 1.0).abs() > RECIPROCAL_TOL {
                return Err(Error::validation(format!("diagonal entry {} is not 1", i + 1)));
            }
            for j in 0..n {
                let a = self.entries[i][j];
                if !(a > 0.0) || !a.is_finite() {
                    return Err(Error::validation(format!(
                        "entry ({}, {}) must be positive, got {a}",
                        i + 1,
                        j + 1
                    )));
                }
                if (a * self.entries[j][i] - 1.0).abs() > RECIPROCAL_TOL {
                    return Err(Error::validation(format!(
                        "entries ({0}, {1}) and ({1}, {0}) are not reciprocal",
                        i + 1,
                        j + 1
                    )));
                }
                if !(1.0 / 9.0 - RECIPROCAL_TOL..=9.0 + RECIPROCAL_TOL).contains(&a) {
                    outside_scale = true;
                }
            }
        }
        if outside_scale {
            log::warn!("pairwise matrix {:?} has entries outside the 1/9..9 scale", self.labels);
        }
        Ok(())
    }

    pub fn transpose(&self) -> Self {
        let n = self.len();
        Self {
            labels: self.labels.clone(),
            entries: (0..n).map(|i| (0..n).map(|j| self.entries[j][i]).collect()).collect(),
        }
    }

    fn mul(&self, v: &[f64]) -> Vec<f64> {
        self.entries
            .iter()
            .map(|row| row.iter().zip(v).map(|(a, x)| a * x).sum())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightVector {
    pub labels: Vec<String>,
    pub weights: Vec<f64>,
}

impl WeightVector {
    pub fn get(&self, label: &str) -> Option<f64> {
        self.labels.iter().position(|l| l == label).map(|i| self.weights[i])
    }
}

/// Normalized principal eigenvector by power iteration.
pub fn derive_weights(m: &PairwiseMatrix) -> Result<WeightVector> {
    m.validate()?;
    let (weights, _) = principal_eigen(m)?;
    Ok(WeightVector {
        labels: m.labels.clone(),
        weights,
    })
}

fn principal_eigen(m: &PairwiseMatrix) -> Result<(Vec<f64>, f64)> {
    let n = m.len();
    let mut w = vec![1.0 / n as f64; n];
    let mut residual = f64::INFINITY;
    for _ in 0..POWER_MAX_ITER {
        let next = m.mul(&w);
        let sum: f64 = next.iter().sum();
        let next: Vec<f64> = next.iter().map(|x| x / sum).collect();
        residual = next.iter().zip(&w).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        w = next;
        if residual <= POWER_TOL {
            // w sums to one, so sum(A w) is the Rayleigh-style estimate of lambda.
            let lambda = m.mul(&w).iter().sum::<f64>();
            return Ok((w, lambda));
        }
    }
    Err(Error::NoConvergence {
        iterations: POWER_MAX_ITER,
        residual,
    })
}

/// Row geometric means, normalized. Kept for cross-checking the eigenvector.
pub fn geometric_mean_weights(m: &PairwiseMatrix) -> Result<WeightVector> {
    m.validate()?;
    let n = m.len() as f64;
    let g: Vec<f64> = m
        .entries
        .iter()
        .map(|row| (row.iter().map(|a| a.ln()).sum::<f64>() / n).exp())
        .collect();
    let sum: f64 = g.iter().sum();
    Ok(WeightVector {
        labels: m.labels.clone(),
        weights: g.iter().map(|x| x / sum).collect(),
    })
}

/// Elementwise geometric mean of several experts' matrices.
pub fn aggregate_judgments(matrices: &[PairwiseMatrix]) -> Result<PairwiseMatrix> {
    let first = matrices
        .first()
        .ok_or_else(|| Error::validation("no judgment matrices to aggregate"))?;
    if matrices.iter().any(|m| m.labels != first.labels) {
        return Err(Error::validation("judgment matrices use different labels"));
    }
    let n = first.len();
    let k = matrices.len() as f64;
    let mut entries = vec![vec![0.0; n]; n];
    for (i, row) in entries.iter_mut().enumerate() {
        for (j, e) in row.iter_mut().enumerate() {
            *e = (matrices.iter().map(|m| m.entries[i][j].ln()).sum::<f64>() / k).exp();
        }
    }
    PairwiseMatrix::new(first.labels.clone(), entries)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub lambda_max: f64,
    pub ci: f64,
    pub ri: f64,
    pub cr: f64,
    pub pass: bool,
    /// Matrices of order 1 or 2 are consistent by construction.
    pub trivially_consistent: bool,
}

pub fn consistency(m: &PairwiseMatrix) -> Result<ConsistencyReport> {
    m.validate()?;
    let n = m.len();
    if n > RANDOM_INDEX.len() {
        return Err(Error::validation(format!(
            "no random index for a {n}x{n} matrix (maximum 9)"
        )));
    }
    let (_, lambda_max) = principal_eigen(m)?;
    let ri = RANDOM_INDEX[n - 1];
    if n <= 2 {
        return Ok(ConsistencyReport {
            lambda_max,
            ci: 0.0,
            ri,
            cr: 0.0,
            pass: true,
            trivially_consistent: true,
        });
    }
    // Rounding can leave lambda a hair under n for consistent matrices.
    let ci = ((lambda_max - n as f64) / (n as f64 - 1.0)).max(0.0);
    let cr = ci / ri;
    Ok(ConsistencyReport {
        lambda_max,
        ci,
        ri,
        cr,
        pass: cr < CR_THRESHOLD,
        trivially_consistent: false,
    })
}

/// Fills the weights of `skeleton` from one matrix per internal node.
/// Single-child nodes need no matrix. Nodes with CR at or above the
/// threshold abort the build unless `force` is set.
pub fn weight_tree(
    skeleton: &WeightTree,
    matrices: &BTreeMap<String, PairwiseMatrix>,
    force: bool,
) -> Result<(WeightTree, BTreeMap<String, ConsistencyReport>)> {
    let mut reports = BTreeMap::new();
    let mut root = skeleton.root.clone();
    assign(&mut root, matrices, force, &mut reports)?;
    root.weight = 1.0;
    for name in matrices.keys() {
        if !reports.contains_key(name) {
            return Err(Error::Config(format!("matrix '{name}' does not match an internal node")));
        }
    }
    Ok((WeightTree::new(root)?, reports))
}

fn assign(
    node: &mut Node,
    matrices: &BTreeMap<String, PairwiseMatrix>,
    force: bool,
    reports: &mut BTreeMap<String, ConsistencyReport>,
) -> Result<()> {
    match node.children.len() {
        0 => return Ok(()),
        1 => node.children[0].weight = 1.0,
        _ => {
            let m = matrices
                .get(&node.name)
                .ok_or_else(|| Error::Config(format!("no pairwise matrix for node '{}'", node.name)))?;
            let expected: Vec<&str> = node.children.iter().map(|c| c.name.as_str()).collect();
            let mut got: Vec<&str> = m.labels.iter().map(String::as_str).collect();
            let mut want = expected.clone();
            got.sort_unstable();
            want.sort_unstable();
            if got != want {
                return Err(Error::Config(format!(
                    "matrix for '{}' has labels {:?}, expected {:?}",
                    node.name, m.labels, expected
                )));
            }
            let report = consistency(m)?;
            if !report.pass {
                if force {
                    log::warn!("node '{}' has CR {:.3}; kept because force is set", node.name, report.cr);
                } else {
                    return Err(Error::Inconsistent {
                        node: node.name.clone(),
                        cr: report.cr,
                    });
                }
            }
            let w = derive_weights(m)?;
            for c in &mut node.children {
                c.weight = w.get(&c.name).expect("labels checked");
            }
            reports.insert(node.name.clone(), report);
        }
    }
    for c in &mut node.children {
        assign(c, matrices, force, reports)?;
    }
    Ok(())
}

/// Parses matrices from a plain-text file:
///
/// ```text
/// [environmental]
///          quantity  quality
/// quantity 1         7/3
/// quality            1
/// ```
///
/// Each block starts with `[node]`, then a header of labels, then one row
/// per label. Lower-triangle cells may be left blank and are filled with
/// reciprocals. Cells accept decimals or `a/b` fractions. `#` starts a comment.
pub fn parse_matrices(text: &str) -> Result<BTreeMap<String, PairwiseMatrix>> {
    struct Block {
        node: String,
        labels: Vec<String>,
        rows: Vec<(String, Vec<String>)>,
        line: usize,
    }
    let mut blocks: Vec<Block> = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            blocks.push(Block {
                node: name.trim().to_string(),
                labels: Vec::new(),
                rows: Vec::new(),
                line: lineno + 1,
            });
            continue;
        }
        let block = blocks
            .last_mut()
            .ok_or_else(|| Error::Parse(format!("line {}: matrix data before any [node] header", lineno + 1)))?;
        let cells: Vec<String> = line.split_whitespace().map(str::to_string).collect();
        if block.labels.is_empty() {
            block.labels = cells;
        } else {
            let mut it = cells.into_iter();
            let label = it.next().unwrap_or_default();
            block.rows.push((label, it.collect()));
        }
    }
    let mut out = BTreeMap::new();
    for b in blocks {
        let n = b.labels.len();
        let ctx = |msg: String| Error::Parse(format!("matrix [{}] (line {}): {msg}", b.node, b.line));
        if b.rows.len() != n {
            return Err(ctx(format!("expected {n} rows, found {}", b.rows.len())));
        }
        let mut entries = vec![vec![f64::NAN; n]; n];
        for (i, (label, cells)) in b.rows.iter().enumerate() {
            if *label != b.labels[i] {
                return Err(ctx(format!("row {} is labelled '{label}', expected '{}'", i + 1, b.labels[i])));
            }
            // A short row is right-aligned: the missing cells are the lower triangle.
            if cells.len() > n || cells.len() < n - i {
                return Err(ctx(format!("row '{label}' has {} cells", cells.len())));
            }
            let offset = n - cells.len();
            for (k, cell) in cells.iter().enumerate() {
                entries[i][offset + k] = parse_cell(cell).ok_or_else(|| ctx(format!("bad cell '{cell}'")))?;
            }
        }
        for i in 0..n {
            for j in 0..i {
                if entries[i][j].is_nan() {
                    entries[i][j] = 1.0 / entries[j][i];
                }
            }
        }
        let m = PairwiseMatrix::new(b.labels.clone(), entries).map_err(|e| ctx(e.to_string()))?;
        if out.insert(b.node.clone(), m).is_some() {
            return Err(Error::Parse(format!("matrix [{}] defined twice", b.node)));
        }
    }
    Ok(out)
}

fn parse_cell(cell: &str) -> Option<f64> {
    match cell.split_once('/') {
        Some((a, b)) => Some(a.trim().parse::<f64>().ok()? / b.trim().parse::<f64>().ok()?),
        None => cell.parse().ok(),
    }
}
