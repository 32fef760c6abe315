//! Partition quality: Purity, NMI and ARI against labels; modularity and
//! normalized cut against the graph.

use std::collections::HashMap;
use std::fmt;
use std::io::BufRead;

use serde::Serialize;

use crate::error::{GraphError, MetricsError};
use crate::graph::Graph;

/// Cell counts between a predicted and a reference labelling.
#[derive(Debug, Clone, PartialEq)]
pub struct ContingencyTable {
    pub cells: Vec<Vec<u64>>,
    pub rows: Vec<u64>,
    pub cols: Vec<u64>,
    pub total: u64,
}

fn dense(labels: &[usize]) -> (Vec<usize>, usize) {
    let mut map = HashMap::new();
    let out = labels
        .iter()
        .map(|&l| {
            let next = map.len();
            *map.entry(l).or_insert(next)
        })
        .collect();
    (out, map.len())
}

impl ContingencyTable {
    pub fn new(pred: &[usize], truth: &[usize]) -> Result<Self, MetricsError> {
        if pred.len() != truth.len() {
            return Err(MetricsError::Mismatch(pred.len(), truth.len()));
        }
        if pred.is_empty() {
            return Err(MetricsError::Empty);
        }
        let (p, k) = dense(pred);
        let (t, c) = dense(truth);
        let mut cells = vec![vec![0u64; c]; k];
        for (&i, &j) in p.iter().zip(&t) {
            cells[i][j] += 1;
        }
        let rows = cells.iter().map(|r| r.iter().sum()).collect();
        let cols = (0..c).map(|j| cells.iter().map(|r| r[j]).sum()).collect();
        Ok(ContingencyTable {
            cells,
            rows,
            cols,
            total: pred.len() as u64,
        })
    }
}

pub fn purity(pred: &[usize], truth: &[usize]) -> Result<f64, MetricsError> {
    let t = ContingencyTable::new(pred, truth)?;
    let hits: u64 = t.cells.iter().map(|r| *r.iter().max().unwrap()).sum();
    Ok(hits as f64 / t.total as f64)
}

fn entropy(marginal: &[u64], n: f64) -> f64 {
    marginal
        .iter()
        .filter(|&&a| a > 0)
        .map(|&a| {
            let p = a as f64 / n;
            -p * p.ln()
        })
        .sum()
}

/// Arithmetic-mean normalised mutual information, natural logarithm.
pub fn nmi(pred: &[usize], truth: &[usize]) -> Result<f64, MetricsError> {
    let t = ContingencyTable::new(pred, truth)?;
    let n = t.total as f64;
    let hp = entropy(&t.rows, n);
    let ht = entropy(&t.cols, n);
    if hp + ht == 0.0 {
        // both trivial: identical by construction
        return Ok(1.0);
    }
    let mut mi = 0.0;
    for (i, row) in t.cells.iter().enumerate() {
        for (j, &nij) in row.iter().enumerate() {
            if nij > 0 {
                let nij = nij as f64;
                mi += nij / n * (n * nij / (t.rows[i] as f64 * t.cols[j] as f64)).ln();
            }
        }
    }
    Ok((2.0 * mi / (hp + ht)).clamp(0.0, 1.0))
}

fn pairs(x: u64) -> f64 {
    (x as f64) * (x as f64 - 1.0) / 2.0
}

pub fn ari(pred: &[usize], truth: &[usize]) -> Result<f64, MetricsError> {
    let t = ContingencyTable::new(pred, truth)?;
    let index: f64 = t.cells.iter().flatten().map(|&x| pairs(x)).sum();
    let a: f64 = t.rows.iter().map(|&x| pairs(x)).sum();
    let b: f64 = t.cols.iter().map(|&x| pairs(x)).sum();
    let total = pairs(t.total);
    if total == 0.0 {
        return Ok(1.0);
    }
    let expected = a * b / total;
    let max = 0.5 * (a + b);
    if max == expected {
        // both partitions all-singletons or all-one-block
        return Ok(if index == expected { 1.0 } else { 0.0 });
    }
    Ok((index - expected) / (max - expected))
}

/// Newman modularity of a vertex labelling.
pub fn modularity(g: &Graph, labels: &[usize]) -> Result<f64, MetricsError> {
    check_cover(g, labels)?;
    let m = g.edge_count() as f64;
    if m == 0.0 {
        return Ok(0.0);
    }
    let (labels, k) = dense(labels);
    let mut inner = vec![0u64; k];
    let mut volume = vec![0u64; k];
    for e in g.edges() {
        if labels[e.u as usize] == labels[e.v as usize] {
            inner[labels[e.u as usize]] += 1;
        }
    }
    for u in 0..g.vertex_count() {
        volume[labels[u]] += g.degree(u as u32) as u64;
    }
    Ok((0..k)
        .map(|c| inner[c] as f64 / m - (volume[c] as f64 / (2.0 * m)).powi(2))
        .sum())
}

/// Mean over communities of cut(c) / vol(c); zero-volume communities add 0.
pub fn ncut(g: &Graph, labels: &[usize]) -> Result<f64, MetricsError> {
    check_cover(g, labels)?;
    let (labels, k) = dense(labels);
    let mut cut = vec![0u64; k];
    let mut volume = vec![0u64; k];
    for e in g.edges() {
        let (a, b) = (labels[e.u as usize], labels[e.v as usize]);
        if a != b {
            cut[a] += 1;
            cut[b] += 1;
        }
    }
    for u in 0..g.vertex_count() {
        volume[labels[u]] += g.degree(u as u32) as u64;
    }
    let sum: f64 = (0..k)
        .filter(|&c| volume[c] > 0)
        .map(|c| cut[c] as f64 / volume[c] as f64)
        .sum();
    Ok(sum / k as f64)
}

fn check_cover(g: &Graph, labels: &[usize]) -> Result<(), MetricsError> {
    if labels.len() != g.vertex_count() {
        return Err(MetricsError::Mismatch(labels.len(), g.vertex_count()));
    }
    if labels.is_empty() {
        return Err(MetricsError::Empty);
    }
    Ok(())
}

/// Metric values; absent entries were not computed.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct MetricReport {
    pub communities: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub purity: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nmi: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ari: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub modularity: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ncut: Option<f64>,
}

impl MetricReport {
    pub fn labelled(pred: &[usize], truth: &[usize]) -> Result<Self, MetricsError> {
        Ok(MetricReport {
            communities: dense(pred).1,
            purity: Some(purity(pred, truth)?),
            nmi: Some(nmi(pred, truth)?),
            ari: Some(ari(pred, truth)?),
            ..Default::default()
        })
    }

    pub fn structural(g: &Graph, pred: &[usize]) -> Result<Self, MetricsError> {
        Ok(MetricReport {
            communities: dense(pred).1,
            modularity: Some(modularity(g, pred)?),
            ncut: Some(ncut(g, pred)?),
            ..Default::default()
        })
    }

    pub fn merge(mut self, other: MetricReport) -> Self {
        self.purity = self.purity.or(other.purity);
        self.nmi = self.nmi.or(other.nmi);
        self.ari = self.ari.or(other.ari);
        self.modularity = self.modularity.or(other.modularity);
        self.ncut = self.ncut.or(other.ncut);
        self
    }
}

/// `key=value` lines.
impl fmt::Display for MetricReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "communities={}", self.communities)?;
        for (name, value) in [
            ("purity", self.purity),
            ("nmi", self.nmi),
            ("ari", self.ari),
            ("modularity", self.modularity),
            ("ncut", self.ncut),
        ] {
            if let Some(v) = value {
                writeln!(f, "{name}={v:.6}")?;
            }
        }
        Ok(())
    }
}

/// Reads `vertex label` lines (either order of lines). Returns pairs of
/// external id and label.
pub fn load_labels<R: BufRead>(reader: R) -> Result<Vec<(u64, usize)>, GraphError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let text = line.trim();
        if text.is_empty() || text.starts_with('#') {
            continue;
        }
        let mut parts = text.split_whitespace();
        let parse = |s: Option<&str>| -> Result<u64, GraphError> {
            s.ok_or_else(|| GraphError::Parse {
                line: i + 1,
                message: "expected `vertex label`".into(),
            })?
            .parse()
            .map_err(|e: std::num::ParseIntError| GraphError::Parse {
                line: i + 1,
                message: e.to_string(),
            })
        };
        let v = parse(parts.next())?;
        let l = parse(parts.next())?;
        out.push((v, l as usize));
    }
    Ok(out)
}

/// Reads a communities file: one community per line, ids separated by
/// whitespace. Returns `(vertex, community index)` pairs.
pub fn load_communities<R: BufRead>(reader: R) -> Result<Vec<(u64, usize)>, GraphError> {
    let mut out = Vec::new();
    let mut community = 0;
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let text = line.trim();
        if text.is_empty() || text.starts_with('#') {
            continue;
        }
        for tok in text.split_whitespace() {
            let v = tok.parse().map_err(|e: std::num::ParseIntError| GraphError::Parse {
                line: i + 1,
                message: e.to_string(),
            })?;
            out.push((v, community));
        }
        community += 1;
    }
    Ok(out)
}

/// Ids present only in the predicted list, and only in the reference list.
pub type Unmatched = (Vec<u64>, Vec<u64>);

/// Aligns two `(vertex, label)` lists on their vertex sets. On mismatch
/// returns the ids present in only one of them.
pub fn align(
    pred: &[(u64, usize)],
    truth: &[(u64, usize)],
) -> Result<(Vec<usize>, Vec<usize>), Unmatched> {
    let p: std::collections::BTreeMap<u64, usize> = pred.iter().copied().collect();
    let t: std::collections::BTreeMap<u64, usize> = truth.iter().copied().collect();
    let only_pred: Vec<u64> = p.keys().filter(|k| !t.contains_key(k)).copied().collect();
    let only_truth: Vec<u64> = t.keys().filter(|k| !p.contains_key(k)).copied().collect();
    if !only_pred.is_empty() || !only_truth.is_empty() {
        return Err((only_pred, only_truth));
    }
    Ok((p.values().copied().collect(), t.values().copied().collect()))
}

/// Labels in internal vertex order. Errors with the graph vertices that have
/// no label.
pub fn labels_for_graph(g: &Graph, labels: &[(u64, usize)]) -> Result<Vec<usize>, Vec<u64>> {
    let map: HashMap<u64, usize> = labels.iter().copied().collect();
    let mut missing = Vec::new();
    let out = (0..g.vertex_count() as u32)
        .map(|v| {
            let ext = g.external_id(v);
            map.get(&ext).copied().unwrap_or_else(|| {
                missing.push(ext);
                0
            })
        })
        .collect();
    if missing.is_empty() {
        Ok(out)
    } else {
        Err(missing)
    }
}
