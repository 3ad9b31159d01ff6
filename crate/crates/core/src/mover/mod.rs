//! Mover's distance between token histograms over an embedding ground space.
//!
//! A document becomes a normalized bag of tokens ([`GramHistogram`]); the
//! distance between two documents is the minimum cost of moving one
//! histogram's mass onto the other's, where moving a unit of mass between
//! two tokens costs the ground distance between their vectors (cosine by
//! default). The same machinery serves word tokens and character n-grams;
//! the granularity is fixed by the token sequence.
//!
//! [`rwmd`] and [`wcd`] are cheap lower bounds on the exact distance and
//! drive the pruned top-k search in [`MoverIndex`].

mod simplex;
mod topk;

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use topk::{Hit, IndexedDoc, MoverIndex, TopK};

use crate::embed::EmbeddingTable;
use crate::tokenize::{Granularity, TokenSeq};
use crate::{Error, Result};

/// Cost entries below this are treated as exact zeros.
const COST_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    #[default]
    Cosine,
    Euclidean,
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::Cosine => "cosine",
            Metric::Euclidean => "euclidean",
        })
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cosine" => Ok(Metric::Cosine),
            "euclidean" => Ok(Metric::Euclidean),
            _ => Err(Error::Config(format!("metric `{s}` (expected cosine or euclidean)"))),
        }
    }
}

/// Normalized bag of tokens over table indices.
#[derive(Debug, Clone, PartialEq)]
pub struct GramHistogram {
    support: Vec<u32>,
    weights: Vec<f64>,
    granularity: Granularity,
}

impl GramHistogram {
    /// Checks the invariants: non-empty, sorted unique support, positive
    /// weights summing to 1 within 1e-12.
    pub fn new(support: Vec<u32>, weights: Vec<f64>, granularity: Granularity) -> Result<Self> {
        if support.is_empty() || support.len() != weights.len() {
            return Err(Error::Invalid("histogram support and weights must be non-empty and aligned".into()));
        }
        if support.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Invalid("histogram support must be sorted and unique".into()));
        }
        if weights.iter().any(|&w| !(w > 0.0 && w.is_finite())) {
            return Err(Error::Invalid("histogram weights must be positive".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Invalid(format!("histogram weights sum to {total}")));
        }
        Ok(GramHistogram {
            support,
            weights,
            granularity,
        })
    }

    pub fn support(&self) -> &[u32] {
        &self.support
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn granularity(&self) -> Granularity {
        self.granularity
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    /// Weighted mean of the support vectors.
    pub fn centroid(&self, table: &EmbeddingTable) -> Vec<f64> {
        let mut c = vec![0.0; table.dim()];
        for (&tok, &w) in self.support.iter().zip(&self.weights) {
            for (acc, &x) in c.iter_mut().zip(table.vector(tok)) {
                *acc += w * f64::from(x);
            }
        }
        c
    }
}

/// Counts in-vocabulary tokens and normalizes; out-of-vocabulary tokens are
/// dropped first.
pub fn nbow(tokens: &TokenSeq, table: &EmbeddingTable) -> Result<GramHistogram> {
    let mut counts: BTreeMap<u32, u64> = BTreeMap::new();
    for t in &tokens.tokens {
        if let Some(i) = table.get(t) {
            *counts.entry(i).or_default() += 1;
        }
    }
    let total: u64 = counts.values().sum();
    if total == 0 {
        return Err(Error::Unembeddable);
    }
    let (support, raw): (Vec<u32>, Vec<u64>) = counts.into_iter().unzip();
    let mut weights: Vec<f64> = raw.iter().map(|&c| c as f64 / total as f64).collect();
    // Push the rounding residue onto the heaviest entry so the sum is 1 to the ulp.
    let residue = 1.0 - weights.iter().sum::<f64>();
    let heaviest = (0..weights.len())
        .max_by(|&x, &y| weights[x].total_cmp(&weights[y]).then(y.cmp(&x)))
        .expect("non-empty");
    weights[heaviest] += residue;
    GramHistogram::new(support, weights, tokens.granularity)
}

/// Dense ground-cost matrix between two supports.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
    metric: Metric,
}

impl CostMatrix {
    /// Wraps explicit costs; entries must be finite and non-negative.
    pub fn from_rows(rows: usize, cols: usize, data: Vec<f64>, metric: Metric) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Invalid("cost matrix shape mismatch".into()));
        }
        if data.iter().any(|&c| !(c >= 0.0 && c.is_finite())) {
            return Err(Error::Invalid("cost entries must be finite and non-negative".into()));
        }
        let data = data
            .into_iter()
            .map(|c| if c < COST_FLOOR { 0.0 } else { c })
            .collect();
        Ok(CostMatrix {
            rows,
            cols,
            data,
            metric,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> CostMatrix {
        let mut data = Vec::with_capacity(self.data.len());
        for j in 0..self.cols {
            data.extend((0..self.rows).map(|i| self.get(i, j)));
        }
        CostMatrix {
            rows: self.cols,
            cols: self.rows,
            data,
            metric: self.metric,
        }
    }
}

pub fn cost_matrix(a: &GramHistogram, b: &GramHistogram, table: &EmbeddingTable, metric: Metric) -> CostMatrix {
    let mut data = Vec::with_capacity(a.len() * b.len());
    match metric {
        Metric::Cosine => {
            for &x in &a.support {
                data.extend(b.support.iter().map(|&y| table.cosine_distance_idx(x, y)));
            }
        }
        Metric::Euclidean => {
            for &x in &a.support {
                data.extend(b.support.iter().map(|&y| table.euclidean_distance_idx(x, y)));
            }
        }
    }
    for c in &mut data {
        if *c < COST_FLOOR {
            *c = 0.0;
        }
    }
    CostMatrix {
        rows: a.len(),
        cols: b.len(),
        data,
        metric,
    }
}

/// Flow matrix between two supports.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportPlan {
    rows: usize,
    cols: usize,
    flow: Vec<f64>,
}

impl TransportPlan {
    fn zeros(rows: usize, cols: usize) -> Self {
        TransportPlan {
            rows,
            cols,
            flow: vec![0.0; rows * cols],
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.flow[i * self.cols + j]
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.flow.chunks_exact(self.cols).map(|r| r.iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        (0..self.cols)
            .map(|j| (0..self.rows).map(|i| self.get(i, j)).sum())
            .collect()
    }

    /// Tab-separated `i, j, flow, cost` rows for every positive flow, then a
    /// `total` trailer line.
    pub fn dump(&self, cost: &CostMatrix) -> String {
        let mut out = String::from("i\tj\tflow\tcost\n");
        let mut total = 0.0;
        for i in 0..self.rows {
            for j in 0..self.cols {
                let f = self.get(i, j);
                if f > 0.0 {
                    total += f * cost.get(i, j);
                    writeln!(out, "{i}\t{j}\t{f:.12}\t{:.12}", cost.get(i, j)).expect("String write");
                }
            }
        }
        writeln!(out, "total\t{total:.12}").expect("String write");
        out
    }
}

/// Exact minimum-cost transport between `a` and `b` under `cost`.
pub fn emd_exact(a: &GramHistogram, b: &GramHistogram, cost: &CostMatrix) -> Result<(f64, TransportPlan)> {
    simplex::solve(a, b, cost)
}

/// Relaxed lower bound: the larger of the two one-sided relaxations in which
/// each unit of mass moves to its cheapest counterpart.
pub fn rwmd(a: &GramHistogram, b: &GramHistogram, cost: &CostMatrix) -> f64 {
    let mut col_min = vec![f64::INFINITY; cost.cols];
    let mut forward = 0.0;
    for (i, &w) in a.weights.iter().enumerate() {
        let row = cost.row(i);
        let mut best = f64::INFINITY;
        for (j, &c) in row.iter().enumerate() {
            best = best.min(c);
            col_min[j] = col_min[j].min(c);
        }
        forward += w * best;
    }
    let backward: f64 = b.weights.iter().zip(&col_min).map(|(w, c)| w * c).sum();
    forward.max(backward)
}

/// Centroid lower bound; only valid under the Euclidean ground metric.
pub fn wcd(a: &GramHistogram, b: &GramHistogram, table: &EmbeddingTable, metric: Metric) -> Result<f64> {
    if metric != Metric::Euclidean {
        return Err(Error::WcdRequiresEuclidean);
    }
    Ok(centroid_distance(&a.centroid(table), &b.centroid(table)))
}

fn centroid_distance(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt()
}

pub fn mover_distance(doc_a: &TokenSeq, doc_b: &TokenSeq, table: &EmbeddingTable, metric: Metric) -> Result<f64> {
    let a = nbow(doc_a, table)?;
    let b = nbow(doc_b, table)?;
    let cost = cost_matrix(&a, &b, table, metric);
    emd_exact(&a, &b, &cost).map(|(d, _)| d)
}
