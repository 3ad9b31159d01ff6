//! Independent oracles and fixtures shared by the integration suites.

#![allow(dead_code)]

use gram_mover::embed::{EmbeddingTable, Vocab};
use gram_mover::mover::{CostMatrix, GramHistogram, Metric};
use gram_mover::tokenize::Granularity;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Symmetric Dirichlet(1) weights of the given length.
pub fn dirichlet(rng: &mut impl Rng, len: usize) -> Vec<f64> {
    let gamma = Gamma::new(1.0, 1.0).unwrap();
    loop {
        let raw: Vec<f64> = (0..len).map(|_| gamma.sample(rng)).collect();
        if raw.iter().all(|&x| x > 1e-9) {
            let total: f64 = raw.iter().sum();
            let mut w: Vec<f64> = raw.iter().map(|x| x / total).collect();
            let residue = 1.0 - w.iter().sum::<f64>();
            w[0] += residue;
            return w;
        }
    }
}

pub fn histogram(weights: Vec<f64>, offset: u32) -> GramHistogram {
    let support = (offset..offset + weights.len() as u32).collect();
    GramHistogram::new(support, weights, Granularity::Word).unwrap()
}

/// Minimum transport cost by exhaustive enumeration of the basic feasible
/// solutions of the transportation polytope.
///
/// Every vertex corresponds to a spanning tree of `m + n - 1` cells in the
/// bipartite row/column graph; flows on a tree are determined by peeling
/// leaves. The optimum of a linear objective is attained at a vertex.
pub fn brute_force_emd(a: &[f64], b: &[f64], cost: &[f64]) -> f64 {
    let (m, n) = (a.len(), b.len());
    let cells = m * n;
    let need = m + n - 1;
    let mut best = f64::INFINITY;
    let mut chosen = Vec::with_capacity(need);
    enumerate(0, cells, need, &mut chosen, &mut |subset| {
        if let Some(flows) = tree_flows(subset, a, b, n) {
            if flows.iter().all(|&f| f >= -1e-12) {
                let total: f64 = subset.iter().zip(&flows).map(|(&c, f)| f * cost[c]).sum();
                best = best.min(total);
            }
        }
    });
    best
}

fn enumerate(start: usize, end: usize, need: usize, chosen: &mut Vec<usize>, visit: &mut impl FnMut(&[usize])) {
    if chosen.len() == need {
        visit(chosen);
        return;
    }
    for c in start..end {
        if end - c < need - chosen.len() {
            break;
        }
        chosen.push(c);
        enumerate(c + 1, end, need, chosen, visit);
        chosen.pop();
    }
}

/// Flows on a spanning tree of cells, or None if the cells contain a cycle.
fn tree_flows(subset: &[usize], a: &[f64], b: &[f64], n: usize) -> Option<Vec<f64>> {
    let m = a.len();
    let mut parent: Vec<usize> = (0..m + n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for &c in subset {
        let (r, k) = (find(&mut parent, c / n), find(&mut parent, m + c % n));
        if r == k {
            return None;
        }
        parent[r] = k;
    }
    let mut residual: Vec<f64> = a.iter().chain(b).copied().collect();
    let mut degree = vec![0usize; m + n];
    for &c in subset {
        degree[c / n] += 1;
        degree[m + c % n] += 1;
    }
    let mut flows = vec![f64::NAN; subset.len()];
    let mut done = vec![false; subset.len()];
    for _ in 0..subset.len() {
        let (e, leaf) = subset
            .iter()
            .enumerate()
            .filter(|(e, _)| !done[*e])
            .find_map(|(e, &c)| {
                let (r, k) = (c / n, m + c % n);
                if degree[r] == 1 {
                    Some((e, r))
                } else if degree[k] == 1 {
                    Some((e, k))
                } else {
                    None
                }
            })?;
        let c = subset[e];
        let other = if leaf < m { m + c % n } else { c / n };
        let f = residual[leaf];
        flows[e] = f;
        residual[other] -= f;
        residual[leaf] = 0.0;
        degree[leaf] -= 1;
        degree[other] -= 1;
        done[e] = true;
    }
    Some(flows)
}

pub fn uniform_costs(rng: &mut impl Rng, m: usize, n: usize) -> CostMatrix {
    let data = (0..m * n).map(|_| rng.random::<f64>()).collect();
    CostMatrix::from_rows(m, n, data, Metric::Cosine).unwrap()
}

/// A random table with `size` tokens named `t0..`, components in [-1, 1].
pub fn random_table(rng: &mut impl Rng, size: usize, dim: usize) -> EmbeddingTable {
    let vocab = Vocab::from_tokens((0..size).map(|i| format!("t{i}")).collect()).unwrap();
    let data = (0..size * dim).map(|_| rng.random_range(-1.0f32..1.0)).collect();
    EmbeddingTable::new(vocab, dim, data).unwrap()
}
