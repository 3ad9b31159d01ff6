//! Exact transportation solver: primal network simplex on the complete
//! bipartite graph between the two supports.
//!
//! The basis is a spanning tree of `m + n - 1` cells, seeded by the
//! least-cost rule and kept as a rooted tree (parent pointers, depths, node
//! potentials). Pivots normally use block pricing: cells are scanned in
//! row-major blocks, resuming where the previous search stopped, and the most
//! negative reduced cost of the first block that has one enters.
//!
//! Cycling can only happen through a run of degenerate (zero-flow) pivots.
//! Once such a run grows past `m + n` pivots the solver switches to Bland's
//! rule, where the entering cell is the first one in row-major order with a
//! negative reduced cost and the lowest-indexed candidate leaves, until a
//! pivot moves flow again. Any cycle would have to lie entirely inside a
//! Bland run, which Bland's rule rules out.

use super::{CostMatrix, GramHistogram, TransportPlan};
use crate::{Error, Result};

/// Reduced costs above `-PRICE_TOL` count as non-negative.
const PRICE_TOL: f64 = 1e-12;

const ROOT: usize = 0;
const NONE: usize = usize::MAX;

/// Basis tree over nodes `0..m` (rows) and `m..m+n` (columns). Every
/// non-root node owns the basic cell joining it to its parent.
struct Tree {
    m: usize,
    n: usize,
    parent: Vec<usize>,
    depth: Vec<usize>,
    /// Flow on the cell between a node and its parent.
    flow: Vec<f64>,
    /// Potentials with `pot[row] + pot[col] = cost` on every tree cell.
    pot: Vec<f64>,
    adjacent: Vec<Vec<usize>>,
}

impl Tree {
    /// Row-major index of the cell joining two adjacent nodes.
    fn cell(&self, a: usize, b: usize) -> usize {
        let (row, col) = if a < self.m { (a, b - self.m) } else { (b, a - self.m) };
        row * self.n + col
    }

    fn build(m: usize, n: usize, cells: &[(usize, usize, f64)], cost: &CostMatrix) -> Tree {
        let nodes = m + n;
        let mut adjacent = vec![Vec::new(); nodes];
        let mut edge_flow = std::collections::HashMap::with_capacity(cells.len());
        for &(r, c, f) in cells {
            adjacent[r].push(m + c);
            adjacent[m + c].push(r);
            edge_flow.insert(r * n + c, f);
        }
        let mut tree = Tree {
            m,
            n,
            parent: vec![NONE; nodes],
            depth: vec![0; nodes],
            flow: vec![0.0; nodes],
            pot: vec![0.0; nodes],
            adjacent,
        };
        tree.parent[ROOT] = ROOT;
        tree.hang(ROOT, cost, |tree, child, parent| edge_flow[&tree.cell(child, parent)]);
        tree.parent[ROOT] = NONE;
        tree
    }

    /// Sets parent, depth and potential for every node below `top`, whose
    /// own parent and potential must already be correct. `flow_of` supplies
    /// the flow of newly discovered edges; pass `None`-like behaviour by
    /// returning the stored value.
    fn hang(&mut self, top: usize, cost: &CostMatrix, mut flow_of: impl FnMut(&Tree, usize, usize) -> f64) {
        let mut stack = vec![top];
        while let Some(node) = stack.pop() {
            for k in 0..self.adjacent[node].len() {
                let next = self.adjacent[node][k];
                if next == self.parent[node] {
                    continue;
                }
                self.parent[next] = node;
                self.depth[next] = self.depth[node] + 1;
                let c = self.cell(node, next);
                self.pot[next] = cost.data[c] - self.pot[node];
                self.flow[next] = flow_of(self, next, node);
                stack.push(next);
            }
        }
    }

    fn unlink(&mut self, a: usize, b: usize) {
        for (x, y) in [(a, b), (b, a)] {
            let adj = &mut self.adjacent[x];
            let pos = adj.iter().position(|&v| v == y).expect("tree edge");
            adj.swap_remove(pos);
        }
    }
}

/// Least-cost initial basic feasible solution.
///
/// Every allocation exhausts exactly one row or column (the last exhausts
/// both), so the result has `m + n - 1` cells forming a spanning tree, with
/// zero-flow cells where the allocation is degenerate.
fn initial_basis(a: &[f64], b: &[f64], cost: &CostMatrix) -> Vec<(usize, usize, f64)> {
    let (m, n) = (a.len(), b.len());
    let mut order: Vec<u32> = (0..(m * n) as u32).collect();
    order.sort_unstable_by(|&x, &y| {
        cost.data[x as usize]
            .total_cmp(&cost.data[y as usize])
            .then(x.cmp(&y))
    });
    let mut supply = a.to_vec();
    let mut demand = b.to_vec();
    let mut row_open = vec![true; m];
    let mut col_open = vec![true; n];
    let (mut rows_left, mut cols_left) = (m, n);
    let mut cells = Vec::with_capacity(m + n - 1);

    for idx in order {
        let (i, j) = (idx as usize / n, idx as usize % n);
        if !row_open[i] || !col_open[j] {
            continue;
        }
        if rows_left == 1 && cols_left == 1 {
            cells.push((i, j, supply[i].max(demand[j]).max(0.0)));
            break;
        }
        // Close the row when its supply runs out first, unless it is the last row.
        let close_row = cols_left == 1 || (rows_left > 1 && supply[i] <= demand[j]);
        if close_row {
            let x = supply[i].max(0.0);
            cells.push((i, j, x));
            demand[j] -= x;
            row_open[i] = false;
            rows_left -= 1;
        } else {
            let x = demand[j].max(0.0);
            cells.push((i, j, x));
            supply[i] -= x;
            col_open[j] = false;
            cols_left -= 1;
        }
    }
    debug_assert_eq!(cells.len(), m + n - 1);
    cells
}

/// Most negative reduced cost within the first block, scanning row-major
/// from `cursor`, that contains any negative one.
fn block_price(cost: &CostMatrix, pot: &[f64], block: usize, cursor: &mut usize) -> Option<usize> {
    let (m, n) = (cost.rows, cost.cols);
    let cells = m * n;
    let (col_pot, row_pot) = (&pot[m..], &pot[..m]);
    let mut best: Option<(usize, f64)> = None;
    let mut scanned = 0;
    let (mut i, mut j) = (*cursor / n, *cursor % n);
    while scanned < cells {
        let row = &cost.data[i * n..(i + 1) * n];
        let u = row_pot[i];
        // Stop at the end of the row or the block boundary, whichever is first.
        let span = (n - j).min(block - scanned % block);
        for jj in j..j + span {
            let r = row[jj] - u - col_pot[jj];
            if r < -PRICE_TOL && best.is_none_or(|(_, b)| r < b) {
                best = Some((i * n + jj, r));
            }
        }
        scanned += span;
        j += span;
        if j == n {
            j = 0;
            i = if i + 1 == m { 0 } else { i + 1 };
        }
        if best.is_some() && scanned % block == 0 {
            break;
        }
    }
    *cursor = i * n + j;
    best.map(|(c, _)| c)
}

/// First cell in row-major order with a negative reduced cost.
fn first_negative(cost: &CostMatrix, pot: &[f64]) -> Option<usize> {
    let (m, n) = (cost.rows, cost.cols);
    (0..m).find_map(|i| {
        let row = &cost.data[i * n..(i + 1) * n];
        let u = pot[i];
        (0..n).find(|&j| row[j] - u - pot[m + j] < -PRICE_TOL).map(|j| i * n + j)
    })
}

pub(super) fn solve(a: &GramHistogram, b: &GramHistogram, cost: &CostMatrix) -> Result<(f64, TransportPlan)> {
    let (m, n) = (a.len(), b.len());
    assert_eq!((cost.rows, cost.cols), (m, n), "cost matrix shape mismatch");

    let mut tree = Tree::build(m, n, &initial_basis(&a.weights, &b.weights, cost), cost);
    let cap = 50 * (m + n) * (m + n);
    let mut pivots = 0usize;
    let cells = m * n;
    let block = ((cells as f64).sqrt().ceil() as usize).max(8).min(cells);
    let mut cursor = 0usize;
    let mut degenerate_run = 0usize;
    // Path scratch: (child node, removes flow) for each cycle edge.
    let mut up_col: Vec<(usize, bool)> = Vec::new();
    let mut up_row: Vec<(usize, bool)> = Vec::new();

    loop {
        let entering = if degenerate_run > m + n {
            first_negative(cost, &tree.pot)
        } else {
            block_price(cost, &tree.pot, block, &mut cursor)
        };
        let Some(enter) = entering else { break };
        if pivots == cap {
            return Err(Error::SolverStalled {
                cap,
                dump: format!("a={:?} b={:?} cost={:?}", a.weights, b.weights, cost.data),
            });
        }
        pivots += 1;
        let (ei, ecol) = (enter / n, m + enter % n);

        // The cycle is the entering cell (+) plus the tree path between its
        // two ends. Walking from the column end, cells alternate -, +, ...;
        // an edge loses flow when it is traversed from a column to a row.
        up_col.clear();
        up_row.clear();
        let (mut x, mut y) = (ecol, ei);
        while x != y {
            if tree.depth[x] >= tree.depth[y] {
                up_col.push((x, x >= m));
                x = tree.parent[x];
            } else {
                up_row.push((y, y < m));
                y = tree.parent[y];
            }
        }

        let mut leave: Option<(usize, f64, usize, bool)> = None;
        for (&(child, minus), col_side) in up_col
            .iter()
            .map(|e| (e, true))
            .chain(up_row.iter().map(|e| (e, false)))
        {
            if !minus {
                continue;
            }
            let f = tree.flow[child];
            let key = tree.cell(child, tree.parent[child]);
            let better = match leave {
                None => true,
                Some((_, theta, k, _)) => f < theta || (f == theta && key < k),
            };
            if better {
                leave = Some((child, f, key, col_side));
            }
        }
        let (out, theta, _, col_side) = leave.expect("a cycle has at least one backward cell");
        for &(child, minus) in up_col.iter().chain(&up_row) {
            let f = &mut tree.flow[child];
            if minus {
                *f = (*f - theta).max(0.0);
            } else {
                *f += theta;
            }
        }
        if theta > 0.0 {
            degenerate_run = 0;
        } else {
            degenerate_run += 1;
        }

        // Drop the leaving cell; the entering end on the detached side
        // becomes the subtree's new top, hung from the other end.
        let (top, anchor) = if col_side { (ecol, ei) } else { (ei, ecol) };
        let out_parent = tree.parent[out];
        tree.unlink(out, out_parent);
        // Reverse parent links on the path top -> out, carrying flows along.
        let mut node = top;
        let mut carried = theta;
        let mut new_parent = anchor;
        loop {
            let old_parent = tree.parent[node];
            let old_flow = tree.flow[node];
            tree.parent[node] = new_parent;
            tree.flow[node] = carried;
            if node == out {
                break;
            }
            carried = old_flow;
            new_parent = node;
            node = old_parent;
        }
        tree.adjacent[top].push(anchor);
        tree.adjacent[anchor].push(top);
        tree.depth[top] = tree.depth[anchor] + 1;
        tree.pot[top] = cost.data[tree.cell(top, anchor)] - tree.pot[anchor];
        tree.hang(top, cost, |t, child, _| t.flow[child]);
    }

    let mut plan = TransportPlan::zeros(m, n);
    let mut total = 0.0;
    for v in 0..m + n {
        let p = tree.parent[v];
        if p == NONE {
            continue;
        }
        let c = tree.cell(v, p);
        plan.flow[c] = tree.flow[v];
        total += tree.flow[v] * cost.data[c];
    }
    Ok((total.max(0.0), plan))
}
