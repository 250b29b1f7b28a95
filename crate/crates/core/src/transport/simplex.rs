//! Transportation simplex (network simplex on the complete bipartite graph).
//!
//! The basis is a spanning tree over `m` row nodes and `n` column nodes with
//! exactly `m + n - 1` basic cells. Each pivot prices out the non-basic cells
//! with node potentials, brings in the most negative reduced cost, and pushes
//! flow around the unique cycle it closes in the tree. After a run of
//! degenerate pivots the entering/leaving choice switches to Bland's rule,
//! which cannot cycle.

use std::collections::VecDeque;

const DEGENERATE_RUN_BEFORE_BLAND: usize = 50;

/// Basic cell of the tree with its current flow.
#[derive(Debug, Clone, Copy)]
struct Basic {
    row: usize,
    col: usize,
    flow: f64,
}

pub(crate) struct Solution {
    pub flow: Vec<f64>,
}

/// Solves `min Σ c_ij x_ij` s.t. row sums `supply`, column sums `demand`,
/// `x >= 0`. Both marginals must carry the same total mass. `cost` is
/// row-major `m × n`.
pub(crate) fn solve(supply: &[f64], demand: &[f64], cost: &[f64]) -> Solution {
    let m = supply.len();
    let n = demand.len();
    debug_assert_eq!(cost.len(), m * n);

    let mut basis = northwest_corner(supply, demand);
    let scale = cost.iter().fold(1.0f64, |a, &c| a.max(c.abs()));
    let tol = 1e-13 * scale;

    let mut u = vec![0.0; m];
    let mut v = vec![0.0; n];
    let mut pivots = 0;
    let mut degenerate_run = 0;
    let max_pivots = 50 * (m + n) * (m + n) + 1000;

    loop {
        potentials(&basis, m, n, cost, &mut u, &mut v);
        let bland = degenerate_run >= DEGENERATE_RUN_BEFORE_BLAND;
        let Some((er, ec)) = entering_cell(&basis, &u, &v, cost, m, n, tol, bland) else {
            break;
        };
        let cycle = tree_path(&basis, m, n, er, ec);
        // cycle[k] with even k loses flow, odd k gains (entering cell gains).
        let mut theta = f64::INFINITY;
        let mut leave = usize::MAX;
        for &b in cycle.iter().step_by(2) {
            let f = basis[b].flow;
            let better = f < theta
                || (f == theta && bland && cell_index(&basis[b], n) < cell_index(&basis[leave], n));
            if better {
                theta = f;
                leave = b;
            }
        }
        theta = theta.max(0.0);
        for (k, &b) in cycle.iter().enumerate() {
            if k % 2 == 0 {
                basis[b].flow = (basis[b].flow - theta).max(0.0);
            } else {
                basis[b].flow += theta;
            }
        }
        basis[leave] = Basic {
            row: er,
            col: ec,
            flow: theta,
        };

        degenerate_run = if theta == 0.0 { degenerate_run + 1 } else { 0 };
        pivots += 1;
        if pivots >= max_pivots {
            // Bland's rule guarantees termination well before this; the cap
            // only guards against pathological floating-point ties.
            break;
        }
    }

    let mut flow = vec![0.0; m * n];
    for b in &basis {
        flow[b.row * n + b.col] += b.flow;
    }
    Solution { flow }
}

fn cell_index(b: &Basic, n: usize) -> usize {
    b.row * n + b.col
}

/// Initial spanning-tree basis with `m + n - 1` cells.
fn northwest_corner(supply: &[f64], demand: &[f64]) -> Vec<Basic> {
    let (m, n) = (supply.len(), demand.len());
    let mut s = supply.to_vec();
    let mut d = demand.to_vec();
    let mut basis = Vec::with_capacity(m + n - 1);
    let (mut i, mut j) = (0, 0);
    loop {
        let q = s[i].min(d[j]).max(0.0);
        basis.push(Basic {
            row: i,
            col: j,
            flow: q,
        });
        s[i] -= q;
        d[j] -= q;
        if i == m - 1 && j == n - 1 {
            break;
        }
        // Leave the row once it is exhausted, unless it is the last row.
        if j == n - 1 || (i < m - 1 && s[i] <= d[j]) {
            i += 1;
        } else {
            j += 1;
        }
    }
    debug_assert_eq!(basis.len(), m + n - 1);
    basis
}

fn adjacency(basis: &[Basic], m: usize, n: usize) -> Vec<Vec<(usize, usize)>> {
    // nodes 0..m are rows, m..m+n are columns; edge payload is the basis slot
    let mut adj = vec![Vec::new(); m + n];
    for (slot, b) in basis.iter().enumerate() {
        adj[b.row].push((m + b.col, slot));
        adj[m + b.col].push((b.row, slot));
    }
    adj
}

fn potentials(basis: &[Basic], m: usize, n: usize, cost: &[f64], u: &mut [f64], v: &mut [f64]) {
    let adj = adjacency(basis, m, n);
    let mut seen = vec![false; m + n];
    let mut queue = VecDeque::from([0usize]);
    seen[0] = true;
    u[0] = 0.0;
    while let Some(node) = queue.pop_front() {
        for &(next, slot) in &adj[node] {
            if seen[next] {
                continue;
            }
            seen[next] = true;
            let b = basis[slot];
            let c = cost[b.row * n + b.col];
            if next >= m {
                v[next - m] = c - u[b.row];
            } else {
                u[next] = c - v[b.col];
            }
            queue.push_back(next);
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn entering_cell(
    basis: &[Basic],
    u: &[f64],
    v: &[f64],
    cost: &[f64],
    m: usize,
    n: usize,
    tol: f64,
    bland: bool,
) -> Option<(usize, usize)> {
    let mut is_basic = vec![false; m * n];
    for b in basis {
        is_basic[b.row * n + b.col] = true;
    }
    let mut best: Option<(usize, usize)> = None;
    let mut best_reduced = -tol;
    for i in 0..m {
        for j in 0..n {
            if is_basic[i * n + j] {
                continue;
            }
            let reduced = cost[i * n + j] - u[i] - v[j];
            if reduced < best_reduced {
                if bland {
                    return Some((i, j));
                }
                best_reduced = reduced;
                best = Some((i, j));
            }
        }
    }
    best
}

/// Basis slots on the tree path from column `col` back to row `row`, in order.
/// Together with the entering cell `(row, col)` they close the pivot cycle;
/// the first slot (adjacent to `col`) loses flow.
fn tree_path(basis: &[Basic], m: usize, n: usize, row: usize, col: usize) -> Vec<usize> {
    let adj = adjacency(basis, m, n);
    let mut parent: Vec<Option<(usize, usize)>> = vec![None; m + n];
    let mut seen = vec![false; m + n];
    let mut queue = VecDeque::from([row]);
    seen[row] = true;
    while let Some(node) = queue.pop_front() {
        if node == m + col {
            break;
        }
        for &(next, slot) in &adj[node] {
            if !seen[next] {
                seen[next] = true;
                parent[next] = Some((node, slot));
                queue.push_back(next);
            }
        }
    }
    let mut path = Vec::new();
    let mut node = m + col;
    while node != row {
        let (prev, slot) = parent[node].expect("basis must be a spanning tree");
        path.push(slot);
        node = prev;
    }
    path
}

#[cfg(test)]
mod tests {
    use super::*;

    fn value(flow: &[f64], cost: &[f64]) -> f64 {
        flow.iter().zip(cost).map(|(f, c)| f * c).sum()
    }

    #[test]
    fn northwest_corner_is_spanning() {
        let b = northwest_corner(&[0.5, 0.5], &[0.25, 0.25, 0.5]);
        assert_eq!(b.len(), 4);
        let total: f64 = b.iter().map(|c| c.flow).sum();
        assert!((total - 1.0).abs() < 1e-15);
    }

    #[test]
    fn assignment_problem_finds_anti_diagonal() {
        let cost = [5.0, 1.0, 1.0, 5.0];
        let sol = solve(&[0.5, 0.5], &[0.5, 0.5], &cost);
        assert!((value(&sol.flow, &cost) - 1.0).abs() < 1e-15);
        assert_eq!(sol.flow, vec![0.0, 0.5, 0.5, 0.0]);
    }

    #[test]
    fn degenerate_uniform_assignment_terminates() {
        let n = 12;
        let w = vec![1.0 / n as f64; n];
        let cost: Vec<f64> = (0..n * n)
            .map(|k| ((k / n) as f64 - (k % n) as f64).abs())
            .collect();
        let sol = solve(&w, &w, &cost);
        assert!(value(&sol.flow, &cost).abs() < 1e-15);
    }
}
