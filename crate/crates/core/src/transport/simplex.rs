//! Transportation simplex: network simplex specialized to the complete
//! bipartite graph between sources and sinks.
//!
//! The basis is a spanning tree with `m + n - 1` cells (zero-flow cells are
//! kept to preserve the tree). Each pivot prices every non-basic cell with
//! the tree potentials, lets the most negative reduced cost enter, and pushes
//! flow around the cycle it closes.

use std::collections::VecDeque;

use crate::error::{Error, Result};

struct Basis {
    rows: usize,
    cols: usize,
    // basic cells: (row, col, flow)
    cells: Vec<(usize, usize, f64)>,
    // node -> indices into `cells`; nodes are rows then columns
    adjacency: Vec<Vec<usize>>,
    is_basic: Vec<bool>,
}

impl Basis {
    fn new(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            cells: Vec::with_capacity(rows + cols - 1),
            adjacency: vec![Vec::new(); rows + cols],
            is_basic: vec![false; rows * cols],
        }
    }

    fn push(&mut self, i: usize, j: usize, flow: f64) {
        let idx = self.cells.len();
        self.cells.push((i, j, flow));
        self.adjacency[i].push(idx);
        self.adjacency[self.rows + j].push(idx);
        self.is_basic[i * self.cols + j] = true;
    }

    fn replace(&mut self, leaving: usize, i: usize, j: usize, flow: f64) {
        let (li, lj, _) = self.cells[leaving];
        self.adjacency[li].retain(|&c| c != leaving);
        self.adjacency[self.rows + lj].retain(|&c| c != leaving);
        self.is_basic[li * self.cols + lj] = false;
        self.cells[leaving] = (i, j, flow);
        self.adjacency[i].push(leaving);
        self.adjacency[self.rows + j].push(leaving);
        self.is_basic[i * self.cols + j] = true;
    }

    fn other_end(&self, cell: usize, node: usize) -> usize {
        let (i, j, _) = self.cells[cell];
        if node == i {
            self.rows + j
        } else {
            i
        }
    }

    /// Dual potentials with `u[0] = 0`.
    fn potentials(&self, cost: &[f64], u: &mut [f64], v: &mut [f64]) {
        let mut seen = vec![false; self.rows + self.cols];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        u[0] = 0.0;
        while let Some(node) = queue.pop_front() {
            for &c in &self.adjacency[node] {
                let next = self.other_end(c, node);
                if seen[next] {
                    continue;
                }
                let (i, j, _) = self.cells[c];
                let cij = cost[i * self.cols + j];
                if next >= self.rows {
                    v[j] = cij - u[i];
                } else {
                    u[i] = cij - v[j];
                }
                seen[next] = true;
                queue.push_back(next);
            }
        }
    }

    /// Cells on the tree path from column node `j` to row node `i`, in order.
    fn path(&self, i: usize, j: usize) -> Vec<usize> {
        let start = self.rows + j;
        let mut via = vec![usize::MAX; self.rows + self.cols];
        let mut seen = vec![false; self.rows + self.cols];
        seen[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(node) = queue.pop_front() {
            if node == i {
                break;
            }
            for &c in &self.adjacency[node] {
                let next = self.other_end(c, node);
                if !seen[next] {
                    seen[next] = true;
                    via[next] = c;
                    queue.push_back(next);
                }
            }
        }
        let mut cells = Vec::new();
        let mut node = i;
        while node != start {
            let c = via[node];
            cells.push(c);
            node = self.other_end(c, node);
        }
        cells.reverse();
        cells
    }
}

/// Optimal flows for supplies `a`, demands `b` (equal totals) and a row-major
/// `a.len() × b.len()` cost matrix. Returns the positive-flow cells.
pub fn solve(a: &[f64], b: &[f64], cost: &[f64]) -> Result<Vec<(usize, usize, f64)>> {
    let (m, n) = (a.len(), b.len());
    assert_eq!(cost.len(), m * n, "cost matrix must be m x n");
    if m == 0 || n == 0 {
        return Err(Error::Empty("transport marginals"));
    }
    let mass_tol = 1e-15 * a.iter().sum::<f64>().max(1.0);

    // north-west corner start; exactly m + n - 1 cells
    let mut basis = Basis::new(m, n);
    let mut supply = a.to_vec();
    let mut demand = b.to_vec();
    let (mut i, mut j) = (0, 0);
    loop {
        let x = supply[i].min(demand[j]).max(0.0);
        basis.push(i, j, x);
        supply[i] -= x;
        demand[j] -= x;
        if i == m - 1 && j == n - 1 {
            break;
        }
        let row_done = supply[i] <= mass_tol || demand[j] > supply[i];
        if (row_done && i < m - 1) || j == n - 1 {
            i += 1;
        } else {
            j += 1;
        }
    }

    let cost_scale = cost.iter().fold(0.0f64, |acc, c| acc.max(c.abs())).max(1e-300);
    let price_tol = 1e-12 * cost_scale;
    let mut u = vec![0.0; m];
    let mut v = vec![0.0; n];
    let max_pivots = 100 * (m + n) * (m + n).max(10);

    for _ in 0..max_pivots {
        basis.potentials(cost, &mut u, &mut v);
        let mut best = (0usize, 0usize, -price_tol);
        for r in 0..m {
            let row = &cost[r * n..(r + 1) * n];
            let basic = &basis.is_basic[r * n..(r + 1) * n];
            for c in 0..n {
                if basic[c] {
                    continue;
                }
                let reduced = row[c] - u[r] - v[c];
                if reduced < best.2 {
                    best = (r, c, reduced);
                }
            }
        }
        if best.2 >= -price_tol {
            return Ok(basis
                .cells
                .iter()
                .filter(|&&(_, _, f)| f > mass_tol)
                .copied()
                .collect());
        }
        let (ei, ej, _) = best;
        let cycle = basis.path(ei, ej);
        // cycle[0] touches column ej and loses flow; signs alternate from there
        let mut theta = f64::INFINITY;
        let mut leaving = usize::MAX;
        for &c in cycle.iter().step_by(2) {
            let f = basis.cells[c].2;
            if f < theta {
                theta = f;
                leaving = c;
            }
        }
        let theta = theta.max(0.0);
        for (k, &c) in cycle.iter().enumerate() {
            if k % 2 == 0 {
                basis.cells[c].2 -= theta;
            } else {
                basis.cells[c].2 += theta;
            }
        }
        basis.replace(leaving, ei, ej, theta);
    }
    Err(Error::SolverStalled(max_pivots))
}
