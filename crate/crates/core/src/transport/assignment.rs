//! Linear assignment by shortest augmenting paths with row/column
//! potentials: a dense Hungarian method and a candidate-edge variant that
//! certifies optimality against the full cost matrix.

use std::collections::BinaryHeap;

/// Minimum-cost perfect matching on an `n × n` row-major cost matrix.
/// Returns `assignment[row] = column`.
pub fn solve(cost: &[f64], n: usize) -> Vec<usize> {
    assert_eq!(cost.len(), n * n, "cost matrix must be n x n");
    if n == 0 {
        return Vec::new();
    }
    // 1-based bookkeeping; column 0 is the virtual source.
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut owner = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    let mut min_slack = vec![f64::INFINITY; n + 1];
    let mut used = vec![false; n + 1];

    for row in 1..=n {
        owner[0] = row;
        let mut j0 = 0usize;
        min_slack.iter_mut().for_each(|m| *m = f64::INFINITY);
        used.iter_mut().for_each(|f| *f = false);
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let costs = &cost[(i0 - 1) * n..i0 * n];
            let ui = u[i0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let reduced = costs[j - 1] - ui - v[j];
                if reduced < min_slack[j] {
                    min_slack[j] = reduced;
                    way[j] = j0;
                }
                if min_slack[j] < delta {
                    delta = min_slack[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    min_slack[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        // augment along the alternating path
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut assignment = vec![0usize; n];
    for j in 1..=n {
        assignment[owner[j] - 1] = j - 1;
    }
    assignment
}

const NONE: usize = usize::MAX;

#[derive(PartialEq)]
struct Entry(f64, usize);

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    // reversed: BinaryHeap pops the smallest distance
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        other.0.total_cmp(&self.0).then(other.1.cmp(&self.1))
    }
}

/// Successive shortest paths restricted to a candidate edge set, with
/// potentials `u` (rows) and `v` (columns) kept dual feasible on every
/// candidate edge and tight on matched ones.
struct Sparse<'a> {
    n: usize,
    cost: &'a [f64],
    adj: Vec<Vec<usize>>,
    u: Vec<f64>,
    v: Vec<f64>,
    col_of: Vec<usize>,
    row_of: Vec<usize>,
    dist: Vec<f64>,
    done: Vec<bool>,
    pred: Vec<usize>,
    row_dist: Vec<f64>,
}

impl Sparse<'_> {
    fn reduced(&self, i: usize, j: usize) -> f64 {
        self.cost[i * self.n + j] - self.u[i] - self.v[j]
    }

    /// Lowers `u[i]` until every candidate edge of row `i` is feasible.
    fn fit_row_potential(&mut self, i: usize) {
        let row = &self.cost[i * self.n..(i + 1) * self.n];
        self.u[i] = self.adj[i]
            .iter()
            .map(|&j| row[j] - self.v[j])
            .fold(f64::INFINITY, f64::min);
    }

    fn relax(&mut self, i: usize, di: f64, heap: &mut BinaryHeap<Entry>, touched: &mut Vec<usize>) {
        for k in 0..self.adj[i].len() {
            let j = self.adj[i][k];
            if self.done[j] {
                continue;
            }
            let nd = di + self.reduced(i, j).max(0.0);
            if nd < self.dist[j] {
                if self.dist[j] == f64::INFINITY {
                    touched.push(j);
                }
                self.dist[j] = nd;
                self.pred[j] = i;
                heap.push(Entry(nd, j));
            }
        }
    }

    /// Dijkstra from free row `s` to the nearest free column, then flip the
    /// path. `false` if no free column is reachable through candidate edges.
    fn augment(&mut self, s: usize, heap: &mut BinaryHeap<Entry>) -> bool {
        let mut touched = Vec::new();
        let mut finalized = Vec::new();
        let mut rows = vec![s];
        self.row_dist[s] = 0.0;
        heap.clear();
        self.relax(s, 0.0, heap, &mut touched);
        let mut target = NONE;
        while let Some(Entry(d, j)) = heap.pop() {
            if self.done[j] || d > self.dist[j] {
                continue;
            }
            self.done[j] = true;
            finalized.push(j);
            if self.row_of[j] == NONE {
                target = j;
                break;
            }
            let i = self.row_of[j];
            self.row_dist[i] = d;
            rows.push(i);
            self.relax(i, d, heap, &mut touched);
        }
        let found = target != NONE;
        if found {
            let total = self.dist[target];
            for &i in &rows {
                self.u[i] += total - self.row_dist[i];
            }
            for &j in &finalized {
                self.v[j] -= total - self.dist[j];
            }
            let mut j = target;
            loop {
                let i = self.pred[j];
                let next = self.col_of[i];
                self.col_of[i] = j;
                self.row_of[j] = i;
                if i == s {
                    break;
                }
                j = next;
            }
        }
        for &j in &touched {
            self.dist[j] = f64::INFINITY;
            self.done[j] = false;
        }
        found
    }
}

/// Same contract as [`solve`], but the search runs on `candidates[row]`
/// (column indices) only. After each solve every one of the `n²` reduced
/// costs is checked; violated edges are added and the affected rows
/// re-solved, so the result is optimal for the full matrix. Good candidates
/// make this far faster than the dense method on large geometric instances.
pub fn solve_sparse(cost: &[f64], n: usize, candidates: &[Vec<usize>]) -> Vec<usize> {
    assert_eq!(cost.len(), n * n, "cost matrix must be n x n");
    assert_eq!(candidates.len(), n, "one candidate list per row");
    if n <= 1 {
        return (0..n).collect();
    }
    let mut adj: Vec<Vec<usize>> = candidates
        .iter()
        .map(|c| {
            let mut c = c.clone();
            c.sort_unstable();
            c.dedup();
            c
        })
        .collect();
    // every column needs an edge: its cheapest row
    let mut v = vec![f64::INFINITY; n];
    for (i, cols) in adj.iter().enumerate() {
        for &j in cols {
            v[j] = v[j].min(cost[i * n + j]);
        }
    }
    for j in 0..n {
        if v[j] == f64::INFINITY {
            let i = (0..n).min_by(|&a, &b| cost[a * n + j].total_cmp(&cost[b * n + j])).unwrap();
            adj[i].push(j);
            v[j] = cost[i * n + j];
        }
    }
    // rows without candidates get their cheapest column
    for i in 0..n {
        if adj[i].is_empty() {
            let row = &cost[i * n..(i + 1) * n];
            let j = (0..n).min_by(|&a, &b| row[a].total_cmp(&row[b])).unwrap();
            adj[i].push(j);
        }
    }
    let scale = cost.iter().fold(0.0f64, |m, c| m.max(c.abs())).max(f64::MIN_POSITIVE);
    let tol = 1e-12 * scale;
    let mut sp = Sparse {
        n,
        cost,
        adj,
        u: vec![0.0; n],
        v,
        col_of: vec![NONE; n],
        row_of: vec![NONE; n],
        dist: vec![f64::INFINITY; n],
        done: vec![false; n],
        pred: vec![NONE; n],
        row_dist: vec![0.0; n],
    };
    for i in 0..n {
        sp.fit_row_potential(i);
        // greedy start on tight edges
        if let Some(&j) = sp.adj[i]
            .iter()
            .find(|&&j| sp.row_of[j] == NONE && sp.reduced(i, j) <= tol)
        {
            sp.col_of[i] = j;
            sp.row_of[j] = i;
        }
    }
    let mut heap = BinaryHeap::new();
    let mut violations: Vec<(f64, usize)> = Vec::new();
    loop {
        for s in 0..n {
            if sp.col_of[s] == NONE && !sp.augment(s, &mut heap) {
                // no free column reachable through candidates: open the
                // whole row, which is free and so may lower its potential
                sp.adj[s] = (0..n).collect();
                sp.fit_row_potential(s);
                if !sp.augment(s, &mut heap) {
                    return solve(cost, n);
                }
            }
        }
        let mut clean = true;
        for i in 0..n {
            violations.clear();
            let row = &cost[i * n..(i + 1) * n];
            let ui = sp.u[i];
            for (j, &c) in row.iter().enumerate() {
                let r = c - ui - sp.v[j];
                if r < -tol {
                    violations.push((r, j));
                }
            }
            if violations.is_empty() {
                continue;
            }
            clean = false;
            const PER_ROUND: usize = 16;
            if violations.len() > PER_ROUND {
                violations.select_nth_unstable_by(PER_ROUND, |a, b| a.0.total_cmp(&b.0));
                violations.truncate(PER_ROUND);
            }
            sp.adj[i].extend(violations.iter().map(|&(_, j)| j));
            sp.fit_row_potential(i);
            let j = sp.col_of[i];
            sp.col_of[i] = NONE;
            sp.row_of[j] = NONE;
        }
        if clean {
            return sp.col_of;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn total(cost: &[f64], n: usize, a: &[usize]) -> f64 {
        a.iter().enumerate().map(|(i, &j)| cost[i * n + j]).sum()
    }

    fn brute_force(cost: &[f64], n: usize) -> f64 {
        fn go(cost: &[f64], n: usize, row: usize, used: &mut [bool], acc: f64, best: &mut f64) {
            if row == n {
                *best = best.min(acc);
                return;
            }
            for j in 0..n {
                if !used[j] {
                    used[j] = true;
                    go(cost, n, row + 1, used, acc + cost[row * n + j], best);
                    used[j] = false;
                }
            }
        }
        let mut best = f64::INFINITY;
        go(cost, n, 0, &mut vec![false; n], 0.0, &mut best);
        best
    }

    #[test]
    fn small_known_instance() {
        #[rustfmt::skip]
        let cost = [
            4.0, 1.0, 3.0,
            2.0, 0.0, 5.0,
            3.0, 2.0, 2.0,
        ];
        let a = solve(&cost, 3);
        assert_eq!(total(&cost, 3, &a), 5.0);
        let mut cols = a.clone();
        cols.sort_unstable();
        assert_eq!(cols, vec![0, 1, 2]);
    }

    #[test]
    fn trivial_sizes() {
        assert!(solve(&[], 0).is_empty());
        assert_eq!(solve(&[7.0], 1), vec![0]);
    }

    #[test]
    fn heavy_ties_and_integer_costs() {
        use rand::Rng;
        let mut rng = crate::rng::stream(5, &[]);
        for n in 2..=7 {
            for _ in 0..40 {
                let cost: Vec<f64> = (0..n * n).map(|_| rng.random_range(0..4) as f64).collect();
                let a = solve(&cost, n);
                let mut cols = a.clone();
                cols.sort_unstable();
                assert_eq!(cols, (0..n).collect::<Vec<_>>());
                assert_eq!(total(&cost, n, &a), brute_force(&cost, n));
            }
        }
    }

    #[test]
    fn constant_matrix() {
        let a = solve(&[1.5; 36], 6);
        let mut cols = a.clone();
        cols.sort_unstable();
        assert_eq!(cols, (0..6).collect::<Vec<_>>());
    }

    #[test]
    fn sparse_matches_dense_with_poor_candidates() {
        use rand::Rng;
        let mut rng = crate::rng::stream(11, &[]);
        for n in [2usize, 5, 17, 60] {
            for trial in 0..20 {
                let cost: Vec<f64> = if trial % 2 == 0 {
                    (0..n * n).map(|_| rng.random_range(0..5) as f64).collect()
                } else {
                    (0..n * n).map(|_| rng.random::<f64>() * 10.0).collect()
                };
                // one arbitrary candidate per row forces verification rounds
                let candidates: Vec<Vec<usize>> =
                    (0..n).map(|_| vec![rng.random_range(0..n)]).collect();
                let a = solve_sparse(&cost, n, &candidates);
                let mut cols = a.clone();
                cols.sort_unstable();
                assert_eq!(cols, (0..n).collect::<Vec<_>>());
                let dense = total(&cost, n, &solve(&cost, n));
                assert!((total(&cost, n, &a) - dense).abs() <= 1e-9 * dense.max(1.0));
            }
        }
    }

    #[test]
    fn sparse_with_empty_candidates() {
        let cost = [4.0, 1.0, 3.0, 2.0, 0.0, 5.0, 3.0, 2.0, 2.0];
        let a = solve_sparse(&cost, 3, &[vec![], vec![], vec![]]);
        assert_eq!(total(&cost, 3, &a), 5.0);
        assert_eq!(solve_sparse(&[2.0], 1, &[vec![]]), vec![0]);
    }
}
