//! Exact discrete optimal transport between weighted point clouds.
//!
//! Equal-size clouds with uniform masses reduce to a linear assignment
//! problem (the optimal coupling is a permutation); anything else goes to the
//! transportation simplex. Nothing here is entropically regularized.

pub mod assignment;
pub mod simplex;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::{check_dim, ClusterModel};
use crate::error::{invalid, Error, Result};
use crate::rng::stream;

/// Points (one per row) carrying nonnegative masses that sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    points: DMatrix<f64>,
    masses: Vec<f64>,
}

impl PointCloud {
    pub fn new(points: DMatrix<f64>, masses: Vec<f64>) -> Result<Self> {
        if points.nrows() == 0 || points.ncols() == 0 {
            return Err(Error::Empty("point cloud"));
        }
        check_dim(points.nrows(), masses.len())?;
        if masses.iter().any(|&m| !(m >= 0.0 && m.is_finite())) {
            return Err(invalid("masses must be finite and nonnegative"));
        }
        let total: f64 = masses.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(invalid(format!("masses must sum to 1, got {total}")));
        }
        if points.iter().any(|v| !v.is_finite()) {
            return Err(invalid("points must be finite"));
        }
        Ok(Self { points, masses })
    }

    /// Every point with mass `1/n`.
    pub fn uniform(points: DMatrix<f64>) -> Result<Self> {
        let n = points.nrows();
        if n == 0 {
            return Err(Error::Empty("point cloud"));
        }
        Self::new(points, vec![1.0 / n as f64; n])
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points.ncols()
    }

    pub fn points(&self) -> &DMatrix<f64> {
        &self.points
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    fn weighted_mean(&self) -> DVector<f64> {
        let mut mean = DVector::zeros(self.dim());
        for (i, &m) in self.masses.iter().enumerate() {
            mean += self.points.row(i).transpose() * m;
        }
        mean
    }

    fn is_uniform(&self) -> bool {
        let m = 1.0 / self.len() as f64;
        self.masses.iter().all(|&x| (x - m).abs() <= 1e-15)
    }
}

/// Optimal coupling between two clouds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransportPlan {
    /// `(source index, target index, mass)` with positive mass.
    pub couplings: Vec<(usize, usize, f64)>,
    /// `Σ mass · ‖x - y‖^p` at the optimum.
    pub cost: f64,
}

impl TransportPlan {
    /// Row sums (source marginal) and column sums (target marginal).
    pub fn marginals(&self, sources: usize, targets: usize) -> (Vec<f64>, Vec<f64>) {
        let mut rows = vec![0.0; sources];
        let mut cols = vec![0.0; targets];
        for &(i, j, m) in &self.couplings {
            rows[i] += m;
            cols[j] += m;
        }
        (rows, cols)
    }
}

/// Row-major `‖a_i - b_j‖^p`.
pub fn cost_matrix(a: &DMatrix<f64>, b: &DMatrix<f64>, p: f64) -> Vec<f64> {
    let (m, n, d) = (a.nrows(), b.nrows(), a.ncols());
    let a_rows: Vec<f64> = (0..m).flat_map(|i| (0..d).map(move |k| a[(i, k)])).collect();
    let b_rows: Vec<f64> = (0..n).flat_map(|j| (0..d).map(move |k| b[(j, k)])).collect();
    let mut cost = vec![0.0; m * n];
    cost.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        let x = &a_rows[i * d..(i + 1) * d];
        for (j, c) in row.iter_mut().enumerate() {
            let y = &b_rows[j * d..(j + 1) * d];
            let sq: f64 = x.iter().zip(y).map(|(u, v)| (u - v) * (u - v)).sum();
            *c = if p == 2.0 {
                sq
            } else if p == 1.0 {
                sq.sqrt()
            } else {
                sq.powf(0.5 * p)
            };
        }
    });
    cost
}

/// Assignment problems up to this size go straight to the dense solver.
const DENSE_LIMIT: usize = 100;
/// Nearest neighbours per point in the candidate edge set.
const CANDIDATES: usize = 10;
/// Random extra columns per row in the candidate edge set.
const RANDOM_EDGES: usize = 8;

fn sym_power(m: &DMatrix<f64>, power: f64) -> Option<DMatrix<f64>> {
    let eig = m.clone().symmetric_eigen();
    let top = eig.eigenvalues.amax();
    if !(top > 0.0) || eig.eigenvalues.min() <= 1e-12 * top {
        return None;
    }
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| l.powf(power)));
    Some(&eig.eigenvectors * d * eig.eigenvectors.transpose())
}

fn moments(x: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let n = x.nrows() as f64;
    let mean = x.row_mean().transpose();
    let centered = DMatrix::from_fn(x.nrows(), x.ncols(), |i, k| x[(i, k)] - mean[k]);
    (mean, centered.transpose() * &centered / n)
}

/// Likely partners for the assignment search: each point of `a` is moved by
/// the optimal affine map between Gaussians with the two clouds' moments,
/// then linked to its `k` nearest points of `b` and vice versa. Only a
/// speed-up; optimality never depends on these edges.
fn candidate_edges(a: &DMatrix<f64>, b: &DMatrix<f64>, k: usize) -> Vec<Vec<usize>> {
    let (n, d) = (a.nrows(), a.ncols());
    let (ma, ca) = moments(a);
    let (mb, cb) = moments(b);
    let map = sym_power(&ca, 0.5)
        .zip(sym_power(&ca, -0.5))
        .and_then(|(root, inv_root)| {
            let middle = sym_power(&(&root * &cb * &root), 0.5)?;
            Some(&inv_root * middle * &inv_root)
        })
        .unwrap_or_else(|| DMatrix::identity(d, d));
    let moved = DMatrix::from_fn(n, d, |i, k| {
        mb[k] + (0..d).map(|l| map[(k, l)] * (a[(i, l)] - ma[l])).sum::<f64>()
    });
    let sq = cost_matrix(&moved, b, 2.0);
    let k = k.min(n);
    let nearest = |dist: &mut Vec<(f64, usize)>| -> Vec<usize> {
        if k < dist.len() {
            dist.select_nth_unstable_by(k, |x, y| x.0.total_cmp(&y.0));
        }
        dist[..k].iter().map(|&(_, j)| j).collect()
    };
    let mut edges: Vec<Vec<usize>> = (0..n)
        .into_par_iter()
        .map(|i| nearest(&mut (0..n).map(|j| (sq[i * n + j], j)).collect()))
        .collect();
    let by_column: Vec<Vec<usize>> = (0..n)
        .into_par_iter()
        .map(|j| nearest(&mut (0..n).map(|i| (sq[i * n + j], i)).collect()))
        .collect();
    for (j, rows) in by_column.into_iter().enumerate() {
        for i in rows {
            edges[i].push(j);
        }
    }
    // a few random edges keep the candidate graph well connected when the
    // affine map misjudges the shape of the clouds
    let mut rng = stream(0, &[]);
    for e in edges.iter_mut() {
        e.extend((0..RANDOM_EDGES).map(|_| rng.random_range(0..n)));
    }
    edges
}

/// p-Wasserstein distance `(min_H Σ H_ij ‖a_i - b_j‖^p)^{1/p}` and the
/// optimal plan `H`.
pub fn wasserstein(a: &PointCloud, b: &PointCloud, p: f64) -> Result<(f64, TransportPlan)> {
    check_dim(a.dim(), b.dim())?;
    if !(p > 0.0 && p.is_finite()) {
        return Err(invalid(format!("transport exponent must be finite and > 0, got {p}")));
    }
    // For p = 2 translating one cloud only adds row and column constants to
    // the cost, which leaves the optimal plan unchanged; matching centered
    // clouds is much faster when they are far apart.
    let cost = if p == 2.0 {
        let shift = a.weighted_mean() - b.weighted_mean();
        let shifted = DMatrix::from_fn(b.len(), b.dim(), |j, k| b.points[(j, k)] + shift[k]);
        cost_matrix(&a.points, &shifted, p)
    } else {
        cost_matrix(&a.points, &b.points, p)
    };
    let (m, n) = (a.len(), b.len());
    let couplings = if m == n && a.is_uniform() && b.is_uniform() {
        let mass = 1.0 / n as f64;
        let perm = if n <= DENSE_LIMIT {
            assignment::solve(&cost, n)
        } else {
            assignment::solve_sparse(&cost, n, &candidate_edges(&a.points, &b.points, CANDIDATES))
        };
        perm.into_iter()
            .enumerate()
            .map(|(i, j)| (i, j, mass))
            .collect::<Vec<_>>()
    } else {
        simplex::solve(&a.masses, &b.masses, &cost)?
    };
    let total: f64 = couplings
        .iter()
        .map(|&(i, j, w)| {
            let sq = (a.points.row(i) - b.points.row(j)).norm_squared();
            w * if p == 2.0 { sq } else { sq.powf(0.5 * p) }
        })
        .sum();
    let total = total.max(0.0);
    Ok((
        total.powf(1.0 / p),
        TransportPlan {
            couplings,
            cost: total,
        },
    ))
}

/// Draws `n` points from each model (uniform masses) and returns the
/// Wasserstein distance between the two samples.
pub fn wasserstein_between_models(
    f: &ClusterModel,
    g: &ClusterModel,
    n: usize,
    p: f64,
    seed: u64,
) -> Result<f64> {
    check_dim(f.dim(), g.dim())?;
    if n < 2 {
        return Err(invalid(format!("need at least 2 draws per model, got {n}")));
    }
    let mut rng = stream(seed, &[]);
    let x = f.sample(&mut rng, n)?;
    let y = g.sample(&mut rng, n)?;
    let (w, _) = wasserstein(&PointCloud::uniform(x)?, &PointCloud::uniform(y)?, p)?;
    Ok(w)
}
