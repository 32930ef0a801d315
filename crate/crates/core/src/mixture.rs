//! Finite Gaussian mixtures with full covariances, fitted by EM.

use nalgebra::{DMatrix, DVector};
use rand::distr::{weighted::WeightedIndex, Distribution};
use rand::Rng;
use rayon::prelude::*;

use crate::distributions::{check_dim, GaussianParams};
use crate::error::{invalid, Error, Result};
use crate::indices::scale_columns;
use crate::rng::{stream, SimRng};

/// `Σ_k π_k N(x; μ_k, C_k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianMixture {
    components: Vec<(f64, GaussianParams)>,
}

impl GaussianMixture {
    /// Weights must be positive and sum to one (within 1e-9); all components
    /// must share a dimension.
    pub fn new(components: Vec<(f64, GaussianParams)>) -> Result<Self> {
        let first = components.first().ok_or(Error::Empty("mixture components"))?;
        let d = first.1.dim();
        for (w, p) in &components {
            check_dim(d, p.dim())?;
            if !(*w > 0.0 && *w <= 1.0) {
                return Err(invalid(format!("mixture weight {w} outside (0, 1]")));
            }
        }
        let total: f64 = components.iter().map(|(w, _)| w).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(invalid(format!("mixture weights sum to {total}, not 1")));
        }
        Ok(Self { components })
    }

    pub fn components(&self) -> &[(f64, GaussianParams)] {
        &self.components
    }

    pub fn k(&self) -> usize {
        self.components.len()
    }

    pub fn dim(&self) -> usize {
        self.components[0].1.dim()
    }

    pub fn log_density(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.dim(), x.len())?;
        let mut terms = vec![0.0; self.k()];
        Ok(self.log_joint(x, &mut terms))
    }

    /// Fills `terms[k] = ln π_k + ln N(x; μ_k, C_k)` and returns their
    /// log-sum-exp.
    fn log_joint(&self, x: &[f64], terms: &mut [f64]) -> f64 {
        for (t, (w, p)) in terms.iter_mut().zip(&self.components) {
            *t = w.ln() + p.log_density_unchecked(x);
        }
        log_sum_exp(terms)
    }

    pub fn log_likelihood(&self, data: &DMatrix<f64>) -> Result<f64> {
        check_dim(self.dim(), data.ncols())?;
        Ok(self.e_step(&row_major(data)).1)
    }

    /// Draws `n` observations; returns them with their 0-based component.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Result<(DMatrix<f64>, Vec<usize>)> {
        if n == 0 {
            return Err(Error::Empty("sample size"));
        }
        let pick = WeightedIndex::new(self.components.iter().map(|(w, _)| *w))
            .map_err(|e| invalid(e.to_string()))?;
        let labels: Vec<usize> = (0..n).map(|_| pick.sample(rng)).collect();
        let mut out = DMatrix::zeros(n, self.dim());
        for (i, &k) in labels.iter().enumerate() {
            let draw = self.components[k].1.sample(rng, 1)?;
            out.row_mut(i).copy_from(&draw.row(0));
        }
        Ok((out, labels))
    }

    /// Posterior responsibilities (`n × K`) and total log-likelihood.
    fn e_step(&self, rows: &Rows) -> (DMatrix<f64>, f64) {
        let k = self.k();
        let mut resp = DMatrix::zeros(rows.n, k);
        let mut terms = vec![0.0; k];
        let mut total = 0.0;
        for i in 0..rows.n {
            let lse = self.log_joint(rows.row(i), &mut terms);
            total += lse;
            for (c, t) in terms.iter().enumerate() {
                resp[(i, c)] = (t - lse).exp();
            }
        }
        (resp, total)
    }
}

fn log_sum_exp(terms: &[f64]) -> f64 {
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln()
}

struct Rows {
    n: usize,
    d: usize,
    values: Vec<f64>,
}

impl Rows {
    fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.d..(i + 1) * self.d]
    }
}

fn row_major(data: &DMatrix<f64>) -> Rows {
    let (n, d) = data.shape();
    Rows {
        n,
        d,
        values: (0..n).flat_map(|i| (0..d).map(move |j| data[(i, j)])).collect(),
    }
}

/// MAP labels (0-based, ties to the lowest component) and the `n × K`
/// responsibility matrix.
pub fn map_assign(model: &GaussianMixture, data: &DMatrix<f64>) -> Result<(Vec<usize>, DMatrix<f64>)> {
    check_dim(model.dim(), data.ncols())?;
    if data.iter().any(|v| !v.is_finite()) {
        return Err(invalid("data must be finite"));
    }
    let (resp, _) = model.e_step(&row_major(data));
    Ok((argmax_rows(&resp), resp))
}

fn argmax_rows(resp: &DMatrix<f64>) -> Vec<usize> {
    resp.row_iter()
        .map(|r| {
            let mut best = 0;
            for k in 1..r.len() {
                if r[k] > r[best] {
                    best = k;
                }
            }
            best
        })
        .collect()
}

/// EM settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmConfig {
    /// Stop once the relative log-likelihood change falls below this.
    pub tol: f64,
    pub max_iter: usize,
    /// Independent k-means++ initializations; the best fit is kept.
    pub n_init: usize,
    pub seed: u64,
}

impl Default for EmConfig {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 500,
            n_init: 10,
            seed: 0,
        }
    }
}

impl EmConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }
}

/// BIC, AIC and ICL; smaller is better for all three.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Criteria {
    pub bic: f64,
    pub aic: f64,
    pub icl: f64,
}

/// Free parameters of a `k`-component full-covariance mixture in `d`
/// dimensions.
pub fn free_parameters(k: usize, d: usize) -> usize {
    k - 1 + k * d + k * d * (d + 1) / 2
}

/// `BIC = -2L + m ln N`, `AIC = -2L + 2m` and `ICL = BIC - 2 Σ_i ln r_{i,z_i}`
/// with `m = free_parameters(K, d)`, `N` the rows of `responsibilities` and
/// `z_i` the MAP label of row `i`.
pub fn information_criteria(
    log_likelihood: f64,
    responsibilities: &DMatrix<f64>,
    assignments: &[usize],
    d: usize,
) -> Criteria {
    let (n, k) = responsibilities.shape();
    let m = free_parameters(k, d) as f64;
    let bic = -2.0 * log_likelihood + m * (n as f64).ln();
    let entropy: f64 = assignments
        .iter()
        .enumerate()
        .map(|(i, &z)| -responsibilities[(i, z)].max(f64::MIN_POSITIVE).ln())
        .sum();
    Criteria {
        bic,
        aic: -2.0 * log_likelihood + 2.0 * m,
        icl: bic + 2.0 * entropy,
    }
}

/// Outcome of [`fit_gmm`]. `responsibilities` and `assignments` come from the
/// E-step on the returned `model`.
#[derive(Debug, Clone)]
pub struct FitResult {
    pub model: GaussianMixture,
    pub log_likelihood: f64,
    pub bic: f64,
    pub aic: f64,
    pub icl: f64,
    /// MAP component per row, 0-based.
    pub assignments: Vec<usize>,
    pub responsibilities: DMatrix<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Log-likelihood after every E-step of the selected run.
    pub trace: Vec<f64>,
    /// Whether the covariance ridge had to be switched on.
    pub regularized: bool,
}

struct Run {
    model: GaussianMixture,
    resp: DMatrix<f64>,
    log_likelihood: f64,
    trace: Vec<f64>,
    converged: bool,
}

struct Collapse;

/// M-step from responsibilities; `None` if a component lost its mass or its
/// covariance became singular.
fn m_step(rows: &Rows, resp: &DMatrix<f64>, ridge: f64, floor: f64) -> Option<GaussianMixture> {
    let (n, d) = (rows.n, rows.d);
    let mut components = Vec::with_capacity(resp.ncols());
    for c in 0..resp.ncols() {
        let weight: f64 = resp.column(c).sum();
        if !(weight > 1e-10 * n as f64) {
            return None;
        }
        let mut mean = DVector::zeros(d);
        for i in 0..n {
            let r = resp[(i, c)];
            for (m, x) in mean.iter_mut().zip(rows.row(i)) {
                *m += r * x;
            }
        }
        mean /= weight;
        let mut cov = DMatrix::zeros(d, d);
        let mut diff = vec![0.0; d];
        for i in 0..n {
            let r = resp[(i, c)];
            for (t, (x, m)) in diff.iter_mut().zip(rows.row(i).iter().zip(mean.iter())) {
                *t = x - m;
            }
            for a in 0..d {
                for b in 0..=a {
                    cov[(a, b)] += r * diff[a] * diff[b];
                }
            }
        }
        for a in 0..d {
            for b in 0..a {
                cov[(b, a)] = cov[(a, b)];
            }
        }
        cov /= weight;
        for a in 0..d {
            cov[(a, a)] += ridge;
        }
        if cov.clone().symmetric_eigenvalues().min() < floor {
            return None;
        }
        components.push((weight / n as f64, GaussianParams::new(mean, cov).ok()?));
    }
    let total: f64 = components.iter().map(|(w, _)| w).sum();
    components.iter_mut().for_each(|(w, _)| *w /= total);
    GaussianMixture::new(components).ok()
}

fn run_em(rows: &Rows, init: &DMatrix<f64>, cfg: &EmConfig, ridge: f64, floor: f64) -> std::result::Result<Run, Collapse> {
    let mut model = m_step(rows, init, ridge, floor).ok_or(Collapse)?;
    let mut trace = Vec::new();
    loop {
        let (resp, ll) = model.e_step(rows);
        if !ll.is_finite() {
            return Err(Collapse);
        }
        let converged = trace
            .last()
            .is_some_and(|&prev: &f64| (ll - prev).abs() <= cfg.tol * ll.abs());
        trace.push(ll);
        if converged || trace.len() > cfg.max_iter {
            return Ok(Run {
                model,
                resp,
                log_likelihood: ll,
                trace,
                converged,
            });
        }
        model = m_step(rows, &resp, ridge, floor).ok_or(Collapse)?;
    }
}

/// k-means++ centers on `scaled`, then a hard one-hot assignment of every
/// row to its nearest center.
fn kmeans_pp_assignment(scaled: &Rows, k: usize, rng: &mut SimRng) -> DMatrix<f64> {
    let n = scaled.n;
    let sq = |i: usize, j: usize| -> f64 {
        scaled.row(i).iter().zip(scaled.row(j)).map(|(a, b)| (a - b) * (a - b)).sum()
    };
    let mut centers = vec![rng.random_range(0..n)];
    let mut nearest: Vec<f64> = (0..n).map(|i| sq(i, centers[0])).collect();
    while centers.len() < k {
        let next = match WeightedIndex::new(&nearest) {
            Ok(w) => w.sample(rng),
            // every remaining point coincides with a center
            Err(_) => rng.random_range(0..n),
        };
        centers.push(next);
        for (i, best) in nearest.iter_mut().enumerate() {
            *best = best.min(sq(i, next));
        }
    }
    let mut resp = DMatrix::zeros(n, k);
    for i in 0..n {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (c, &center) in centers.iter().enumerate() {
            let dist = sq(i, center);
            if dist < best_d {
                best_d = dist;
                best = c;
            }
        }
        resp[(i, best)] = 1.0;
    }
    resp
}

/// Fits a `k`-component full-covariance Gaussian mixture by EM, keeping the
/// best of `cfg.n_init` k-means++ initializations.
///
/// When a component collapses the run is repeated with `1e-6 · tr(S)/d`
/// added to every covariance diagonal (`S` the sample covariance).
/// [`Error::DegenerateFit`] is returned only if every restart collapses even
/// then.
pub fn fit_gmm(data: &DMatrix<f64>, k: usize, cfg: &EmConfig) -> Result<FitResult> {
    let (n, d) = data.shape();
    if k == 0 {
        return Err(invalid("need at least one component"));
    }
    if d == 0 {
        return Err(Error::Empty("data columns"));
    }
    if n <= k * d {
        return Err(invalid(format!("{n} rows are too few for {k} components in {d} dimensions")));
    }
    if data.iter().any(|v| !v.is_finite()) {
        return Err(invalid("data must be finite"));
    }
    if cfg.n_init == 0 || cfg.max_iter == 0 || !(cfg.tol >= 0.0) {
        return Err(invalid("EM needs n_init >= 1, max_iter >= 1 and tol >= 0"));
    }
    let rows = row_major(data);
    let scaled = row_major(&scale_columns(data).unwrap_or_else(|_| data.clone()));
    let mean = data.row_mean();
    let trace_s = (0..d)
        .map(|j| data.column(j).iter().map(|v| (v - mean[j]).powi(2)).sum::<f64>() / n as f64)
        .sum::<f64>();
    let scale = (trace_s / d as f64).max(f64::MIN_POSITIVE);
    let ridge = 1e-6 * scale;
    let floor = 1e-10 * scale;

    let runs: Vec<Option<(Run, bool)>> = (0..cfg.n_init)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream(cfg.seed, &[r as u64]);
            let init = kmeans_pp_assignment(&scaled, k, &mut rng);
            match run_em(&rows, &init, cfg, 0.0, floor) {
                Ok(run) => Some((run, false)),
                Err(Collapse) => run_em(&rows, &init, cfg, ridge, floor).ok().map(|run| (run, true)),
            }
        })
        .collect();

    let mut best: Option<(Run, bool)> = None;
    for run in runs.into_iter().flatten() {
        if best.as_ref().is_none_or(|b| run.0.log_likelihood > b.0.log_likelihood) {
            best = Some(run);
        }
    }
    let (run, regularized) = best.ok_or(Error::DegenerateFit { restarts: cfg.n_init })?;
    let assignments = argmax_rows(&run.resp);
    let c = information_criteria(run.log_likelihood, &run.resp, &assignments, d);
    Ok(FitResult {
        iterations: run.trace.len(),
        model: run.model,
        log_likelihood: run.log_likelihood,
        bic: c.bic,
        aic: c.aic,
        icl: c.icl,
        assignments,
        responsibilities: run.resp,
        converged: run.converged,
        trace: run.trace,
        regularized,
    })
}
