//! `model.json`: a weighted list of components, each tagged by family, with
//! an optional summary of the fit that produced it. Matrices are stored as
//! arrays of rows.
//!
//! ```json
//! {
//!   "components": [
//!     { "family": "gaussian", "weight": 0.5, "mean": [0.0, 0.0],
//!       "covariance": [[0.3, 0.0], [0.0, 0.3]] }
//!   ]
//! }
//! ```

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{usage, CliResult};
use crate::{ClusterModel, GaussianMixture, GaussianParams, GhParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum ComponentSpec {
    Gaussian {
        weight: f64,
        mean: Vec<f64>,
        covariance: Vec<Vec<f64>>,
    },
    GeneralizedHyperbolic {
        weight: f64,
        location: Vec<f64>,
        scale: Vec<Vec<f64>>,
        skewness: Vec<f64>,
        index: f64,
        concentration: f64,
    },
}

/// Criteria of one candidate K.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateFit {
    pub k: usize,
    pub log_likelihood: Option<f64>,
    pub bic: Option<f64>,
    pub aic: Option<f64>,
    pub icl: Option<f64>,
    pub iterations: Option<usize>,
    pub converged: Option<bool>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub k: usize,
    pub n: usize,
    pub d: usize,
    pub log_likelihood: f64,
    pub bic: f64,
    pub aic: f64,
    pub icl: f64,
    pub iterations: usize,
    pub converged: bool,
    pub regularized: bool,
    pub seed: u64,
    pub restarts: usize,
    pub selection: String,
    pub candidates: Vec<CandidateFit>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub components: Vec<ComponentSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit: Option<FitSummary>,
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn matrix(rows: &[Vec<f64>], d: usize, what: &str) -> CliResult<DMatrix<f64>> {
    if rows.len() != d || rows.iter().any(|r| r.len() != d) {
        return Err(usage(format!("{what} must be {d} x {d}")));
    }
    Ok(DMatrix::from_fn(d, d, |i, j| rows[i][j]))
}

impl ModelFile {
    pub fn from_mixture(model: &GaussianMixture, fit: Option<FitSummary>) -> Self {
        let components = model
            .components()
            .iter()
            .map(|(w, p)| ComponentSpec::Gaussian {
                weight: *w,
                mean: p.mean().iter().copied().collect(),
                covariance: rows(p.covariance()),
            })
            .collect();
        Self { components, fit }
    }

    pub fn read(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))
    }

    /// Weights and validated components; weights must be positive and sum
    /// to one.
    pub fn components(&self) -> CliResult<Vec<(f64, ClusterModel)>> {
        if self.components.is_empty() {
            return Err(usage("model has no components"));
        }
        let mut out = Vec::with_capacity(self.components.len());
        for (c, spec) in self.components.iter().enumerate() {
            let bad = |e: crate::Error| usage(format!("component {}: {e}", c + 1));
            let (weight, model) = match spec {
                ComponentSpec::Gaussian {
                    weight,
                    mean,
                    covariance,
                } => {
                    let cov = matrix(covariance, mean.len(), "covariance")?;
                    let p = GaussianParams::new(DVector::from_column_slice(mean), cov).map_err(bad)?;
                    (*weight, ClusterModel::Gaussian(p))
                }
                ComponentSpec::GeneralizedHyperbolic {
                    weight,
                    location,
                    scale,
                    skewness,
                    index,
                    concentration,
                } => {
                    let scale = matrix(scale, location.len(), "scale")?;
                    let p = GhParams::new(
                        DVector::from_column_slice(location),
                        scale,
                        DVector::from_column_slice(skewness),
                        *index,
                        *concentration,
                    )
                    .map_err(bad)?;
                    (*weight, ClusterModel::GeneralizedHyperbolic(p))
                }
            };
            if !(weight > 0.0 && weight <= 1.0) {
                return Err(usage(format!("component {}: weight {weight} not in (0, 1]", c + 1)));
            }
            out.push((weight, model));
        }
        let d = out[0].1.dim();
        if out.iter().any(|(_, m)| m.dim() != d) {
            return Err(usage("components have different dimensions"));
        }
        let total: f64 = out.iter().map(|(w, _)| w).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(usage(format!("component weights sum to {total}, not 1")));
        }
        Ok(out)
    }

    /// The model as a Gaussian mixture, if every component is Gaussian.
    pub fn gaussian_mixture(&self) -> CliResult<Option<GaussianMixture>> {
        let comps = self.components()?;
        let gaussian: Option<Vec<(f64, GaussianParams)>> = comps
            .into_iter()
            .map(|(w, m)| match m {
                ClusterModel::Gaussian(p) => Some((w, p)),
                ClusterModel::GeneralizedHyperbolic(_) => None,
            })
            .collect();
        gaussian
            .map(|c| GaussianMixture::new(c).map_err(|e| usage(e.to_string())))
            .transpose()
    }
}
