//! Cluster densities: multivariate normal and multivariate generalized
//! hyperbolic, with exact log-densities and seeded samplers.

pub mod bessel;
mod gaussian;
mod gh;
pub mod gig;

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{Error, Result};

pub use bessel::{bessel_k, log_bessel_k};
pub use gaussian::GaussianParams;
pub use gh::GhParams;
pub use gig::{gig_sample, Gig};

/// Density of a single cluster.
#[derive(Debug, Clone, PartialEq)]
pub enum ClusterModel {
    Gaussian(GaussianParams),
    GeneralizedHyperbolic(GhParams),
}

impl ClusterModel {
    pub fn dim(&self) -> usize {
        match self {
            ClusterModel::Gaussian(p) => p.dim(),
            ClusterModel::GeneralizedHyperbolic(p) => p.dim(),
        }
    }

    pub fn log_density(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.dim(), x.len())?;
        Ok(self.log_density_unchecked(x))
    }

    pub(crate) fn log_density_unchecked(&self, x: &[f64]) -> f64 {
        match self {
            ClusterModel::Gaussian(p) => p.log_density_unchecked(x),
            ClusterModel::GeneralizedHyperbolic(p) => p.log_density_unchecked(x),
        }
    }

    /// `n × d` matrix of i.i.d. draws, one observation per row.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Result<DMatrix<f64>> {
        match self {
            ClusterModel::Gaussian(p) => p.sample(rng, n),
            ClusterModel::GeneralizedHyperbolic(p) => p.sample(rng, n),
        }
    }

    pub fn mean(&self) -> DVector<f64> {
        match self {
            ClusterModel::Gaussian(p) => p.mean().clone(),
            ClusterModel::GeneralizedHyperbolic(p) => p.mean(),
        }
    }

    pub fn covariance(&self) -> DMatrix<f64> {
        match self {
            ClusterModel::Gaussian(p) => p.covariance().clone(),
            ClusterModel::GeneralizedHyperbolic(p) => p.covariance(),
        }
    }

    pub fn as_gaussian(&self) -> Option<&GaussianParams> {
        match self {
            ClusterModel::Gaussian(p) => Some(p),
            ClusterModel::GeneralizedHyperbolic(_) => None,
        }
    }
}

impl From<GaussianParams> for ClusterModel {
    fn from(p: GaussianParams) -> Self {
        ClusterModel::Gaussian(p)
    }
}

impl From<GhParams> for ClusterModel {
    fn from(p: GhParams) -> Self {
        ClusterModel::GeneralizedHyperbolic(p)
    }
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

/// Lower Cholesky factor of an SPD matrix, stored row-major.
#[derive(Debug, Clone)]
pub(crate) struct CholeskyFactor {
    dim: usize,
    lower: Vec<f64>,
    log_det: f64,
}

impl CholeskyFactor {
    pub(crate) fn new(matrix: &DMatrix<f64>, what: &'static str) -> Result<Self> {
        let d = matrix.nrows();
        if d == 0 {
            return Err(Error::Empty("matrix"));
        }
        if matrix.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: matrix.ncols(),
            });
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::NotPositiveDefinite(what));
        }
        let scale = matrix.amax().max(f64::MIN_POSITIVE);
        for i in 0..d {
            for j in 0..i {
                if (matrix[(i, j)] - matrix[(j, i)]).abs() > 1e-9 * scale {
                    return Err(Error::NotPositiveDefinite(what));
                }
            }
        }
        let chol = matrix
            .clone()
            .cholesky()
            .ok_or(Error::NotPositiveDefinite(what))?;
        let l = chol.l();
        let mut lower = vec![0.0; d * d];
        let mut log_det = 0.0;
        for i in 0..d {
            for j in 0..=i {
                lower[i * d + j] = l[(i, j)];
            }
            let diag = l[(i, i)];
            if !(diag > 0.0) {
                return Err(Error::NotPositiveDefinite(what));
            }
            log_det += 2.0 * diag.ln();
        }
        Ok(Self {
            dim: d,
            lower,
            log_det,
        })
    }

    pub(crate) fn log_det(&self) -> f64 {
        self.log_det
    }

    /// Solves `L z = v` in place.
    pub(crate) fn whiten(&self, v: &mut [f64]) {
        let d = self.dim;
        for i in 0..d {
            let row = &self.lower[i * d..i * d + i];
            let s: f64 = row.iter().zip(&v[..i]).map(|(a, b)| a * b).sum();
            v[i] = (v[i] - s) / self.lower[i * d + i];
        }
    }

    /// `out += L z`.
    pub(crate) fn color_add(&self, z: &[f64], scale: f64, out: &mut [f64]) {
        let d = self.dim;
        for i in 0..d {
            let row = &self.lower[i * d..=i * d + i];
            let s: f64 = row.iter().zip(z).map(|(a, b)| a * b).sum();
            out[i] += scale * s;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    #[test]
    fn cluster_model_dispatches_and_checks_dimension() {
        let g = GaussianParams::new(DVector::zeros(2), DMatrix::identity(2, 2)).unwrap();
        let model = ClusterModel::from(g.clone());
        assert_eq!(model.dim(), 2);
        assert!(matches!(
            model.log_density(&[0.0]),
            Err(Error::DimensionMismatch { expected: 2, found: 1 })
        ));
        assert_eq!(
            model.log_density(&[0.5, -0.1]).unwrap(),
            g.log_density(&[0.5, -0.1]).unwrap()
        );
        let s = model.sample(&mut stream(1, &[]), 4).unwrap();
        assert_eq!(s.shape(), (4, 2));
        assert!(model.as_gaussian().is_some());
    }

    #[test]
    fn rejects_asymmetric_and_indefinite_matrices() {
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(CholeskyFactor::new(&asym, "test").is_err());
        let indef = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(CholeskyFactor::new(&indef, "test").is_err());
        let nan = DMatrix::from_row_slice(1, 1, &[f64::NAN]);
        assert!(CholeskyFactor::new(&nan, "test").is_err());
    }
}
