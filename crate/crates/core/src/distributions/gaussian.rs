use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use super::{check_dim, CholeskyFactor};
use crate::error::{Error, Result};

/// Mean vector and SPD covariance of a multivariate normal cluster.
#[derive(Debug, Clone)]
pub struct GaussianParams {
    mean: DVector<f64>,
    covariance: DMatrix<f64>,
    factor: CholeskyFactor,
}

impl PartialEq for GaussianParams {
    fn eq(&self, other: &Self) -> bool {
        self.mean == other.mean && self.covariance == other.covariance
    }
}

impl GaussianParams {
    /// Fails unless `covariance` is a symmetric positive definite `d × d`
    /// matrix with `d = mean.len() ≥ 1`.
    pub fn new(mean: DVector<f64>, covariance: DMatrix<f64>) -> Result<Self> {
        if mean.is_empty() {
            return Err(Error::Empty("mean vector"));
        }
        check_dim(mean.len(), covariance.nrows())?;
        if mean.iter().any(|v| !v.is_finite()) {
            return Err(crate::error::invalid("mean must be finite"));
        }
        let factor = CholeskyFactor::new(&covariance, "covariance")?;
        Ok(Self {
            mean,
            covariance,
            factor,
        })
    }

    /// `N(mean, scale · I)`.
    pub fn isotropic(mean: &[f64], scale: f64) -> Result<Self> {
        let d = mean.len();
        Self::new(
            DVector::from_column_slice(mean),
            DMatrix::from_diagonal_element(d, d, scale),
        )
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }

    pub fn log_det(&self) -> f64 {
        self.factor.log_det()
    }

    /// `ln N_d(x; μ, C)` through the Cholesky factor of `C`.
    pub fn log_density(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.dim(), x.len())?;
        Ok(self.log_density_unchecked(x))
    }

    pub(crate) fn log_density_unchecked(&self, x: &[f64]) -> f64 {
        let d = self.dim();
        let mut z: Vec<f64> = x.iter().zip(self.mean.iter()).map(|(a, m)| a - m).collect();
        self.factor.whiten(&mut z);
        let q: f64 = z.iter().map(|v| v * v).sum();
        -0.5 * (d as f64 * (2.0 * PI).ln() + self.factor.log_det() + q)
    }

    /// `n × d` matrix of draws `μ + L z`, `z` standard normal.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Result<DMatrix<f64>> {
        if n == 0 {
            return Err(Error::Empty("sample size"));
        }
        let d = self.dim();
        let mut rows = Vec::with_capacity(n * d);
        let mut z = vec![0.0; d];
        for _ in 0..n {
            for zi in z.iter_mut() {
                *zi = rng.sample(StandardNormal);
            }
            let start = rows.len();
            rows.extend(self.mean.iter());
            self.factor.color_add(&z, 1.0, &mut rows[start..]);
        }
        Ok(DMatrix::from_row_slice(n, d, &rows))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use proptest::prelude::*;

    fn direct_log_density(mean: &DVector<f64>, cov: &DMatrix<f64>, x: &DVector<f64>) -> f64 {
        let d = mean.len() as f64;
        let inv = cov.clone().try_inverse().unwrap();
        let diff = x - mean;
        let q = (diff.transpose() * inv * &diff)[(0, 0)];
        -0.5 * d * (2.0 * PI).ln() - 0.5 * cov.determinant().ln() - 0.5 * q
    }

    #[test]
    fn standard_normal_mode() {
        let p = GaussianParams::isotropic(&[0.0], 1.0).unwrap();
        let expected = -(2.0 * PI).sqrt().ln();
        assert!((p.log_density(&[0.0]).unwrap() - expected).abs() < 1e-15);
        assert!((expected + 0.9189).abs() < 1e-4);
    }

    #[test]
    fn bivariate_mode_matches_determinant_formula() {
        let p = GaussianParams::isotropic(&[0.0, 0.0], 0.3).unwrap();
        // -(d/2) ln 2π - ½ ln|C| with |C| = 0.09
        let expected = -(2.0 * PI).ln() - 0.5 * 0.09f64.ln();
        assert!((p.log_density(&[0.0, 0.0]).unwrap() - expected).abs() < 1e-14);
        assert!((expected + 0.633904).abs() < 1e-6);
    }

    #[test]
    fn translation_invariant() {
        let cov = DMatrix::from_row_slice(2, 2, &[1.0, 0.4, 0.4, 0.7]);
        let p = GaussianParams::new(DVector::from_vec(vec![0.2, -1.0]), cov.clone()).unwrap();
        let shifted = GaussianParams::new(DVector::from_vec(vec![3.2, 1.5]), cov).unwrap();
        let a = p.log_density(&[0.7, 0.1]).unwrap();
        let b = shifted.log_density(&[3.7, 2.6]).unwrap();
        assert!((a - b).abs() < 1e-13);
    }

    #[test]
    fn errors_on_mismatch_and_non_spd() {
        let p = GaussianParams::isotropic(&[0.0, 0.0], 1.0).unwrap();
        assert!(matches!(
            p.log_density(&[1.0, 2.0, 3.0]),
            Err(Error::DimensionMismatch { .. })
        ));
        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert!(matches!(
            GaussianParams::new(DVector::zeros(2), bad),
            Err(Error::NotPositiveDefinite(_))
        ));
        assert!(GaussianParams::new(DVector::zeros(0), DMatrix::zeros(0, 0)).is_err());
        assert!(GaussianParams::new(DVector::zeros(3), DMatrix::identity(2, 2)).is_err());
    }

    #[test]
    fn sample_mean_within_clt_bound() {
        let p = GaussianParams::isotropic(&[0.0, 0.0], 0.3).unwrap();
        let n = 100_000;
        let x = p.sample(&mut stream(42, &[]), n).unwrap();
        let bound = 3.0 * (0.3 / n as f64).sqrt();
        assert!(bound < 0.01);
        for j in 0..2 {
            assert!(x.column(j).mean().abs() < bound);
        }
    }

    #[test]
    fn sample_covariance_converges() {
        let cov = DMatrix::from_row_slice(2, 2, &[2.0, -0.6, -0.6, 0.5]);
        let p = GaussianParams::new(DVector::from_vec(vec![1.0, -2.0]), cov.clone()).unwrap();
        let n = 200_000;
        let x = p.sample(&mut stream(9, &[]), n).unwrap();
        let m = x.row_mean();
        let centered = DMatrix::from_fn(n, 2, |i, j| x[(i, j)] - m[j]);
        let s = centered.transpose() * &centered / n as f64;
        assert!((s - cov).amax() < 0.03);
    }

    #[test]
    fn sampling_is_deterministic_and_shaped() {
        let p = GaussianParams::isotropic(&[1.0, 2.0, 3.0], 0.5).unwrap();
        let a = p.sample(&mut stream(1, &[]), 20).unwrap();
        let b = p.sample(&mut stream(1, &[]), 20).unwrap();
        assert_eq!(a, b);
        let one = p.sample(&mut stream(1, &[]), 1).unwrap();
        assert_eq!(one.shape(), (1, 3));
        assert!(p.sample(&mut stream(1, &[]), 0).is_err());
    }

    fn spd_strategy() -> impl Strategy<Value = (DMatrix<f64>, DVector<f64>, DVector<f64>)> {
        (1usize..=5).prop_flat_map(|d| {
            (
                prop::collection::vec(-2.0f64..2.0, d * d),
                prop::collection::vec(-3.0f64..3.0, d),
                prop::collection::vec(-3.0f64..3.0, d),
            )
                .prop_map(move |(a, m, x)| {
                    let a = DMatrix::from_vec(d, d, a);
                    let cov = &a * a.transpose() + DMatrix::identity(d, d) * 0.2;
                    (cov, DVector::from_vec(m), DVector::from_vec(x))
                })
        })
    }

    proptest! {
        #[test]
        fn cholesky_path_matches_explicit_inverse((cov, mean, x) in spd_strategy()) {
            let p = GaussianParams::new(mean.clone(), cov.clone()).unwrap();
            let got = p.log_density(x.as_slice()).unwrap();
            let want = direct_log_density(&mean, &cov, &x);
            prop_assert!((got - want).abs() <= 1e-10 * want.abs().max(1.0), "{got} vs {want}");
        }
    }
}
