use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use super::bessel::log_bessel_k;
use super::gig::Gig;
use super::{check_dim, CholeskyFactor};
use crate::error::{invalid, Error, Result};

/// Multivariate generalized hyperbolic cluster.
///
/// Normal mean-variance mixture `X = μ + W δ + √W Σ^{1/2} Z` with
/// `W ~ GIG(λ, ω, ω)`, so that
///
/// ```text
/// f(x) = [(ω + q(x)) / (ω + δ'Σ⁻¹δ)]^{(λ - d/2)/2}
///        · K_{λ-d/2}(√((ω + q(x))(ω + δ'Σ⁻¹δ))) · exp((x-μ)'Σ⁻¹δ)
///        / ((2π)^{d/2} |Σ|^{1/2} K_λ(ω))
/// ```
///
/// with `q(x) = (x-μ)'Σ⁻¹(x-μ)`. `index` is λ and `concentration` is ω.
/// The mixing weight is not normalized to `E[W] = 1`.
#[derive(Debug, Clone)]
pub struct GhParams {
    location: DVector<f64>,
    scale: DMatrix<f64>,
    skewness: DVector<f64>,
    index: f64,
    concentration: f64,
    factor: CholeskyFactor,
    // L⁻¹δ, so that δ'Σ⁻¹δ = |white_skew|² and (x-μ)'Σ⁻¹δ = (L⁻¹(x-μ))·white_skew
    white_skew: Vec<f64>,
    skew_norm: f64,
    log_const: f64,
}

impl PartialEq for GhParams {
    fn eq(&self, other: &Self) -> bool {
        self.location == other.location
            && self.scale == other.scale
            && self.skewness == other.skewness
            && self.index == other.index
            && self.concentration == other.concentration
    }
}

impl GhParams {
    pub fn new(
        location: DVector<f64>,
        scale: DMatrix<f64>,
        skewness: DVector<f64>,
        index: f64,
        concentration: f64,
    ) -> Result<Self> {
        let d = location.len();
        if d == 0 {
            return Err(Error::Empty("location vector"));
        }
        check_dim(d, skewness.len())?;
        check_dim(d, scale.nrows())?;
        if location.iter().chain(skewness.iter()).any(|v| !v.is_finite()) {
            return Err(invalid("location and skewness must be finite"));
        }
        if !index.is_finite() {
            return Err(invalid(format!("index must be finite, got {index}")));
        }
        if !(concentration > 0.0 && concentration.is_finite()) {
            return Err(invalid(format!(
                "concentration must be finite and > 0, got {concentration}"
            )));
        }
        let factor = CholeskyFactor::new(&scale, "scale")?;
        let mut white_skew = skewness.as_slice().to_vec();
        factor.whiten(&mut white_skew);
        let skew_norm: f64 = white_skew.iter().map(|v| v * v).sum();
        let log_const = -0.5 * d as f64 * (2.0 * PI).ln()
            - 0.5 * factor.log_det()
            - log_bessel_k(index, concentration)?;
        Ok(Self {
            location,
            scale,
            skewness,
            index,
            concentration,
            factor,
            white_skew,
            skew_norm,
            log_const,
        })
    }

    pub fn dim(&self) -> usize {
        self.location.len()
    }

    pub fn location(&self) -> &DVector<f64> {
        &self.location
    }

    pub fn scale(&self) -> &DMatrix<f64> {
        &self.scale
    }

    pub fn skewness(&self) -> &DVector<f64> {
        &self.skewness
    }

    pub fn index(&self) -> f64 {
        self.index
    }

    pub fn concentration(&self) -> f64 {
        self.concentration
    }

    pub fn mixing(&self) -> Gig {
        // concentration > 0 was checked on construction
        Gig::new(self.index, self.concentration, self.concentration).unwrap()
    }

    /// `μ + E[W] δ`.
    pub fn mean(&self) -> DVector<f64> {
        &self.location + &self.skewness * self.mixing().mean()
    }

    /// `E[W] Σ + Var(W) δδ'`.
    pub fn covariance(&self) -> DMatrix<f64> {
        let w = self.mixing();
        &self.scale * w.mean() + &self.skewness * self.skewness.transpose() * w.variance()
    }

    pub fn log_density(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.dim(), x.len())?;
        Ok(self.log_density_unchecked(x))
    }

    pub(crate) fn log_density_unchecked(&self, x: &[f64]) -> f64 {
        let d = self.dim() as f64;
        let omega = self.concentration;
        let mut z: Vec<f64> = x.iter().zip(self.location.iter()).map(|(a, m)| a - m).collect();
        self.factor.whiten(&mut z);
        let q: f64 = z.iter().map(|v| v * v).sum();
        let linear: f64 = z.iter().zip(&self.white_skew).map(|(a, b)| a * b).sum();
        let order = self.index - 0.5 * d;
        let (a, b) = (omega + q, omega + self.skew_norm);
        let log_k = match log_bessel_k(order, (a * b).sqrt()) {
            Ok(v) => v,
            Err(_) => return f64::NAN,
        };
        0.5 * order * (a.ln() - b.ln()) + log_k + linear + self.log_const
    }

    /// `n × d` matrix of draws `μ + W δ + √W L z`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Result<DMatrix<f64>> {
        if n == 0 {
            return Err(Error::Empty("sample size"));
        }
        let d = self.dim();
        let mixing = self.mixing().sampler();
        let mut rows = Vec::with_capacity(n * d);
        let mut z = vec![0.0; d];
        for _ in 0..n {
            let w = mixing.draw(rng);
            for zi in z.iter_mut() {
                *zi = rng.sample(StandardNormal);
            }
            let start = rows.len();
            rows.extend(
                self.location
                    .iter()
                    .zip(self.skewness.iter())
                    .map(|(m, s)| m + w * s),
            );
            self.factor.color_add(&z, w.sqrt(), &mut rows[start..]);
        }
        Ok(DMatrix::from_row_slice(n, d, &rows))
    }
}
