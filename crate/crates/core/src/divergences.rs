//! Density-based distances between two cluster models.
//!
//! Mahalanobis distance is closed form. The overlap measures are Monte Carlo
//! estimates over draws `U` from the equal mixture `(f + g)/2`; every summand
//! is a function of the log-likelihood ratio `Δ = ln f(U) - ln g(U)` only:
//!
//! - Bhattacharyya affinity: `sech(Δ/2) = 2√(fg)/(f+g) ∈ [0, 1]`
//! - extended Jensen-Shannon: `½[a log₂ a + b log₂ b]` with `a = 2f/(f+g)`,
//!   `b = 2 - a`, which lies in `[0, 1]`
//!
//! so both estimates are bounded sample by sample. The plug-in Jensen-Shannon
//! estimator averages `log₂(2f/(f+g))` over `X ~ f` and `log₂(2g/(f+g))`
//! over `Y ~ g` separately; its summands are unbounded below and the
//! estimate can come out negative for heavy-tailed, overlapping clusters.

use std::f64::consts::LN_2;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::{check_dim, ClusterModel, GaussianParams};
use crate::error::{invalid, Error, Result};
use crate::rng::stream;

/// Every measure the crate can report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Measure {
    /// Mahalanobis distance with pooled covariance.
    #[serde(rename = "MD")]
    Md,
    /// Bhattacharyya affinity.
    #[serde(rename = "BA")]
    Ba,
    /// Hellinger distance.
    #[serde(rename = "HD")]
    Hd,
    /// Plug-in Jensen-Shannon distance.
    #[serde(rename = "JSD")]
    Jsd,
    /// Extended Jensen-Shannon distance.
    #[serde(rename = "JSDe")]
    JsdE,
    /// Wasserstein distance.
    #[serde(rename = "WD")]
    Wd,
    /// Average between-cluster distance.
    #[serde(rename = "AB")]
    Ab,
    /// Separation index.
    #[serde(rename = "SI")]
    Si,
}

impl Measure {
    pub fn label(self) -> &'static str {
        match self {
            Measure::Md => "MD",
            Measure::Ba => "BA",
            Measure::Hd => "HD",
            Measure::Jsd => "JSD",
            Measure::JsdE => "JSDe",
            Measure::Wd => "WD",
            Measure::Ab => "AB",
            Measure::Si => "SI",
        }
    }
}

impl std::fmt::Display for Measure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// Monte Carlo settings shared by the overlap estimators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EstimatorSettings {
    /// Draws per replicate.
    pub mc_samples: usize,
    pub seed: u64,
    /// Independent replicates; the standard error comes from their spread.
    pub replicates: usize,
}

impl Default for EstimatorSettings {
    fn default() -> Self {
        Self {
            mc_samples: 1000,
            seed: 0,
            replicates: 1,
        }
    }
}

impl EstimatorSettings {
    pub fn new(mc_samples: usize, seed: u64, replicates: usize) -> Self {
        Self {
            mc_samples,
            seed,
            replicates,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.mc_samples < 2 {
            return Err(invalid(format!("mc_samples must be >= 2, got {}", self.mc_samples)));
        }
        if self.replicates < 1 {
            return Err(invalid("replicates must be >= 1"));
        }
        Ok(())
    }
}

/// One estimated measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DivergenceValue {
    pub measure: Measure,
    /// Mean over replicates.
    pub value: f64,
    /// Standard error of `value`; zero with a single replicate.
    pub std_error: f64,
    pub replicate_values: Vec<f64>,
    /// Draws dropped because a log-density was not finite.
    pub excluded: usize,
}

impl DivergenceValue {
    fn exact(measure: Measure, value: f64) -> Self {
        Self {
            measure,
            value,
            std_error: 0.0,
            replicate_values: vec![value],
            excluded: 0,
        }
    }

    fn from_replicates(measure: Measure, values: Vec<f64>, excluded: usize) -> Self {
        let (value, std_error) = mean_and_std_error(&values);
        Self {
            measure,
            value,
            std_error,
            replicate_values: values,
            excluded,
        }
    }
}

pub(crate) fn mean_and_std_error(values: &[f64]) -> (f64, f64) {
    let r = values.len() as f64;
    let mean = values.iter().sum::<f64>() / r;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (r - 1.0);
    (mean, (var / r).sqrt())
}

/// Mahalanobis distance `√((μ-ν)' C⁻¹ (μ-ν))` with the pooled covariance
/// `C = (w₁C₁ + w₂C₂)/(w₁ + w₂)`. Pass mixing proportions as weights to pool
/// the way a fitted mixture would, or `(1, 1)` for equal weighting.
pub fn mahalanobis(
    f: &GaussianParams,
    g: &GaussianParams,
    weights: (f64, f64),
) -> Result<DivergenceValue> {
    check_dim(f.dim(), g.dim())?;
    let (w1, w2) = weights;
    if !(w1 >= 0.0 && w2 >= 0.0 && w1.is_finite() && w2.is_finite() && w1 + w2 > 0.0) {
        return Err(invalid(format!("pooling weights must be >= 0 with positive sum, got ({w1}, {w2})")));
    }
    let pooled = (f.covariance() * w1 + g.covariance() * w2) / (w1 + w2);
    let pooled = pooled.cholesky().ok_or(Error::NotPositiveDefinite("pooled covariance"))?;
    let diff = f.mean() - g.mean();
    let solved = pooled.solve(&diff);
    let q = diff.dot(&solved).max(0.0);
    Ok(DivergenceValue::exact(Measure::Md, q.sqrt()))
}

/// Bhattacharyya summand `2√(fg)/(f+g) = sech(Δ/2)`, evaluated without
/// overflow for any `Δ`.
pub fn bhattacharyya_term(log_ratio: f64) -> f64 {
    let e = (-0.5 * log_ratio.abs()).exp();
    2.0 * e / (1.0 + e * e)
}

/// Extended Jensen-Shannon summand `½[a log₂ a + b log₂ b]`, `a = 2f/(f+g)`.
pub fn extended_js_term(log_ratio: f64) -> f64 {
    // a = 2σ(Δ), b = 2σ(-Δ)
    let a = 2.0 / (1.0 + (-log_ratio).exp());
    let b = 2.0 / (1.0 + log_ratio.exp());
    let xlogx = |v: f64| if v > 0.0 { v * (v.ln() / LN_2) } else { 0.0 };
    (0.5 * (xlogx(a) + xlogx(b))).clamp(0.0, 1.0)
}

/// Plug-in summand `log₂(2f/(f+g))` at a draw from `f`, given `Δ = ln f - ln g`.
pub fn plugin_js_term(log_ratio: f64) -> f64 {
    1.0 - softplus(-log_ratio) / LN_2
}

fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

fn validate_pair(f: &ClusterModel, g: &ClusterModel, s: &EstimatorSettings) -> Result<()> {
    check_dim(f.dim(), g.dim())?;
    s.validate()
}

/// Log-likelihood ratios at `n` draws from the equal mixture of `f` and `g`.
/// Non-finite ratios are dropped and counted.
pub(crate) fn mixture_log_ratios<R: Rng + ?Sized>(
    f: &ClusterModel,
    g: &ClusterModel,
    n: usize,
    rng: &mut R,
) -> Result<(Vec<f64>, usize)> {
    let identical = f == g;
    let from_f = (0..n).filter(|_| rng.random_bool(0.5)).count();
    let mut ratios = Vec::with_capacity(n);
    let mut excluded = 0;
    for (model, count) in [(f, from_f), (g, n - from_f)] {
        if count == 0 {
            continue;
        }
        let draws = model.sample(rng, count)?;
        let mut row = vec![0.0; draws.ncols()];
        for i in 0..count {
            for (j, v) in row.iter_mut().enumerate() {
                *v = draws[(i, j)];
            }
            let delta = f.log_density_unchecked(&row) - g.log_density_unchecked(&row);
            if delta.is_finite() {
                ratios.push(delta);
            } else if identical {
                ratios.push(0.0);
            } else {
                excluded += 1;
            }
        }
    }
    if ratios.is_empty() {
        return Err(invalid("no finite log-density ratios among Monte Carlo draws"));
    }
    Ok((ratios, excluded))
}

/// Bhattacharyya affinity, Hellinger and extended Jensen-Shannon distances
/// estimated from one shared set of mixture draws.
#[derive(Debug, Clone, PartialEq)]
pub struct OverlapMeasures {
    pub affinity: DivergenceValue,
    pub hellinger: DivergenceValue,
    pub extended_js: DivergenceValue,
}

pub fn overlap_measures(
    f: &ClusterModel,
    g: &ClusterModel,
    s: &EstimatorSettings,
) -> Result<OverlapMeasures> {
    validate_pair(f, g, s)?;
    let per_replicate: Vec<Result<(f64, f64, usize)>> = (0..s.replicates)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream(s.seed, &[r as u64]);
            let (ratios, excluded) = mixture_log_ratios(f, g, s.mc_samples, &mut rng)?;
            let n = ratios.len() as f64;
            let ba = ratios.iter().map(|&d| bhattacharyya_term(d)).sum::<f64>() / n;
            let js = ratios.iter().map(|&d| extended_js_term(d)).sum::<f64>() / n;
            Ok((ba.clamp(0.0, 1.0), js.clamp(0.0, 1.0), excluded))
        })
        .collect();
    let mut ba = Vec::with_capacity(s.replicates);
    let mut js = Vec::with_capacity(s.replicates);
    let mut excluded = 0;
    for item in per_replicate {
        let (b, j, e) = item?;
        ba.push(b);
        js.push(j);
        excluded += e;
    }
    let hd: Vec<f64> = ba.iter().map(|b| (1.0 - b).sqrt()).collect();
    let jsd_e: Vec<f64> = js.iter().map(|v| v.sqrt()).collect();
    Ok(OverlapMeasures {
        affinity: DivergenceValue::from_replicates(Measure::Ba, ba, excluded),
        hellinger: DivergenceValue::from_replicates(Measure::Hd, hd, excluded),
        extended_js: DivergenceValue::from_replicates(Measure::JsdE, jsd_e, excluded),
    })
}

/// Monte Carlo Bhattacharyya affinity `E_U[sech(Δ(U)/2)]`, `U ~ (f+g)/2`.
pub fn bhattacharyya_mc(
    f: &ClusterModel,
    g: &ClusterModel,
    s: &EstimatorSettings,
) -> Result<DivergenceValue> {
    Ok(overlap_measures(f, g, s)?.affinity)
}

/// Hellinger distance `√(1 - BA)`, per replicate.
pub fn hellinger(f: &ClusterModel, g: &ClusterModel, s: &EstimatorSettings) -> Result<DivergenceValue> {
    Ok(overlap_measures(f, g, s)?.hellinger)
}

/// Extended Jensen-Shannon distance; never negative.
pub fn jsd_extended(
    f: &ClusterModel,
    g: &ClusterModel,
    s: &EstimatorSettings,
) -> Result<DivergenceValue> {
    Ok(overlap_measures(f, g, s)?.extended_js)
}

/// Plug-in Jensen-Shannon distance (log base 2) from separate draws
/// `X ~ f` and `Y ~ g`.
///
/// The divergence estimate itself can be negative; the reported distance is
/// then `-√|JS|`, keeping the sign visible instead of hiding it behind NaN.
pub fn jsd_plugin(f: &ClusterModel, g: &ClusterModel, s: &EstimatorSettings) -> Result<DivergenceValue> {
    Ok(jsd_plugin_divergence(f, g, s)?.1)
}

/// The raw plug-in divergence estimates (one per replicate) and the derived
/// signed distance.
pub fn jsd_plugin_divergence(
    f: &ClusterModel,
    g: &ClusterModel,
    s: &EstimatorSettings,
) -> Result<(Vec<f64>, DivergenceValue)> {
    validate_pair(f, g, s)?;
    let n = s.mc_samples;
    let identical = f == g;
    let per_replicate: Vec<Result<(f64, usize)>> = (0..s.replicates)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream(s.seed, &[r as u64, 1]);
            let mut excluded = 0;
            let mut half_sums = [0.0; 2];
            for (slot, (model, sign)) in [(f, 1.0), (g, -1.0)].into_iter().enumerate() {
                let draws = model.sample(&mut rng, n)?;
                let mut row = vec![0.0; draws.ncols()];
                let (mut sum, mut kept) = (0.0, 0usize);
                for i in 0..n {
                    for (j, v) in row.iter_mut().enumerate() {
                        *v = draws[(i, j)];
                    }
                    let delta = f.log_density_unchecked(&row) - g.log_density_unchecked(&row);
                    let term = if identical { 0.0 } else { plugin_js_term(sign * delta) };
                    if term.is_finite() {
                        sum += term;
                        kept += 1;
                    } else {
                        excluded += 1;
                    }
                }
                if kept == 0 {
                    return Err(invalid("no finite plug-in Jensen-Shannon terms"));
                }
                half_sums[slot] = sum / kept as f64;
            }
            Ok((0.5 * (half_sums[0] + half_sums[1]), excluded))
        })
        .collect();
    let mut divergences = Vec::with_capacity(s.replicates);
    let mut excluded = 0;
    for item in per_replicate {
        let (js, e) = item?;
        divergences.push(js);
        excluded += e;
    }
    let distances = divergences
        .iter()
        .map(|&js| js.signum() * js.abs().sqrt())
        .collect();
    Ok((
        divergences,
        DivergenceValue::from_replicates(Measure::Jsd, distances, excluded),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::GhParams;
    use nalgebra::{DMatrix, DVector};
    use proptest::prelude::*;

    fn gauss(mean: &[f64], scale: f64) -> ClusterModel {
        GaussianParams::isotropic(mean, scale).unwrap().into()
    }

    fn settings(n: usize, seed: u64, reps: usize) -> EstimatorSettings {
        EstimatorSettings::new(n, seed, reps)
    }

    fn skewed(skew: [f64; 2]) -> ClusterModel {
        GhParams::new(
            DVector::zeros(2),
            DMatrix::from_row_slice(2, 2, &[4.0, 1.2, 1.2, 4.0]),
            DVector::from_column_slice(&skew),
            1.0,
            1.0,
        )
        .unwrap()
        .into()
    }

    #[test]
    fn mahalanobis_examples() {
        let f = GaussianParams::isotropic(&[1.0, 1.0], 0.3).unwrap();
        let g = GaussianParams::isotropic(&[0.0, 0.0], 0.3).unwrap();
        let md = mahalanobis(&f, &g, (0.5, 0.5)).unwrap();
        assert!((md.value - (2.0f64 / 0.3).sqrt()).abs() < 1e-12);
        assert!((md.value - 2.582).abs() < 1e-3);
        assert_eq!(md.value, mahalanobis(&g, &f, (0.5, 0.5)).unwrap().value);

        let wide = GaussianParams::isotropic(&[0.0, 0.0], 50.0).unwrap();
        assert_eq!(mahalanobis(&g, &wide, (0.2, 0.8)).unwrap().value, 0.0);
    }

    #[test]
    fn mahalanobis_pools_by_weight() {
        let f = GaussianParams::isotropic(&[2.0], 1.0).unwrap();
        let g = GaussianParams::isotropic(&[0.0], 3.0).unwrap();
        // pooled variance (1·1 + 3·3)/4 = 2.5
        let md = mahalanobis(&f, &g, (1.0, 3.0)).unwrap().value;
        assert!((md - 2.0 / 2.5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn mahalanobis_rejects_bad_input() {
        let f = GaussianParams::isotropic(&[0.0, 0.0], 1.0).unwrap();
        let g = GaussianParams::isotropic(&[0.0], 1.0).unwrap();
        assert!(mahalanobis(&f, &g, (1.0, 1.0)).is_err());
        assert!(mahalanobis(&f, &f, (0.0, 0.0)).is_err());
        assert!(mahalanobis(&f, &f, (-1.0, 2.0)).is_err());
    }

    #[test]
    fn identical_models_are_exact() {
        for model in [gauss(&[0.3, -1.0], 0.7), skewed([2.0, 2.0])] {
            let s = settings(2000, 5, 3);
            let m = overlap_measures(&model, &model, &s).unwrap();
            assert_eq!(m.affinity.value, 1.0);
            assert_eq!(m.affinity.std_error, 0.0);
            assert_eq!(m.hellinger.value, 0.0);
            assert_eq!(m.extended_js.value, 0.0);
            assert_eq!(m.extended_js.std_error, 0.0);
            let plug = jsd_plugin(&model, &model, &s).unwrap();
            assert!(plug.value.abs() < 0.02);
        }
    }

    #[test]
    fn gaussian_affinity_matches_closed_form() {
        let f = gauss(&[1.0, 1.0], 0.3);
        let g = gauss(&[0.0, 0.0], 0.3);
        let truth = (-(2.0 / 0.3) / 8.0f64).exp();
        assert!((truth - 0.4346).abs() < 1e-4);
        let ba = bhattacharyya_mc(&f, &g, &settings(10_000, 1, 1)).unwrap();
        assert!((ba.value - truth).abs() < 0.03, "{}", ba.value);
        let hd = hellinger(&f, &g, &settings(10_000, 2, 1)).unwrap();
        assert!((hd.value - (1.0 - truth).sqrt()).abs() < 0.02);
        assert!((hd.value - 0.752).abs() < 0.02);
    }

    #[test]
    fn far_apart_gaussians_saturate() {
        let f = gauss(&[0.0, 0.0], 0.3);
        let g = gauss(&[6.0, 6.0], 0.3);
        let s = settings(10_000, 3, 1);
        let m = overlap_measures(&f, &g, &s).unwrap();
        assert!(m.affinity.value < 0.001);
        assert!(m.hellinger.value > 0.999);
        assert!(m.extended_js.value > 0.999);
        let plug = jsd_plugin(&f, &g, &s).unwrap();
        assert!((plug.value - 1.0).abs() < 1e-3);
    }

    #[test]
    fn extended_jsd_agrees_with_large_reference_run() {
        let f = gauss(&[1.0, 1.0], 0.3);
        let g = gauss(&[0.0, 0.0], 0.3);
        let reference = jsd_extended(&f, &g, &settings(1_000_000, 99, 1)).unwrap().value;
        let est = jsd_extended(&f, &g, &settings(1000, 4, 1)).unwrap().value;
        assert!(reference > 0.0 && reference < 1.0);
        assert!((est - reference).abs() < 0.03, "{est} vs {reference}");
    }

    #[test]
    fn symmetric_in_distribution() {
        let f = gauss(&[0.5, 0.0], 0.3);
        let g = skewed([1.0, 1.0]);
        let s = settings(4000, 6, 5);
        let fg = overlap_measures(&f, &g, &s).unwrap();
        let gf = overlap_measures(&g, &f, &s).unwrap();
        for (a, b) in [
            (&fg.hellinger, &gf.hellinger),
            (&fg.extended_js, &gf.extended_js),
            (&fg.affinity, &gf.affinity),
        ] {
            let width = 3.0 * (a.std_error + b.std_error);
            assert!((a.value - b.value).abs() <= width, "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn gaussian_oracle_random_pairs() {
        use rand::Rng;
        let mut rng = stream(2024, &[]);
        for case in 0..10 {
            let d = rng.random_range(1..=3usize);
            let a = DMatrix::from_fn(d, d, |_, _| rng.random_range(-1.0..1.0));
            let cov = &a * a.transpose() + DMatrix::identity(d, d) * 0.3;
            let mu: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
            let f = GaussianParams::new(DVector::from_vec(mu), cov.clone()).unwrap();
            let g = GaussianParams::new(DVector::zeros(d), cov).unwrap();
            let md = mahalanobis(&f, &g, (1.0, 1.0)).unwrap().value;
            let truth = (1.0 - (-md * md / 8.0).exp()).sqrt();
            let hd = hellinger(&f.into(), &g.into(), &settings(10_000, case, 5)).unwrap();
            assert!(
                (hd.value - truth).abs() <= 4.0 * hd.std_error + 1e-3,
                "case {case}: {} vs {truth} (se {})",
                hd.value,
                hd.std_error
            );
        }
    }

    #[test]
    fn monotone_in_mean_gap() {
        let f = gauss(&[0.0, 0.0], 0.3);
        let mut prev: Option<OverlapMeasures> = None;
        for k in 0..=12 {
            let mu = 0.5 * k as f64;
            let g = gauss(&[mu, mu], 0.3);
            let m = overlap_measures(&f, &g, &settings(1000, 40 + k, 20)).unwrap();
            if let Some(p) = &prev {
                for (a, b) in [(&p.hellinger, &m.hellinger), (&p.extended_js, &m.extended_js)] {
                    let slack = 3.0 * (a.std_error + b.std_error) + 1e-12;
                    assert!(b.value >= a.value - slack, "mu {mu}: {} -> {}", a.value, b.value);
                }
            }
            prev = Some(m);
        }
    }

    #[test]
    fn standard_error_from_replicates() {
        let f = gauss(&[0.0], 1.0);
        let g = gauss(&[1.0], 1.0);
        let single = hellinger(&f, &g, &settings(500, 1, 1)).unwrap();
        assert_eq!(single.std_error, 0.0);
        let many = hellinger(&f, &g, &settings(500, 1, 8)).unwrap();
        assert_eq!(many.replicate_values.len(), 8);
        assert!(many.std_error > 0.0);
        let (m, se) = mean_and_std_error(&many.replicate_values);
        assert_eq!((m, se), (many.value, many.std_error));
    }

    #[test]
    fn settings_and_dimensions_validated() {
        let f = gauss(&[0.0], 1.0);
        let g = gauss(&[0.0, 0.0], 1.0);
        assert!(hellinger(&f, &g, &EstimatorSettings::default()).is_err());
        assert!(hellinger(&f, &f, &settings(1, 0, 1)).is_err());
        assert!(jsd_plugin(&f, &f, &settings(10, 0, 0)).is_err());
    }

    #[test]
    fn deterministic_given_seed() {
        let f = gauss(&[0.0, 0.0], 0.3);
        let g = skewed([2.0, -2.0]);
        let s = settings(1000, 77, 2);
        assert_eq!(overlap_measures(&f, &g, &s).unwrap(), overlap_measures(&f, &g, &s).unwrap());
        assert_eq!(jsd_plugin(&f, &g, &s).unwrap(), jsd_plugin(&f, &g, &s).unwrap());
    }

    proptest! {
        #[test]
        fn summands_are_bounded(delta in prop_oneof![-1e4f64..1e4, -5.0f64..5.0]) {
            let ba = bhattacharyya_term(delta);
            prop_assert!((0.0..=1.0).contains(&ba));
            let js = extended_js_term(delta);
            prop_assert!((0.0..=1.0).contains(&js));
            prop_assert!(plugin_js_term(delta) <= 1.0);
            // symmetric in the roles of f and g
            prop_assert!((ba - bhattacharyya_term(-delta)).abs() < 1e-15);
            prop_assert!((js - extended_js_term(-delta)).abs() < 1e-12);
        }
    }

    #[test]
    fn summand_endpoints() {
        assert_eq!(bhattacharyya_term(0.0), 1.0);
        assert_eq!(extended_js_term(0.0), 0.0);
        assert_eq!(plugin_js_term(0.0), 0.0);
        assert!(bhattacharyya_term(3000.0) < 1e-300);
        assert!((extended_js_term(800.0) - 1.0).abs() < 1e-12);
        assert!((plugin_js_term(800.0) - 1.0).abs() < 1e-12);
        assert!(plugin_js_term(-50.0) < -70.0);
    }
}
