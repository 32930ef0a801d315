//! The three two-cluster simulation designs and their experiment runner.
//!
//! 1. Mean shift: `N((0,0), 0.3 I)` against `N((μ,μ), 0.3 I)`, μ = 0, 0.5, …, 6.
//! 2. Scale shift: `N(0, 0.3 I)` against `N(0, 0.3 σ² I)`, σ² = 1, 2, 4, …, 512.
//! 3. Skewness rotation: two generalized hyperbolic clusters with location 0,
//!    scale `[[4, 1.2], [1.2, 4]]`, index 1 and concentration 1. Cluster one
//!    is skewed along `(d, d)`; cluster two's skewness is that vector turned
//!    clockwise in 22.5° steps until it reaches `(-d, -d)`, for d = 2, 4, 6.
//!
//! For every grid point [`run_scenario`] reports "true" distances from the
//! known parameters and, for designs 1 and 2, "empirical" distances from a
//! two-component Gaussian mixture fitted to each simulated data set.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::{ClusterModel, GaussianParams, GhParams};
use crate::divergences::{
    jsd_plugin, mahalanobis, mean_and_std_error, overlap_measures, EstimatorSettings, Measure,
};
use crate::error::{invalid, Result};
use crate::indices::{
    adjusted_rand, average_between, recovery_band, separation_index, LabeledDataset, RecoveryBand,
};
use crate::mixture::{fit_gmm, EmConfig};
use crate::rng::{derive_seed, stream};
use crate::transport::wasserstein_between_models;

/// Shared covariance scale of the Gaussian designs.
pub const BASE_VARIANCE: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scenario {
    MeanShift,
    ScaleShift,
    SkewRotation,
}

impl Scenario {
    /// 1, 2 or 3.
    pub fn from_number(which: u8) -> Result<Self> {
        match which {
            1 => Ok(Self::MeanShift),
            2 => Ok(Self::ScaleShift),
            3 => Ok(Self::SkewRotation),
            _ => Err(invalid(format!("unknown scenario {which}; expected 1, 2 or 3"))),
        }
    }

    pub fn number(self) -> u8 {
        match self {
            Self::MeanShift => 1,
            Self::ScaleShift => 2,
            Self::SkewRotation => 3,
        }
    }

    /// The full published grid.
    pub fn default_grid(self) -> Vec<GridPoint> {
        match self {
            Self::MeanShift => (0..=12).map(|i| GridPoint::Mean(0.5 * i as f64)).collect(),
            Self::ScaleShift => (0..=9).map(|i| GridPoint::Scale((1u32 << i) as f64)).collect(),
            Self::SkewRotation => [2.0, 4.0, 6.0]
                .into_iter()
                .flat_map(|d| (0..=8).map(move |k| GridPoint::Skew { magnitude: d, angle_index: k }))
                .collect(),
        }
    }

    /// Gaussian designs get an EM-fitted empirical pathway.
    pub fn has_empirical(self) -> bool {
        !matches!(self, Self::SkewRotation)
    }

    /// Measures reported from the known parameters.
    pub fn true_measures(self) -> &'static [Measure] {
        use Measure::*;
        match self {
            Self::SkewRotation => &[Hd, JsdE, Jsd, Wd, Ab, Si],
            _ => &[Md, Hd, JsdE, Jsd, Wd, Ab, Si],
        }
    }

    /// Measures reported from fitted mixtures.
    pub fn empirical_measures(self) -> &'static [Measure] {
        use Measure::*;
        match self {
            Self::SkewRotation => &[],
            _ => &[Md, Hd, JsdE, Wd, Ab, Si],
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::MeanShift => "mean-shift",
            Self::ScaleShift => "scale-shift",
            Self::SkewRotation => "skew-rotation",
        };
        f.write_str(s)
    }
}

/// One parameter setting of a design.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum GridPoint {
    Mean(f64),
    Scale(f64),
    Skew { magnitude: f64, angle_index: usize },
}

impl GridPoint {
    pub fn scenario(&self) -> Scenario {
        match self {
            Self::Mean(_) => Scenario::MeanShift,
            Self::Scale(_) => Scenario::ScaleShift,
            Self::Skew { .. } => Scenario::SkewRotation,
        }
    }

    pub fn models(&self) -> Result<(ClusterModel, ClusterModel)> {
        match *self {
            Self::Mean(mu) => scenario1_models(mu),
            Self::Scale(s2) => scenario2_models(s2),
            Self::Skew {
                magnitude,
                angle_index,
            } => scenario3_models(magnitude, angle_index),
        }
    }
}

/// `N((0,0), 0.3 I)` and `N((μ,μ), 0.3 I)`.
pub fn scenario1_models(mu: f64) -> Result<(ClusterModel, ClusterModel)> {
    if !(mu >= 0.0 && mu.is_finite()) {
        return Err(invalid(format!("mean shift must be finite and >= 0, got {mu}")));
    }
    Ok((
        GaussianParams::isotropic(&[0.0, 0.0], BASE_VARIANCE)?.into(),
        GaussianParams::isotropic(&[mu, mu], BASE_VARIANCE)?.into(),
    ))
}

/// `N(0, 0.3 I)` and `N(0, 0.3 σ² I)`.
pub fn scenario2_models(sigma2: f64) -> Result<(ClusterModel, ClusterModel)> {
    if !(sigma2 >= 1.0 && sigma2.is_finite()) {
        return Err(invalid(format!("variance ratio must be finite and >= 1, got {sigma2}")));
    }
    Ok((
        GaussianParams::isotropic(&[0.0, 0.0], BASE_VARIANCE)?.into(),
        GaussianParams::isotropic(&[0.0, 0.0], BASE_VARIANCE * sigma2)?.into(),
    ))
}

/// `(d, d)` turned clockwise by `angle_index · 22.5°`.
pub fn rotated_skewness(magnitude: f64, angle_index: usize) -> [f64; 2] {
    // exact endpoints at multiples of 90°
    match angle_index {
        0 => return [magnitude, magnitude],
        4 => return [magnitude, -magnitude],
        8 => return [-magnitude, -magnitude],
        _ => {}
    }
    let theta = (angle_index as f64 * 22.5).to_radians();
    let (s, c) = theta.sin_cos();
    [magnitude * (c + s), magnitude * (c - s)]
}

/// Generalized hyperbolic pair with skewness `(d, d)` and its rotation.
pub fn scenario3_models(magnitude: f64, angle_index: usize) -> Result<(ClusterModel, ClusterModel)> {
    if !(magnitude > 0.0 && magnitude.is_finite()) {
        return Err(invalid(format!("skewness magnitude must be finite and > 0, got {magnitude}")));
    }
    if angle_index > 8 {
        return Err(invalid(format!("angle index must be in 0..=8, got {angle_index}")));
    }
    let scale = DMatrix::from_row_slice(2, 2, &[4.0, 1.2, 1.2, 4.0]);
    let make = |skew: [f64; 2]| -> Result<ClusterModel> {
        Ok(ClusterModel::GeneralizedHyperbolic(GhParams::new(
            DVector::zeros(2),
            scale.clone(),
            DVector::from_row_slice(&skew),
            1.0,
            1.0,
        )?))
    };
    Ok((make([magnitude, magnitude])?, make(rotated_skewness(magnitude, angle_index))?))
}

/// Everything [`run_scenario`] needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    pub grid: Vec<GridPoint>,
    pub n_per_cluster: usize,
    /// Simulated data sets per grid point.
    pub replications: usize,
    pub seed: u64,
    /// Monte Carlo draws per overlap estimate.
    pub mc_samples: usize,
    /// Independent Monte Carlo replicates behind each true overlap value.
    pub mc_replicates: usize,
    /// Draws per model for the Wasserstein distance.
    pub wd_samples: usize,
    pub wd_power: f64,
    pub si_proportion: f64,
    /// EM restarts per fitted data set.
    pub em_restarts: usize,
}

impl ScenarioConfig {
    /// Published grid, 2 × 500 points, 100 data sets.
    pub fn new(scenario: Scenario, seed: u64) -> Self {
        Self {
            scenario,
            grid: scenario.default_grid(),
            n_per_cluster: 500,
            replications: 100,
            seed,
            mc_samples: 10_000,
            mc_replicates: 5,
            wd_samples: 1000,
            wd_power: 2.0,
            si_proportion: 0.10,
            em_restarts: 10,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid.iter().any(|g| g.scenario() != self.scenario) {
            return Err(invalid("grid points belong to a different scenario"));
        }
        if self.grid.is_empty() || self.replications == 0 || self.n_per_cluster < 2 {
            return Err(invalid("need a grid point, one replication and 2 points per cluster"));
        }
        if self.em_restarts == 0 {
            return Err(invalid("need at least one EM restart"));
        }
        for p in &self.grid {
            p.models()?;
        }
        EstimatorSettings::new(self.mc_samples, 0, self.mc_replicates).validate()?;
        Ok(())
    }
}

/// Mean, standard deviation, standard error of the mean and the number of
/// values behind them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub sd: f64,
    pub std_error: f64,
    pub count: usize,
}

impl Estimate {
    fn exact(value: f64) -> Self {
        Self {
            mean: value,
            sd: 0.0,
            std_error: 0.0,
            count: 1,
        }
    }

    /// `None` for an empty slice.
    pub fn from_values(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let (mean, std_error) = mean_and_std_error(values);
        Some(Self {
            mean,
            sd: std_error * (values.len() as f64).sqrt(),
            std_error,
            count: values.len(),
        })
    }
}

/// A measure with its estimate; `None` marks a measure that does not apply
/// (or could not be computed on any replication).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureEstimate {
    pub measure: Measure,
    pub estimate: Option<Estimate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointResult {
    pub point: GridPoint,
    pub truth: Vec<MeasureEstimate>,
    /// Empty when the design has no empirical pathway.
    pub empirical: Vec<MeasureEstimate>,
    pub ari: Option<Estimate>,
    /// Band of the mean adjusted Rand index.
    pub band: Option<RecoveryBand>,
    /// Replications whose mixture fit failed; excluded from `empirical`.
    pub fit_failures: usize,
}

impl PointResult {
    pub fn true_value(&self, m: Measure) -> Option<f64> {
        lookup(&self.truth, m)
    }

    pub fn empirical_value(&self, m: Measure) -> Option<f64> {
        lookup(&self.empirical, m)
    }
}

fn lookup(list: &[MeasureEstimate], m: Measure) -> Option<f64> {
    list.iter()
        .find(|e| e.measure == m)
        .and_then(|e| e.estimate.map(|x| x.mean))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioResult {
    pub config: ScenarioConfig,
    pub points: Vec<PointResult>,
}

/// `n` draws from each model stacked, labels 1 and 2.
pub fn simulate_dataset(f: &ClusterModel, g: &ClusterModel, n: usize, seed: u64) -> Result<LabeledDataset> {
    let mut rng = stream(seed, &[]);
    let x = f.sample(&mut rng, n)?;
    let y = g.sample(&mut rng, n)?;
    let mut data = DMatrix::zeros(2 * n, x.ncols());
    data.rows_mut(0, n).copy_from(&x);
    data.rows_mut(n, n).copy_from(&y);
    LabeledDataset::new(data, (0..2 * n).map(|i| 1 + i / n).collect())
}

/// Per-purpose stream tags under a grid point.
mod purpose {
    pub const OVERLAP: u64 = 0;
    pub const PLUGIN: u64 = 1;
    pub const WD: u64 = 2;
    pub const DATA: u64 = 3;
    pub const FIT: u64 = 4;
    pub const FIT_OVERLAP: u64 = 5;
    pub const FIT_WD: u64 = 6;
}

struct Replication {
    true_ab: f64,
    true_si: f64,
    fitted: Option<Fitted>,
}

struct Fitted {
    ari: f64,
    md: f64,
    hd: f64,
    jsd_e: f64,
    wd: f64,
    ab: Option<f64>,
    si: Option<f64>,
}

fn replicate(cfg: &ScenarioConfig, p: u64, r: u64, f: &ClusterModel, g: &ClusterModel) -> Result<Replication> {
    let seed = |tag: u64| derive_seed(cfg.seed, &[p, tag, r]);
    let ds = simulate_dataset(f, g, cfg.n_per_cluster, seed(purpose::DATA))?;
    let scaled = ds.scaled()?;
    let true_ab = average_between(&scaled, 1, 2)?;
    let true_si = separation_index(&scaled, 1, 2, cfg.si_proportion)?;
    let fitted = if cfg.scenario.has_empirical() {
        fit_replicate(cfg, &ds, &scaled, &seed).ok()
    } else {
        None
    };
    Ok(Replication {
        true_ab,
        true_si,
        fitted,
    })
}

fn fit_replicate(
    cfg: &ScenarioConfig,
    ds: &LabeledDataset,
    scaled: &LabeledDataset,
    seed: &dyn Fn(u64) -> u64,
) -> Result<Fitted> {
    let em = EmConfig {
        n_init: cfg.em_restarts,
        seed: seed(purpose::FIT),
        ..EmConfig::default()
    };
    let fit = fit_gmm(ds.data(), 2, &em)?;
    let comps = fit.model.components();
    let (w1, p1) = &comps[0];
    let (w2, p2) = &comps[1];
    let (f, g): (ClusterModel, ClusterModel) = (p1.clone().into(), p2.clone().into());
    let overlap = overlap_measures(&f, &g, &EstimatorSettings::new(cfg.mc_samples, seed(purpose::FIT_OVERLAP), 1))?;
    let wd = wasserstein_between_models(&f, &g, cfg.wd_samples, cfg.wd_power, seed(purpose::FIT_WD))?;
    let labels: Vec<usize> = fit.assignments.iter().map(|&k| k + 1).collect();
    let fitted_ds = LabeledDataset::new(scaled.data().clone(), labels)?;
    // a fit can put every point in one component; AB and SI are undefined then
    let ab = average_between(&fitted_ds, 1, 2).ok();
    let si = separation_index(&fitted_ds, 1, 2, cfg.si_proportion).ok();
    Ok(Fitted {
        ari: adjusted_rand(&fit.assignments, ds.labels())?,
        md: mahalanobis(p1, p2, (*w1, *w2))?.value,
        hd: overlap.hellinger.value,
        jsd_e: overlap.extended_js.value,
        wd,
        ab,
        si,
    })
}

fn run_point(cfg: &ScenarioConfig, p: usize, point: &GridPoint) -> Result<PointResult> {
    let (f, g) = point.models()?;
    let pi = p as u64;
    let seed = |tag: u64| derive_seed(cfg.seed, &[pi, tag]);
    let overlap = overlap_measures(
        &f,
        &g,
        &EstimatorSettings::new(cfg.mc_samples, seed(purpose::OVERLAP), cfg.mc_replicates),
    )?;
    let plugin = jsd_plugin(
        &f,
        &g,
        &EstimatorSettings::new(cfg.mc_samples, seed(purpose::PLUGIN), cfg.mc_replicates),
    )?;
    let wd = wasserstein_between_models(&f, &g, cfg.wd_samples, cfg.wd_power, seed(purpose::WD))?;

    let reps: Vec<Result<Replication>> = (0..cfg.replications as u64)
        .into_par_iter()
        .map(|r| replicate(cfg, pi, r, &f, &g))
        .collect();
    let reps: Vec<Replication> = reps.into_iter().collect::<Result<_>>()?;

    let mc = |v: &crate::divergences::DivergenceValue| Estimate {
        mean: v.value,
        sd: v.std_error * (v.replicate_values.len() as f64).sqrt(),
        std_error: v.std_error,
        count: v.replicate_values.len(),
    };
    let collect = |get: &dyn Fn(&Replication) -> f64| -> Vec<f64> { reps.iter().map(get).collect() };
    let mut truth = Vec::new();
    for &m in cfg.scenario.true_measures() {
        let estimate = match m {
            Measure::Md => Some(Estimate::exact(mahalanobis(
                f.as_gaussian().expect("gaussian design"),
                g.as_gaussian().expect("gaussian design"),
                (1.0, 1.0),
            )?
            .value)),
            Measure::Hd => Some(mc(&overlap.hellinger)),
            Measure::JsdE => Some(mc(&overlap.extended_js)),
            Measure::Jsd => Some(mc(&plugin)),
            Measure::Wd => Some(Estimate::exact(wd)),
            Measure::Ab => Estimate::from_values(&collect(&|r| r.true_ab)),
            Measure::Si => Estimate::from_values(&collect(&|r| r.true_si)),
            Measure::Ba => None,
        };
        truth.push(MeasureEstimate { measure: m, estimate });
    }

    let fits: Vec<&Fitted> = reps.iter().filter_map(|r| r.fitted.as_ref()).collect();
    let mut empirical = Vec::new();
    for &m in cfg.scenario.empirical_measures() {
        let values: Vec<f64> = fits
            .iter()
            .filter_map(|x| match m {
                Measure::Md => Some(x.md),
                Measure::Hd => Some(x.hd),
                Measure::JsdE => Some(x.jsd_e),
                Measure::Wd => Some(x.wd),
                Measure::Ab => x.ab,
                Measure::Si => x.si,
                _ => None,
            })
            .collect();
        empirical.push(MeasureEstimate {
            measure: m,
            estimate: Estimate::from_values(&values),
        });
    }
    let ari = Estimate::from_values(&fits.iter().map(|x| x.ari).collect::<Vec<_>>());
    let band = ari.map(|a| recovery_band(a.mean.clamp(-1.0, 1.0))).transpose()?;
    let fit_failures = if cfg.scenario.has_empirical() {
        reps.len() - fits.len()
    } else {
        0
    };
    Ok(PointResult {
        point: *point,
        truth,
        empirical,
        ari,
        band,
        fit_failures,
    })
}

/// True and (for the Gaussian designs) empirical distances at every grid
/// point. Output is a pure function of `cfg`.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<ScenarioResult> {
    cfg.validate()?;
    let points = cfg
        .grid
        .iter()
        .enumerate()
        .map(|(p, point)| run_point(cfg, p, point))
        .collect::<Result<Vec<_>>>()?;
    Ok(ScenarioResult {
        config: cfg.clone(),
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids_have_published_sizes() {
        assert_eq!(Scenario::MeanShift.default_grid().len(), 13);
        assert_eq!(Scenario::ScaleShift.default_grid().len(), 10);
        assert_eq!(Scenario::SkewRotation.default_grid().len(), 27);
        assert_eq!(Scenario::MeanShift.default_grid()[12], GridPoint::Mean(6.0));
        assert_eq!(Scenario::ScaleShift.default_grid()[9], GridPoint::Scale(512.0));
        assert!(Scenario::from_number(9).is_err());
    }

    #[test]
    fn mean_shift_models() {
        let (f, g) = scenario1_models(0.0).unwrap();
        assert_eq!(f, g);
        let (f, g) = scenario1_models(1.0).unwrap();
        let md = mahalanobis(f.as_gaussian().unwrap(), g.as_gaussian().unwrap(), (1.0, 1.0)).unwrap();
        // sqrt(2 / 0.3)
        assert!((md.value - 2.582).abs() < 1e-3);
        assert!(scenario1_models(-1.0).is_err());
    }

    #[test]
    fn scale_shift_models() {
        for s2 in [1.0, 4.0, 512.0] {
            let (f, g) = scenario2_models(s2).unwrap();
            let md = mahalanobis(f.as_gaussian().unwrap(), g.as_gaussian().unwrap(), (1.0, 1.0)).unwrap();
            assert_eq!(md.value, 0.0);
            assert_eq!(g.covariance()[(1, 1)], 0.3 * s2);
        }
        let (f, g) = scenario2_models(1.0).unwrap();
        assert_eq!(f, g);
        assert!(scenario2_models(0.5).is_err());
    }

    #[test]
    fn skew_rotation_geometry() {
        let d = 4.0;
        let radius = d * 2f64.sqrt();
        for k in 0..=8 {
            let [a, b] = rotated_skewness(d, k);
            assert!(((a * a + b * b).sqrt() - radius).abs() < 1e-12);
            let cos = (a * d + b * d) / (radius * radius);
            assert!((cos - (k as f64 * 22.5f64).to_radians().cos()).abs() < 1e-12);
            if k > 0 && k < 8 {
                // clockwise: (d, d) × (a, b) < 0
                assert!(d * b - d * a < 0.0);
            }
        }
        assert_eq!(rotated_skewness(d, 4), [d, -d]);
        assert_eq!(rotated_skewness(d, 8), [-d, -d]);
        let (f, g) = scenario3_models(2.0, 0).unwrap();
        assert_eq!(f, g);
        assert!(scenario3_models(2.0, 9).is_err());
        assert!(scenario3_models(0.0, 1).is_err());
    }

    fn small(scenario: Scenario, grid: Vec<GridPoint>) -> ScenarioConfig {
        ScenarioConfig {
            grid,
            n_per_cluster: 100,
            replications: 3,
            mc_samples: 2000,
            mc_replicates: 2,
            wd_samples: 200,
            em_restarts: 3,
            ..ScenarioConfig::new(scenario, 5)
        }
    }

    #[test]
    fn run_reports_every_measure_and_is_reproducible() {
        let cfg = small(Scenario::MeanShift, vec![GridPoint::Mean(0.0), GridPoint::Mean(3.0)]);
        let a = run_scenario(&cfg).unwrap();
        let b = run_scenario(&cfg).unwrap();
        assert_eq!(a, b);
        for pr in &a.points {
            assert_eq!(pr.truth.len(), 7);
            assert!(pr.truth.iter().all(|m| m.estimate.is_some()));
            assert_eq!(pr.empirical.len(), 6);
            assert!(pr.ari.is_some() && pr.band.is_some());
        }
        let far = &a.points[1];
        assert_eq!(far.band, Some(RecoveryBand::Excellent));
        assert!((far.true_value(Measure::Wd).unwrap() - 3.0 * 2f64.sqrt()).abs() < 0.3);
        let near = &a.points[0];
        assert_eq!(near.true_value(Measure::Hd), Some(0.0));
        assert_eq!(near.band, Some(RecoveryBand::Poor));
    }

    #[test]
    fn skew_design_has_no_empirical_pathway() {
        let cfg = small(
            Scenario::SkewRotation,
            vec![GridPoint::Skew {
                magnitude: 2.0,
                angle_index: 0,
            }],
        );
        let res = run_scenario(&cfg).unwrap();
        let pr = &res.points[0];
        assert!(pr.empirical.is_empty() && pr.ari.is_none() && pr.band.is_none());
        assert!(pr.truth.iter().all(|m| m.measure != Measure::Md));
        assert_eq!(pr.true_value(Measure::Hd), Some(0.0));
        assert_eq!(pr.true_value(Measure::JsdE), Some(0.0));
    }

    #[test]
    fn mismatched_grid_is_rejected() {
        let cfg = small(Scenario::MeanShift, vec![GridPoint::Scale(2.0)]);
        assert!(run_scenario(&cfg).is_err());
    }
}
