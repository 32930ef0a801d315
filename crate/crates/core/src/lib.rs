//! Distances between cluster distributions.
//!
//! The crate compares two fitted (or known) cluster densities with a battery
//! of measures:
//!
//! | Measure | Module | Needs |
//! |---------|--------|-------|
//! | Mahalanobis (MD) | [`divergences`] | Gaussian parameters |
//! | Bhattacharyya affinity / Hellinger (BA, HD) | [`divergences`] | log-density + sampler |
//! | Jensen-Shannon (JSD, plug-in) and extended JSD (JSD_e) | [`divergences`] | log-density + sampler |
//! | Wasserstein (WD) | [`transport`] | sampler |
//! | Average between (AB), separation index (SI) | [`indices`] | data + labels |
//!
//! Densities live in [`distributions`] (multivariate normal and the
//! generalized hyperbolic family), Gaussian mixtures are fitted by EM in
//! [`mixture`], and [`scenarios`] reproduces the three simulation designs
//! (mean shift, scale shift, skewness rotation). [`cli`] wires all of this to
//! the `clusterdist` binary.
//!
//! ## Choosing a measure
//!
//! - HD and JSD_e are bounded in `[0, 1]`, which makes them comparable across
//!   models, but they saturate once clusters stop overlapping.
//! - WD keeps growing with separation and is zero for identical clusters; it
//!   is the most discriminating measure between well-separated clusters.
//! - MD only sees means and a pooled covariance. Clusters with equal means and
//!   different shapes always have MD = 0.
//! - AB and SI come from data and labels alone. AB is positive even for
//!   identical clusters.
//!
//! Different measures can rank cluster pairs differently; reporting several
//! of them is usually more informative than any single one.

pub mod cli;
pub mod distributions;
pub mod divergences;
mod error;
pub mod indices;
pub mod mixture;
pub mod rng;
pub mod scenarios;
pub mod transport;

pub use distributions::{ClusterModel, GaussianParams, GhParams};
pub use divergences::{DivergenceValue, EstimatorSettings, Measure};
pub use error::{Error, Result};
pub use indices::LabeledDataset;
pub use mixture::{EmConfig, FitResult, GaussianMixture};
pub use scenarios::{run_scenario, Scenario, ScenarioConfig};
pub use transport::{PointCloud, TransportPlan};



