//! Label-based cluster statistics: average between-cluster distance (AB),
//! separation index (SI), adjusted Rand index and column scaling.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Default fraction of nearest-other-cluster distances averaged by
/// [`separation_index`].
pub const DEFAULT_SI_PROPORTION: f64 = 0.10;

/// Observations (rows of `data`) with one cluster label each.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    data: DMatrix<f64>,
    labels: Vec<usize>,
}

impl LabeledDataset {
    pub fn new(data: DMatrix<f64>, labels: Vec<usize>) -> Result<Self> {
        if data.nrows() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: data.nrows(),
                found: labels.len(),
            });
        }
        if data.nrows() < 2 {
            return Err(invalid("a labeled dataset needs at least 2 rows"));
        }
        if data.ncols() == 0 {
            return Err(Error::Empty("data columns"));
        }
        Ok(Self { data, labels })
    }

    pub fn data(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// Distinct labels in increasing order.
    pub fn clusters(&self) -> Vec<usize> {
        let mut l = self.labels.clone();
        l.sort_unstable();
        l.dedup();
        l
    }

    /// Same labels, data replaced by [`scale_columns`] of it.
    pub fn scaled(&self) -> Result<Self> {
        Ok(Self {
            data: scale_columns(&self.data)?,
            labels: self.labels.clone(),
        })
    }

    fn members(&self, label: usize) -> Result<Vec<usize>> {
        let rows: Vec<usize> = (0..self.labels.len())
            .filter(|&i| self.labels[i] == label)
            .collect();
        if rows.is_empty() {
            return Err(Error::UnknownLabel(label));
        }
        Ok(rows)
    }

    fn pair(&self, a: usize, b: usize) -> Result<(Vec<usize>, Vec<usize>)> {
        if a == b {
            return Err(invalid(format!("cluster {a} compared with itself")));
        }
        Ok((self.members(a)?, self.members(b)?))
    }

    fn dist(&self, i: usize, j: usize) -> f64 {
        (self.data.row(i) - self.data.row(j)).norm()
    }
}

/// Centers every column and divides by its sample standard deviation
/// (denominator `N - 1`).
pub fn scale_columns(data: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = data.nrows();
    if n < 2 {
        return Err(invalid("scaling needs at least 2 rows"));
    }
    let mut out = data.clone();
    for (k, mut col) in out.column_iter_mut().enumerate() {
        let mean = col.mean();
        let ss: f64 = col.iter().map(|v| (v - mean) * (v - mean)).sum();
        let sd = (ss / (n - 1) as f64).sqrt();
        if !(sd > 0.0 && sd.is_finite()) {
            return Err(Error::ZeroVariance(k));
        }
        col.iter_mut().for_each(|v| *v = (*v - mean) / sd);
    }
    Ok(out)
}

/// Mean Euclidean distance over all pairs with one point in each cluster.
pub fn average_between(ds: &LabeledDataset, a: usize, b: usize) -> Result<f64> {
    let (ra, rb) = ds.pair(a, b)?;
    let mut total = 0.0;
    for &i in &ra {
        total += rb.iter().map(|&j| ds.dist(i, j)).sum::<f64>();
    }
    Ok(total / (ra.len() * rb.len()) as f64)
}

/// Each point of both clusters contributes its distance to the nearest point
/// of the other cluster; returns the mean of the smallest
/// `ceil(proportion * (n_a + n_b))` of these.
pub fn separation_index(ds: &LabeledDataset, a: usize, b: usize, proportion: f64) -> Result<f64> {
    if !(proportion > 0.0 && proportion <= 1.0) {
        return Err(invalid(format!("separation proportion must lie in (0, 1], got {proportion}")));
    }
    let (ra, rb) = ds.pair(a, b)?;
    let nearest = |from: &[usize], to: &[usize]| -> Vec<f64> {
        from.iter()
            .map(|&i| to.iter().map(|&j| ds.dist(i, j)).fold(f64::INFINITY, f64::min))
            .collect::<Vec<_>>()
    };
    let mut gaps = nearest(&ra, &rb);
    gaps.extend(nearest(&rb, &ra));
    gaps.sort_by(f64::total_cmp);
    let take = ((proportion * gaps.len() as f64).ceil() as usize).clamp(1, gaps.len());
    Ok(gaps[..take].iter().sum::<f64>() / take as f64)
}

fn pairs(n: usize) -> f64 {
    n as f64 * (n as f64 - 1.0) / 2.0
}

/// Hubert-Arabie adjusted Rand index between two partitions of the same
/// points. Label values only need to be consistent within each partition.
pub fn adjusted_rand(a: &[usize], b: &[usize]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    if a.len() < 2 {
        return Err(invalid("the adjusted Rand index needs at least 2 points"));
    }
    let mut table: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut rows: BTreeMap<usize, usize> = BTreeMap::new();
    let mut cols: BTreeMap<usize, usize> = BTreeMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *table.entry((x, y)).or_default() += 1;
        *rows.entry(x).or_default() += 1;
        *cols.entry(y).or_default() += 1;
    }
    let index: f64 = table.values().map(|&c| pairs(c)).sum();
    let sum_a: f64 = rows.values().map(|&c| pairs(c)).sum();
    let sum_b: f64 = cols.values().map(|&c| pairs(c)).sum();
    let expected = sum_a * sum_b / pairs(a.len());
    let max = 0.5 * (sum_a + sum_b);
    if max == expected {
        // both partitions are all-in-one or all-singletons, hence equal
        return Ok(1.0);
    }
    Ok((index - expected) / (max - expected))
}

/// Qualitative cluster recovery from an adjusted Rand index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RecoveryBand {
    Poor,
    Moderate,
    Good,
    Excellent,
}

impl fmt::Display for RecoveryBand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::Poor => "poor",
            Self::Moderate => "moderate",
            Self::Good => "good",
            Self::Excellent => "excellent",
        };
        f.write_str(s)
    }
}

/// Poor below 0.65, moderate below 0.80, good below 0.90, excellent from
/// 0.90 up.
pub fn recovery_band(ari: f64) -> Result<RecoveryBand> {
    if !(-1.0..=1.0).contains(&ari) {
        return Err(invalid(format!("adjusted Rand index must lie in [-1, 1], got {ari}")));
    }
    Ok(if ari < 0.65 {
        RecoveryBand::Poor
    } else if ari < 0.80 {
        RecoveryBand::Moderate
    } else if ari < 0.90 {
        RecoveryBand::Good
    } else {
        RecoveryBand::Excellent
    })
}
