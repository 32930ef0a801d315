use nalgebra::{DMatrix, DVector};
use serde_json::json;

use super::model_file::ModelFile;
use super::{format_float, usage, write_csv, write_json, CliResult, GridArgs};
use crate::{ClusterModel, GaussianParams};

fn parse_dims(s: &str, d: usize) -> CliResult<(usize, usize)> {
    let parts: Vec<usize> = s
        .split(',')
        .map(|p| p.trim().parse::<usize>())
        .collect::<Result<_, _>>()
        .map_err(|_| usage(format!("--dims expects two integers like 1,2, got '{s}'")))?;
    match parts[..] {
        [i, j] if i != j && (1..=d).contains(&i) && (1..=d).contains(&j) => Ok((i - 1, j - 1)),
        _ => Err(usage(format!("--dims needs two distinct coordinates in 1..={d}, got '{s}'"))),
    }
}

fn parse_range(s: &str, comps: &[(f64, ClusterModel)], dims: (usize, usize)) -> CliResult<[f64; 4]> {
    if s.trim() == "auto" {
        let bounds = |k: usize| {
            comps.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (_, m)| {
                let (mean, sd) = (m.mean()[k], m.covariance()[(k, k)].sqrt());
                (lo.min(mean - 4.0 * sd), hi.max(mean + 4.0 * sd))
            })
        };
        let (x0, x1) = bounds(dims.0);
        let (y0, y1) = bounds(dims.1);
        return Ok([x0, x1, y0, y1]);
    }
    let v: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| usage(format!("--range expects auto or x0,x1,y0,y1, got '{s}'")))?;
    match v[..] {
        [x0, x1, y0, y1] if x0 < x1 && y0 < y1 && v.iter().all(|x| x.is_finite()) => Ok([x0, x1, y0, y1]),
        _ => Err(usage(format!("--range needs finite x0 < x1 and y0 < y1, got '{s}'"))),
    }
}

/// Density on the plane of coordinates `dims`, and how it was obtained.
enum Planar {
    /// Exact bivariate marginal.
    Marginal(GaussianParams),
    /// Full density with the other coordinates held at `base`.
    Slice { model: ClusterModel, base: Vec<f64> },
}

impl Planar {
    fn new(model: &ClusterModel, (i, j): (usize, usize)) -> CliResult<Self> {
        Ok(match model {
            ClusterModel::Gaussian(p) => {
                let idx = [i, j];
                let mean = DVector::from_fn(2, |r, _| p.mean()[idx[r]]);
                let cov = DMatrix::from_fn(2, 2, |r, c| p.covariance()[(idx[r], idx[c])]);
                Planar::Marginal(GaussianParams::new(mean, cov)?)
            }
            ClusterModel::GeneralizedHyperbolic(p) => Planar::Slice {
                model: model.clone(),
                base: p.location().iter().copied().collect(),
            },
        })
    }

    fn method(&self, d: usize) -> &'static str {
        match self {
            Planar::Marginal(_) => "exact-marginal",
            Planar::Slice { .. } if d == 2 => "exact",
            Planar::Slice { .. } => "conditional-slice",
        }
    }

    fn density(&self, x: f64, y: f64, (i, j): (usize, usize)) -> CliResult<f64> {
        let log = match self {
            Planar::Marginal(p) => p.log_density(&[x, y])?,
            Planar::Slice { model, base } => {
                let mut point = base.clone();
                point[i] = x;
                point[j] = y;
                model.log_density(&point)?
            }
        };
        Ok(log.exp())
    }
}

pub(super) fn run(a: GridArgs) -> CliResult<()> {
    let file = ModelFile::read(&a.model)?;
    let comps = file.components()?;
    let d = comps[0].1.dim();
    if d < 2 {
        return Err(usage("a density grid needs a model of dimension 2 or more"));
    }
    let dims = parse_dims(&a.dims, d)?;
    let [x0, x1, y0, y1] = parse_range(&a.range, &comps, dims)?;
    if a.res == 0 {
        return Err(usage("--res must be positive"));
    }
    let (dx, dy) = ((x1 - x0) / a.res as f64, (y1 - y0) / a.res as f64);
    let planes: Vec<Planar> = comps.iter().map(|(_, m)| Planar::new(m, dims)).collect::<CliResult<_>>()?;

    let mut rows = Vec::with_capacity(comps.len() * a.res * a.res);
    for (c, plane) in planes.iter().enumerate() {
        for iy in 0..a.res {
            let y = y0 + (iy as f64 + 0.5) * dy;
            for ix in 0..a.res {
                let x = x0 + (ix as f64 + 0.5) * dx;
                rows.push(vec![
                    format_float(x),
                    format_float(y),
                    (c + 1).to_string(),
                    format_float(plane.density(x, y, dims)?),
                ]);
            }
        }
    }
    write_csv(&a.out, &["x", "y", "component", "density"], &rows)?;

    let methods: Vec<_> = planes
        .iter()
        .enumerate()
        .map(|(c, p)| json!({ "component": c + 1, "method": p.method(d) }))
        .collect();
    let meta = json!({
        "model": a.model.display().to_string(),
        "dims": [dims.0 + 1, dims.1 + 1],
        "range": [x0, x1, y0, y1],
        "res": a.res,
        "cell_area": dx * dy,
        "density": "per component, not weighted by mixing proportion",
        "slice": "conditional-slice fixes the other coordinates at the component location",
        "components": methods,
    });
    let mut meta_path = a.out.clone().into_os_string();
    meta_path.push(".meta.json");
    write_json(std::path::Path::new(&meta_path), &meta)
}
