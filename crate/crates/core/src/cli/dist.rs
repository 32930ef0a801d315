use serde::Serialize;

use super::model_file::{FitSummary, ModelFile};
use super::table::{read_labels, read_matrix};
use super::{create_dir, format_opt, resolve_seed, usage, write_csv, write_json, CliResult, DistArgs};
use crate::divergences::{mahalanobis, overlap_measures};
use crate::indices::{adjusted_rand, average_between, separation_index};
use crate::mixture::map_assign;
use crate::rng::derive_seed;
use crate::transport::wasserstein_between_models;
use crate::{ClusterModel, EstimatorSettings, LabeledDataset, Measure};

#[derive(Serialize)]
struct Settings {
    mc_samples: usize,
    mc_replicates: usize,
    wd_samples: usize,
    wd_power: f64,
    si_proportion: f64,
    seed: u64,
    ab_si_scaling: &'static str,
}

#[derive(Serialize)]
struct MeasureValue {
    measure: Measure,
    value: Option<f64>,
    std_error: Option<f64>,
}

#[derive(Serialize)]
struct Pair {
    pair: String,
    clusters: [usize; 2],
    measures: Vec<MeasureValue>,
}

#[derive(Serialize)]
struct Report {
    model: String,
    k: usize,
    settings: Settings,
    fit: Option<FitSummary>,
    ari_vs_labels: Option<f64>,
    pairs: Vec<Pair>,
}

pub(super) fn run(a: DistArgs) -> CliResult<()> {
    let file = ModelFile::read(&a.model)?;
    let comps = file.components()?;
    let mixture = file.gaussian_mixture()?;
    if a.mc_n == 0 || a.mc_reps == 0 || a.wd_n == 0 {
        return Err(usage("--mc-n, --mc-reps and --wd-n must be positive"));
    }
    if !(a.p >= 1.0 && a.p.is_finite()) {
        return Err(usage(format!("--p must be >= 1, got {}", a.p)));
    }
    if !(a.si_prop > 0.0 && a.si_prop <= 1.0) {
        return Err(usage(format!("--si-prop must be in (0, 1], got {}", a.si_prop)));
    }
    let k = comps.len();
    let d = comps[0].1.dim();

    let data = match (&a.data, &a.labels) {
        (Some(data), Some(labels)) => {
            let (_, x) = read_matrix(data)?;
            let labels = read_labels(labels)?;
            if x.ncols() != d {
                return Err(usage(format!("data has {} columns, model has dimension {d}", x.ncols())));
            }
            if labels.len() != x.nrows() {
                return Err(usage(format!("{} labels for {} data rows", labels.len(), x.nrows())));
            }
            if let Some(&bad) = labels.iter().find(|&&l| l > k) {
                return Err(usage(format!("label {bad} but the model has {k} components")));
            }
            Some(LabeledDataset::new(x, labels).map_err(|e| usage(e.to_string()))?)
        }
        (None, None) => None,
        _ => return Err(usage("AB and SI need both --data and --labels")),
    };
    let seed = resolve_seed(a.seed);

    let scaled = data
        .as_ref()
        .map(|ds| ds.scaled().map_err(|e| usage(format!("cannot scale data: {e}"))))
        .transpose()?;
    let ari_vs_labels = match (&mixture, &data) {
        (Some(m), Some(ds)) => {
            let (assigned, _) = map_assign(m, ds.data())?;
            let truth: Vec<usize> = ds.labels().iter().map(|l| l - 1).collect();
            Some(adjusted_rand(&assigned, &truth)?)
        }
        _ => None,
    };

    let mut pairs = Vec::new();
    for i in 0..k {
        for j in i + 1..k {
            pairs.push(pair(&a, seed, &comps, i, j, mixture.is_some(), scaled.as_ref())?);
        }
    }

    let report = Report {
        model: a.model.display().to_string(),
        k,
        settings: Settings {
            mc_samples: a.mc_n,
            mc_replicates: a.mc_reps,
            wd_samples: a.wd_n,
            wd_power: a.p,
            si_proportion: a.si_prop,
            seed,
            ab_si_scaling: "columns standardized to unit variance",
        },
        fit: file.fit.clone(),
        ari_vs_labels,
        pairs,
    };
    create_dir(&a.out)?;
    write_json(&a.out.join("distances.json"), &report)?;
    let rows: Vec<Vec<String>> = report
        .pairs
        .iter()
        .flat_map(|p| {
            p.measures.iter().map(|m| {
                vec![p.pair.clone(), m.measure.label().to_string(), format_opt(m.value), format_opt(m.std_error)]
            })
        })
        .collect();
    write_csv(&a.out.join("distances.csv"), &["pair", "measure", "value", "stderr"], &rows)
}

fn pair(
    a: &DistArgs,
    seed: u64,
    comps: &[(f64, ClusterModel)],
    i: usize,
    j: usize,
    all_gaussian: bool,
    scaled: Option<&LabeledDataset>,
) -> CliResult<Pair> {
    let (wi, f) = &comps[i];
    let (wj, g) = &comps[j];
    let path = |tag: u64| derive_seed(seed, &[i as u64, j as u64, tag]);
    let mut measures = Vec::new();
    let exact = |measure, value: Option<f64>| MeasureValue {
        measure,
        value,
        std_error: value.map(|_| 0.0),
    };
    if let (true, Some(p), Some(q)) = (all_gaussian, f.as_gaussian(), g.as_gaussian()) {
        measures.push(exact(Measure::Md, Some(mahalanobis(p, q, (*wi, *wj))?.value)));
    }
    let overlap = overlap_measures(f, g, &EstimatorSettings::new(a.mc_n, path(0), a.mc_reps))?;
    for v in [overlap.affinity, overlap.hellinger, overlap.extended_js] {
        measures.push(MeasureValue {
            measure: v.measure,
            value: Some(v.value),
            std_error: Some(v.std_error),
        });
    }
    let wd = wasserstein_between_models(f, g, a.wd_n, a.p, path(1))?;
    measures.push(MeasureValue {
        measure: Measure::Wd,
        value: Some(wd),
        std_error: None,
    });
    if let Some(ds) = scaled {
        // a component without labelled points leaves AB and SI undefined
        measures.push(exact(Measure::Ab, average_between(ds, i + 1, j + 1).ok()));
        measures.push(exact(Measure::Si, separation_index(ds, i + 1, j + 1, a.si_prop).ok()));
    }
    Ok(Pair {
        pair: format!("{}-{}", i + 1, j + 1),
        clusters: [i + 1, j + 1],
        measures,
    })
}
