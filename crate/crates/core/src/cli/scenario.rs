use serde_json::{json, Map, Value};

use super::{create_dir, format_float, resolve_seed, usage, write_csv, write_json, CliResult, ScenarioArgs};
use crate::scenarios::{Estimate, GridPoint, PointResult, Scenario, ScenarioConfig};
use crate::{run_scenario, Measure};

/// Every measure a true-distance table can carry, in output order.
const TRUE_COLUMNS: [Measure; 7] = [
    Measure::Md,
    Measure::Hd,
    Measure::JsdE,
    Measure::Jsd,
    Measure::Wd,
    Measure::Ab,
    Measure::Si,
];

fn parameter_names(s: Scenario) -> &'static [&'static str] {
    match s {
        Scenario::MeanShift => &["mu"],
        Scenario::ScaleShift => &["sigma2"],
        Scenario::SkewRotation => &["d", "angle_deg"],
    }
}

fn parameter_values(p: &GridPoint) -> Vec<f64> {
    match *p {
        GridPoint::Mean(mu) => vec![mu],
        GridPoint::Scale(s2) => vec![s2],
        GridPoint::Skew {
            magnitude,
            angle_index,
        } => vec![magnitude, 22.5 * angle_index as f64],
    }
}

fn estimate_cells(e: Option<&Estimate>) -> [String; 4] {
    match e {
        Some(e) => [
            format_float(e.mean),
            format_float(e.sd),
            format_float(e.std_error),
            e.count.to_string(),
        ],
        None => ["NA".into(), "NA".into(), "NA".into(), "0".into()],
    }
}

fn estimate_json(e: Option<&Estimate>) -> Value {
    match e {
        Some(e) => json!({ "mean": e.mean, "sd": e.sd, "std_error": e.std_error, "n": e.count }),
        None => Value::Null,
    }
}

fn row(index: usize, point: &GridPoint, label: &str, e: Option<&Estimate>) -> Vec<String> {
    let mut r = vec![(index + 1).to_string()];
    r.extend(parameter_values(point).into_iter().map(format_float));
    r.push(label.to_string());
    r.extend(estimate_cells(e));
    r
}

fn find(list: &[crate::scenarios::MeasureEstimate], m: Measure) -> Option<Option<&Estimate>> {
    list.iter().find(|x| x.measure == m).map(|x| x.estimate.as_ref())
}

pub(super) fn run(a: ScenarioArgs) -> CliResult<()> {
    let scenario = Scenario::from_number(a.which).map_err(|e| usage(e.to_string()))?;
    let seed = resolve_seed(a.seed);
    let mut cfg = ScenarioConfig::new(scenario, seed);
    cfg.replications = a.reps;
    cfg.n_per_cluster = a.n;
    cfg.mc_samples = a.mc_n;
    cfg.mc_replicates = a.mc_reps;
    cfg.wd_samples = a.wd_n;
    cfg.wd_power = a.p;
    cfg.si_proportion = a.si_prop;
    cfg.em_restarts = a.restarts;
    cfg.validate().map_err(|e| usage(e.to_string()))?;
    if !(a.p >= 1.0 && a.p.is_finite()) {
        return Err(usage(format!("--p must be >= 1, got {}", a.p)));
    }
    if !(a.si_prop > 0.0 && a.si_prop <= 1.0) {
        return Err(usage(format!("--si-prop must be in (0, 1], got {}", a.si_prop)));
    }
    if a.wd_n == 0 {
        return Err(usage("--wd-n must be positive"));
    }
    let result = run_scenario(&cfg)?;
    create_dir(&a.out)?;

    let mut header = vec!["point"];
    header.extend(parameter_names(scenario));
    header.extend(["measure", "mean", "sd", "std_error", "n"]);

    let mut true_rows = Vec::new();
    for (i, p) in result.points.iter().enumerate() {
        for m in TRUE_COLUMNS {
            true_rows.push(row(i, &p.point, m.label(), find(&p.truth, m).flatten()));
        }
    }
    write_csv(&a.out.join("true.csv"), &header, &true_rows)?;

    if scenario.has_empirical() {
        let mut rows = Vec::new();
        for (i, p) in result.points.iter().enumerate() {
            for &m in scenario.empirical_measures() {
                rows.push(row(i, &p.point, m.label(), find(&p.empirical, m).flatten()));
            }
            rows.push(row(i, &p.point, "ARI", p.ari.as_ref()));
        }
        write_csv(&a.out.join("empirical.csv"), &header, &rows)?;
    }

    let points: Vec<Value> = result
        .points
        .iter()
        .enumerate()
        .map(|(i, p)| point_json(scenario, i, p))
        .collect();
    let summary = json!({
        "scenario": scenario.number(),
        "design": scenario.to_string(),
        "seed": seed,
        "settings": {
            "replications": cfg.replications,
            "n_per_cluster": cfg.n_per_cluster,
            "mc_samples": cfg.mc_samples,
            "mc_replicates": cfg.mc_replicates,
            "wd_samples": cfg.wd_samples,
            "wd_power": cfg.wd_power,
            "si_proportion": cfg.si_proportion,
            "em_restarts": cfg.em_restarts,
        },
        "truth": "true.csv",
        "empirical": if scenario.has_empirical() { json!("empirical.csv") } else { json!("not-applicable") },
        "points": points,
    });
    write_json(&a.out.join("summary.json"), &summary)
}

fn point_json(scenario: Scenario, i: usize, p: &PointResult) -> Value {
    let mut obj = Map::new();
    obj.insert("point".into(), json!(i + 1));
    for (name, v) in parameter_names(scenario).iter().zip(parameter_values(&p.point)) {
        obj.insert((*name).into(), json!(v));
    }
    let mut truth = Map::new();
    for m in TRUE_COLUMNS {
        let v = match find(&p.truth, m) {
            Some(e) => estimate_json(e),
            None => json!("not-applicable"),
        };
        truth.insert(m.label().into(), v);
    }
    obj.insert("truth".into(), Value::Object(truth));
    if scenario.has_empirical() {
        let mut emp = Map::new();
        for &m in scenario.empirical_measures() {
            emp.insert(m.label().into(), estimate_json(find(&p.empirical, m).flatten()));
        }
        obj.insert("empirical".into(), Value::Object(emp));
        obj.insert("ari".into(), estimate_json(p.ari.as_ref()));
        obj.insert("band".into(), p.band.map_or(Value::Null, |b| json!(b.to_string())));
        obj.insert("fit_failures".into(), json!(p.fit_failures));
    } else {
        obj.insert("empirical".into(), json!("not-applicable"));
    }
    Value::Object(obj)
}
