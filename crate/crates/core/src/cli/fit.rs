use super::model_file::{CandidateFit, FitSummary, ModelFile};
use super::table::read_matrix;
use super::{
    create_dir, format_float, format_opt, resolve_seed, usage, write_csv, write_json, CliError, CliResult,
    FitArgs,
};
use crate::mixture::fit_gmm;
use crate::rng::derive_seed;
use crate::{EmConfig, FitResult};

pub(super) fn run(a: FitArgs) -> CliResult<()> {
    if a.kmin == 0 || a.kmax < a.kmin {
        return Err(usage(format!("need 1 <= kmin <= kmax, got {}..{}", a.kmin, a.kmax)));
    }
    if a.restarts == 0 {
        return Err(usage("--restarts must be positive"));
    }
    let (_, data) = read_matrix(&a.data)?;
    let (n, d) = data.shape();
    if n < 2 || n < a.kmax * d {
        return Err(usage(format!(
            "{} rows is too few for K = {} in {d} dimensions (need at least {})",
            n,
            a.kmax,
            (a.kmax * d).max(2)
        )));
    }
    let seed = resolve_seed(a.seed);

    let mut candidates = Vec::new();
    let mut best: Option<FitResult> = None;
    for k in a.kmin..=a.kmax {
        let cfg = EmConfig {
            n_init: a.restarts,
            seed: derive_seed(seed, &[k as u64]),
            ..EmConfig::default()
        };
        match fit_gmm(&data, k, &cfg) {
            Ok(fit) => {
                candidates.push(CandidateFit {
                    k,
                    log_likelihood: Some(fit.log_likelihood),
                    bic: Some(fit.bic),
                    aic: Some(fit.aic),
                    icl: Some(fit.icl),
                    iterations: Some(fit.iterations),
                    converged: Some(fit.converged),
                    error: None,
                });
                // ties keep the smaller K
                if best.as_ref().is_none_or(|b| fit.bic < b.bic) {
                    best = Some(fit);
                }
            }
            Err(e) => candidates.push(CandidateFit {
                k,
                log_likelihood: None,
                bic: None,
                aic: None,
                icl: None,
                iterations: None,
                converged: None,
                error: Some(e.to_string()),
            }),
        }
    }
    let best = best.ok_or_else(|| CliError::Runtime("no K in the range could be fitted".into()))?;
    let k = best.model.k();
    create_dir(&a.out)?;

    let rows: Vec<Vec<String>> = candidates
        .iter()
        .map(|c| {
            vec![
                c.k.to_string(),
                format_opt(c.log_likelihood),
                format_opt(c.bic),
                format_opt(c.aic),
                format_opt(c.icl),
                c.iterations.map_or("NA".into(), |i| i.to_string()),
                c.converged.map_or("NA".into(), |b| b.to_string()),
                (c.k == k).to_string(),
            ]
        })
        .collect();
    write_csv(
        &a.out.join("criteria.csv"),
        &["k", "log_likelihood", "bic", "aic", "icl", "iterations", "converged", "selected"],
        &rows,
    )?;

    let summary = FitSummary {
        k,
        n,
        d,
        log_likelihood: best.log_likelihood,
        bic: best.bic,
        aic: best.aic,
        icl: best.icl,
        iterations: best.iterations,
        converged: best.converged,
        regularized: best.regularized,
        seed,
        restarts: a.restarts,
        selection: "min-bic".into(),
        candidates,
    };
    write_json(&a.out.join("model.json"), &ModelFile::from_mixture(&best.model, Some(summary)))?;

    let rows: Vec<Vec<String>> = best
        .assignments
        .iter()
        .enumerate()
        .map(|(i, &c)| {
            vec![
                (i + 1).to_string(),
                (c + 1).to_string(),
                format_float(best.responsibilities[(i, c)]),
            ]
        })
        .collect();
    write_csv(&a.out.join("assignments.csv"), &["row", "label", "max_resp"], &rows)
}
