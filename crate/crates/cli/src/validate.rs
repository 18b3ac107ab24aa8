//! Numerical self-checks of a configured run.

use rayon::prelude::*;
use serde::Serialize;
use xshap_core::coalitions::proper_coalition_count;
use xshap_core::numerics::arithmetic_mean;
use xshap_core::{
    exact_additive_shapley, exact_multiplicative_shapley, glm_closed_form_contributions, x_shap_explain,
};

use crate::config::{Format, RunConfig};
use crate::error::{CliError, Result};
use crate::output::{json, CsvTable};
use crate::pipeline::{prepare, Prepared};

pub const LOCAL_ACCURACY_TOL: f64 = 1e-10;
pub const CONVERGENCE_TOL: f64 = 1e-2;
pub const CONVERGENCE_BUDGET: usize = 500;
pub const ORACLE_TOL: f64 = 1e-8;
pub const ORACLE_MAX_FEATURES: usize = 10;
pub const GLM_CONTRIBUTION_TOL: f64 = 1e-6;
pub const GLM_BASELINE_TOL: f64 = 1e-8;
/// Rows used by the convergence and oracle checks.
pub const CHECK_ROWS: usize = 10;
const CONVERGENCE_GRID: [usize; 7] = [50, 100, 200, 500, 1000, 1500, 2000];

#[derive(Debug, Serialize)]
pub struct ValidateReport {
    pub model: String,
    pub n_features: usize,
    pub n_rows: usize,
    pub local_accuracy: LocalAccuracy,
    /// Multiplicative factors only.
    pub convergence: Option<Convergence>,
    pub oracle: Option<OracleCheck>,
    pub glm: Option<GlmCheck>,
    pub checks: Vec<Check>,
    pub pass: bool,
}

/// Absolute percentage error of the reconstructed prediction.
#[derive(Debug, Serialize)]
pub struct ErrorStats {
    pub mean: f64,
    pub median: f64,
    pub std: f64,
    pub max: f64,
}

#[derive(Debug, Serialize)]
pub struct LocalAccuracy {
    pub multiplicative: Option<ErrorStats>,
    pub additive: Option<ErrorStats>,
}

#[derive(Debug, Serialize)]
pub struct Convergence {
    pub rows: Vec<usize>,
    pub budgets: Vec<usize>,
    /// Largest relative factor change against the final budget; `null`
    /// where the budget is too small to identify every factor.
    pub max_relative_change: Vec<Option<f64>>,
}

#[derive(Debug, Serialize)]
pub struct OracleCheck {
    pub rows: Vec<usize>,
    pub multiplicative_max_relative_error: Option<f64>,
    pub additive_max_relative_error: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct GlmCheck {
    pub max_contribution_relative_error: f64,
    pub baseline_relative_error: f64,
}

#[derive(Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
}

/// Report and whether every check passed.
pub fn cmd_validate(cfg: &RunConfig) -> Result<(String, bool)> {
    let prepared = prepare(cfg)?;
    let report = build_report(cfg, &prepared)?;
    let pass = report.pass;
    let text = match cfg.format {
        Format::Json => json(&report),
        Format::Csv => {
            let mut t = CsvTable::new(&["check", "value", "threshold", "pass"]);
            for c in &report.checks {
                t.push(vec![c.name.clone(), c.value.to_string(), c.threshold.to_string(), c.pass.to_string()]);
            }
            t.finish()
        }
    };
    Ok((text, pass))
}

pub fn build_report(cfg: &RunConfig, prepared: &Prepared) -> Result<ValidateReport> {
    let rows = prepared.selected_rows(cfg.rows)?;
    let m = prepared.n_features();
    let mut checks = Vec::new();
    let mut check = |name: &str, value: f64, threshold: f64| {
        checks.push(Check {
            name: name.to_string(),
            value,
            threshold,
            pass: value <= threshold,
        });
    };

    let plan = prepared.plan(cfg.coalitions)?;
    let explained = prepared.explain_rows(&rows, &plan, cfg.mode.multiplicative(), cfg.mode.additive())?;
    let mult_ape: Vec<f64> = explained
        .iter()
        .filter_map(|r| r.multiplicative.as_ref())
        .map(|e| ((e.reconstruction() - e.prediction) / e.prediction).abs())
        .collect();
    let add_ape: Vec<f64> = explained
        .iter()
        .filter_map(|r| r.additive.as_ref())
        .map(|e| ((e.reconstruction() - e.prediction) / e.prediction).abs())
        .collect();
    let local_accuracy = LocalAccuracy {
        multiplicative: stats(&mult_ape)?,
        additive: stats(&add_ape)?,
    };
    for (name, s) in [
        ("local_accuracy_multiplicative", &local_accuracy.multiplicative),
        ("local_accuracy_additive", &local_accuracy.additive),
    ] {
        if let Some(s) = s {
            check(&format!("{name}_mean"), s.mean, LOCAL_ACCURACY_TOL);
            check(&format!("{name}_max"), s.max, LOCAL_ACCURACY_TOL);
        }
    }

    let check_rows: Vec<usize> = rows.iter().copied().take(CHECK_ROWS).collect();
    let convergence = if cfg.mode.multiplicative() {
        let convergence = convergence_curve(prepared, &check_rows, cfg.coalitions)?;
        let target = convergence
            .budgets
            .iter()
            .position(|&k| k >= CONVERGENCE_BUDGET)
            .unwrap_or(convergence.budgets.len() - 1);
        let value = convergence.max_relative_change[target].unwrap_or(f64::INFINITY);
        check("convergence", value, CONVERGENCE_TOL);
        Some(convergence)
    } else {
        None
    };

    let oracle = if m <= ORACLE_MAX_FEATURES {
        let o = oracle_check(prepared, &check_rows, cfg.mode.multiplicative(), cfg.mode.additive())?;
        if let Some(v) = o.multiplicative_max_relative_error {
            check("oracle_multiplicative", v, ORACLE_TOL);
        }
        if let Some(v) = o.additive_max_relative_error {
            check("oracle_additive", v, ORACLE_TOL);
        }
        Some(o)
    } else {
        None
    };

    let glm = match (&prepared.glm, cfg.mode.multiplicative()) {
        (Some(g), true) => {
            let mut worst = 0.0f64;
            let mut baseline_err = 0.0f64;
            for r in explained.iter() {
                let Some(e) = &r.multiplicative else { continue };
                let closed = glm_closed_form_contributions(g, &r.x, prepared.reference.table())?;
                for (a, b) in e.contributions.iter().zip(&closed.contributions) {
                    worst = worst.max(((a - b) / b).abs());
                }
                baseline_err = baseline_err.max(((e.baseline - closed.baseline) / closed.baseline).abs());
            }
            check("glm_closed_form", worst, GLM_CONTRIBUTION_TOL);
            check("glm_baseline", baseline_err, GLM_BASELINE_TOL);
            Some(GlmCheck {
                max_contribution_relative_error: worst,
                baseline_relative_error: baseline_err,
            })
        }
        _ => None,
    };

    let pass = checks.iter().all(|c| c.pass);
    Ok(ValidateReport {
        model: format!("{:?}", cfg.model).to_lowercase(),
        n_features: m,
        n_rows: rows.len(),
        local_accuracy,
        convergence,
        oracle,
        glm,
        checks,
        pass,
    })
}

fn stats(v: &[f64]) -> Result<Option<ErrorStats>> {
    if v.is_empty() {
        return Ok(None);
    }
    let mean = arithmetic_mean(v)?;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / v.len() as f64;
    let mut sorted = v.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let median = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    };
    Ok(Some(ErrorStats {
        mean,
        median,
        std: var.sqrt(),
        max: sorted[n - 1],
    }))
}

/// Budgets of the grid up to the endpoint `min(max(K, 2000), 2^m - 2)`,
/// each compared against the endpoint.
fn convergence_curve(prepared: &Prepared, rows: &[usize], budget: usize) -> Result<Convergence> {
    let m = prepared.n_features();
    let full = proper_coalition_count(m).unwrap_or(usize::MAX).max(2);
    let end = budget.max(*CONVERGENCE_GRID.last().unwrap()).min(full);
    let mut budgets: Vec<usize> = CONVERGENCE_GRID.iter().copied().filter(|&k| k < end).collect();
    budgets.push(end);

    let final_plan = prepared.plan(end)?;
    let reference = prepared.explain_rows(rows, &final_plan, true, false)?;
    let max_relative_change = budgets
        .iter()
        .map(|&k| -> Result<Option<f64>> {
            let plan = prepared.plan(k)?;
            let estimates = prepared.pool.install(|| {
                reference
                    .par_iter()
                    .map(|r| x_shap_explain(&prepared.model, &r.x, &prepared.reference, &plan))
                    .collect::<std::result::Result<Vec<_>, _>>()
            });
            let estimates = match estimates {
                Ok(e) => e,
                Err(xshap_core::Error::Explanation(_)) => return Ok(None),
                Err(other) => return Err(other.into()),
            };
            let mut worst = 0.0f64;
            for (e, r) in estimates.iter().zip(&reference) {
                let e_end = r.multiplicative.as_ref().expect("multiplicative requested");
                for (a, b) in e.contributions.iter().zip(&e_end.contributions) {
                    worst = worst.max(((a - b) / b).abs());
                }
            }
            Ok(Some(worst))
        })
        .collect::<Result<_>>()?;
    Ok(Convergence {
        rows: rows.to_vec(),
        budgets,
        max_relative_change,
    })
}

/// Full-budget estimator against brute-force enumeration. Additive errors
/// are relative to the largest exact term of the row.
fn oracle_check(prepared: &Prepared, rows: &[usize], multiplicative: bool, additive: bool) -> Result<OracleCheck> {
    let m = prepared.n_features();
    let full = proper_coalition_count(m)
        .ok_or_else(|| CliError::Config(format!("{m} features is too many for the oracle")))?;
    let plan = prepared.plan(full.max(2))?;
    let explained = prepared.explain_rows(rows, &plan, multiplicative, additive)?;
    let mut mult_err: Option<f64> = None;
    let mut add_err: Option<f64> = None;
    for r in &explained {
        if let Some(e) = &r.multiplicative {
            let exact = exact_multiplicative_shapley(&prepared.model, &r.x, &prepared.reference)?;
            for (a, b) in e.contributions.iter().zip(&exact.contributions) {
                let err = ((a - b) / b).abs();
                mult_err = Some(mult_err.map_or(err, |w| w.max(err)));
            }
        }
        if let Some(e) = &r.additive {
            let exact = exact_additive_shapley(&prepared.model, &r.x, &prepared.reference)?;
            let scale = exact
                .contributions
                .iter()
                .fold(f64::MIN_POSITIVE, |s, c| s.max(c.abs()));
            for (a, b) in e.contributions.iter().zip(&exact.contributions) {
                let err = (a - b).abs() / b.abs().max(scale);
                add_err = Some(add_err.map_or(err, |w| w.max(err)));
            }
        }
    }
    Ok(OracleCheck {
        rows: rows.to_vec(),
        multiplicative_max_relative_error: mult_err,
        additive_max_relative_error: add_err,
    })
}
