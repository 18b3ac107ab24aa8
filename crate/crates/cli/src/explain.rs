use serde::Serialize;
use xshap_core::numerics::log_mean;

use crate::config::{ExplainMode, Format, RunConfig};
use crate::error::Result;
use crate::output::{json, CsvTable};
use crate::pipeline::{prepare, RowExplanation};

#[derive(Debug, Serialize)]
pub struct ExplainReport {
    /// `ψ⁰` in multiplicative and both modes, `φ⁰` in additive mode.
    pub baseline: f64,
    pub mode: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub additive_baseline: Option<f64>,
    /// `⟨Ŷ⟩×` over the explained rows.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prediction_geometric_mean: Option<f64>,
    pub rows: Vec<RowRecord>,
}

#[derive(Debug, Serialize)]
pub struct RowRecord {
    pub index: usize,
    pub prediction: f64,
    pub features: Vec<FeatureRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub additive: Option<AdditiveBlock>,
}

#[derive(Debug, Serialize)]
pub struct AdditiveBlock {
    pub baseline: f64,
    pub features: Vec<FeatureRecord>,
}

#[derive(Debug, Serialize)]
pub struct FeatureRecord {
    pub name: String,
    pub value: f64,
    pub contribution: f64,
    /// `max(ψ, 1/ψ)` for factors, `|φ|` for additive terms.
    pub importance: f64,
}

pub fn cmd_explain(cfg: &RunConfig) -> Result<String> {
    let prepared = prepare(cfg)?;
    let rows = prepared.selected_rows(cfg.rows)?;
    let plan = prepared.plan(cfg.coalitions)?;
    let explained = prepared.explain_rows(&rows, &plan, cfg.mode.multiplicative(), cfg.mode.additive())?;
    let report = build_report(cfg.mode, prepared.feature_names(), &explained)?;
    Ok(match cfg.format {
        Format::Json => json(&report),
        Format::Csv => explain_csv(&report),
    })
}

pub fn build_report(mode: ExplainMode, names: &[String], explained: &[RowExplanation]) -> Result<ExplainReport> {
    let records = |x: &[f64], contributions: &[f64], importance: fn(f64) -> f64| {
        names
            .iter()
            .zip(x.iter().zip(contributions))
            .map(|(name, (&value, &c))| FeatureRecord {
                name: name.clone(),
                value,
                contribution: c,
                importance: importance(c),
            })
            .collect::<Vec<_>>()
    };
    let factor_importance: fn(f64) -> f64 = |c| c.max(1.0 / c);
    let term_importance: fn(f64) -> f64 = f64::abs;

    let rows = explained
        .iter()
        .map(|r| {
            let additive = r.additive.as_ref().map(|a| AdditiveBlock {
                baseline: a.baseline,
                features: records(&r.x, &a.contributions, term_importance),
            });
            match &r.multiplicative {
                Some(e) => RowRecord {
                    index: r.index,
                    prediction: e.prediction,
                    features: records(&r.x, &e.contributions, factor_importance),
                    additive: additive.filter(|_| mode == ExplainMode::Both),
                },
                None => {
                    let block = additive.expect("additive explanation present");
                    RowRecord {
                        index: r.index,
                        prediction: r.additive.as_ref().map_or(f64::NAN, |a| a.prediction),
                        features: block.features,
                        additive: None,
                    }
                }
            }
        })
        .collect();

    let first = explained.first();
    let additive_baseline = first.and_then(|r| r.additive.as_ref()).map(|a| a.baseline);
    let (baseline, geo) = match first.and_then(|r| r.multiplicative.as_ref()) {
        Some(e) => {
            let predictions: Vec<f64> = explained
                .iter()
                .filter_map(|r| r.multiplicative.as_ref().map(|m| m.prediction))
                .collect();
            (e.baseline, Some(log_mean(&predictions)?.exp()))
        }
        None => (additive_baseline.unwrap_or(f64::NAN), None),
    };
    Ok(ExplainReport {
        baseline,
        mode: mode.as_str(),
        additive_baseline: additive_baseline.filter(|_| mode == ExplainMode::Both),
        prediction_geometric_mean: geo,
        rows,
    })
}

/// One line per (row, feature, kind).
fn explain_csv(report: &ExplainReport) -> String {
    let mut t = CsvTable::new(&["index", "kind", "prediction", "baseline", "feature", "value", "contribution", "importance"]);
    let main_kind = if report.mode == "additive" { "additive" } else { "multiplicative" };
    for r in &report.rows {
        let mut emit = |kind: &str, baseline: f64, features: &[FeatureRecord]| {
            for f in features {
                t.push(vec![
                    r.index.to_string(),
                    kind.to_string(),
                    r.prediction.to_string(),
                    baseline.to_string(),
                    f.name.clone(),
                    f.value.to_string(),
                    f.contribution.to_string(),
                    f.importance.to_string(),
                ]);
            }
        };
        emit(main_kind, report.baseline, &r.features);
        if let Some(a) = &r.additive {
            emit("additive", a.baseline, &a.features);
        }
    }
    t.finish()
}
