use serde::Serialize;
use xshap_core::metrics::{
    equal_width_edges, global_importance, group_contribution, group_importance, partial_dependence, summary_data,
};
use xshap_core::numerics::log_mean;
use xshap_core::{DataTable, ExplanationBatch, GroupSpec, Predictor};

use crate::config::{Format, RunConfig};
use crate::error::{CliError, Result};
use crate::output::{json, CsvTable};
use crate::pipeline::prepare;

#[derive(Debug, Serialize)]
pub struct MetricsReport {
    pub baseline: f64,
    pub prediction_geometric_mean: f64,
    pub n_rows: usize,
    /// Descending global importance.
    pub importance: Vec<ImportanceRecord>,
    pub summary: Vec<SummaryRecord>,
    pub partial_dependence: Option<PdRecord>,
    pub groups: Vec<GroupRecord>,
}

#[derive(Debug, Serialize)]
pub struct ImportanceRecord {
    pub name: String,
    pub importance: f64,
}

#[derive(Debug, Serialize)]
pub struct SummaryRecord {
    pub name: String,
    pub importance: f64,
    /// `[feature value, contribution]` per explained row.
    pub points: Vec<[f64; 2]>,
}

#[derive(Debug, Serialize)]
pub struct PdRecord {
    pub feature: String,
    pub edges: Vec<f64>,
    pub centers: Vec<f64>,
    pub counts: Vec<usize>,
    /// Contribution-based curve; `null` for empty bins.
    pub values: Vec<Option<f64>>,
    /// Geometric mean of predictions with the feature set to each bin
    /// centre, over the explained rows.
    pub classical: Vec<f64>,
}

#[derive(Debug, Serialize)]
pub struct GroupRecord {
    pub label: String,
    pub size: usize,
    /// `null` when no row matches.
    pub prediction_geometric_mean: Option<f64>,
    /// `ψ⁰ · Π ψʲ(G)`.
    pub reconstruction: Option<f64>,
    pub features: Vec<GroupFeature>,
}

#[derive(Debug, Serialize)]
pub struct GroupFeature {
    pub name: String,
    pub contribution: f64,
    pub importance: f64,
}

pub fn cmd_metrics(cfg: &RunConfig) -> Result<String> {
    if !cfg.mode.multiplicative() {
        return Err(CliError::Config("metrics are computed from multiplicative contributions".into()));
    }
    let prepared = prepare(cfg)?;
    let names = prepared.feature_names().to_vec();
    let pd_feature = cfg
        .pd_feature
        .as_deref()
        .map(|f| {
            names
                .iter()
                .position(|n| n == f)
                .ok_or_else(|| CliError::Config(format!("unknown --pd-feature {f:?}")))
        })
        .transpose()?;

    let rows = prepared.selected_rows(cfg.rows)?;
    let plan = prepared.plan(cfg.coalitions)?;
    let explained = prepared.explain_rows(&rows, &plan, true, false)?;
    let observations = prepared.encoded.features.select_rows(&rows);
    let batch = ExplanationBatch::new(
        explained.into_iter().filter_map(|r| r.multiplicative).collect(),
        observations,
    )?;

    let mut groups = vec![("all".to_string(), (0..batch.len()).collect::<Vec<_>>())];
    for f in &cfg.filters {
        groups.push((f.to_string(), f.select(batch.observations())?));
    }
    let report = build_report(&batch, &names, pd_feature, cfg.pd_bins, &groups, &prepared.model)?;
    Ok(match cfg.format {
        Format::Json => json(&report),
        Format::Csv => importance_csv(&report),
    })
}

pub fn build_report<P: Predictor + ?Sized>(
    batch: &ExplanationBatch,
    names: &[String],
    pd_feature: Option<usize>,
    pd_bins: usize,
    groups: &[(String, Vec<usize>)],
    model: &P,
) -> Result<MetricsReport> {
    let importance = global_importance(batch)?;
    let mut order: Vec<usize> = (0..names.len()).collect();
    order.sort_by(|&a, &b| importance[b].total_cmp(&importance[a]).then(a.cmp(&b)));

    let summary = summary_data(batch, None)?
        .into_iter()
        .map(|s| SummaryRecord {
            name: s.name,
            importance: s.importance,
            points: s.points.iter().map(|&(v, c)| [v, c]).collect(),
        })
        .collect();

    let partial = pd_feature
        .map(|j| -> Result<PdRecord> {
            let values = batch.observations().column(j);
            let edges = equal_width_edges(&values, pd_bins)?;
            let curve = partial_dependence(batch, j, &edges)?;
            let centers = curve.centers();
            let classical = centers
                .iter()
                .map(|&c| classical_pd(model, batch.observations(), j, c))
                .collect::<Result<_>>()?;
            Ok(PdRecord {
                feature: names[j].clone(),
                edges: curve.edges,
                centers,
                counts: curve.counts,
                values: curve.values,
                classical,
            })
        })
        .transpose()?;

    let groups = groups
        .iter()
        .map(|(label, members)| group_record(batch, names, label, members))
        .collect::<Result<_>>()?;

    Ok(MetricsReport {
        baseline: batch.baseline(),
        prediction_geometric_mean: batch.prediction_geometric_mean()?,
        n_rows: batch.len(),
        importance: order
            .iter()
            .map(|&j| ImportanceRecord {
                name: names[j].clone(),
                importance: importance[j],
            })
            .collect(),
        summary,
        partial_dependence: partial,
        groups,
    })
}

fn group_record(batch: &ExplanationBatch, names: &[String], label: &str, members: &[usize]) -> Result<GroupRecord> {
    if members.is_empty() {
        return Ok(GroupRecord {
            label: label.to_string(),
            size: 0,
            prediction_geometric_mean: None,
            reconstruction: None,
            features: Vec::new(),
        });
    }
    let spec = GroupSpec::new(label, members.to_vec());
    let contributions = group_contribution(batch, &spec)?;
    let importance = group_importance(batch, &spec)?;
    let predictions: Vec<f64> = members.iter().map(|&i| batch.explanations()[i].prediction).collect();
    let log_product: f64 = contributions.iter().map(|c| c.ln()).sum();
    Ok(GroupRecord {
        label: label.to_string(),
        size: members.len(),
        prediction_geometric_mean: Some(log_mean(&predictions)?.exp()),
        reconstruction: Some((batch.baseline().ln() + log_product).exp()),
        features: names
            .iter()
            .zip(contributions.iter().zip(&importance))
            .map(|(name, (&c, &i))| GroupFeature {
                name: name.clone(),
                contribution: c,
                importance: i,
            })
            .collect(),
    })
}

fn classical_pd<P: Predictor + ?Sized>(model: &P, rows: &DataTable, j: usize, value: f64) -> Result<f64> {
    let m = rows.n_cols();
    let mut values = rows.as_slice().to_vec();
    for i in 0..rows.n_rows() {
        values[i * m + j] = value;
    }
    let table = DataTable::new(rows.names().to_vec(), rows.n_rows(), values)?;
    Ok(log_mean(&model.predict(&table)?)?.exp())
}

fn importance_csv(report: &MetricsReport) -> String {
    let mut t = CsvTable::new(&["feature", "importance"]);
    for r in &report.importance {
        t.push(vec![r.name.clone(), r.importance.to_string()]);
    }
    t.finish()
}
