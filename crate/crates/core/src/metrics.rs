//! Aggregates over many multiplicative explanations: group contributions,
//! local and global importance, partial dependence and summary-plot data.
//!
//! Every aggregate is a geometric mean, computed in log space with a fixed
//! left-to-right reduction.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::explainers::MultiplicativeExplanation;
use crate::numerics::{geometric_mean, log_mean};
use crate::table::DataTable;

/// Explanations of the rows of `observations`, sharing one baseline.
#[derive(Debug, Clone)]
pub struct ExplanationBatch {
    explanations: Vec<MultiplicativeExplanation>,
    observations: DataTable,
}

impl ExplanationBatch {
    pub fn new(explanations: Vec<MultiplicativeExplanation>, observations: DataTable) -> Result<Self> {
        let first = explanations
            .first()
            .ok_or_else(|| Error::InvalidArgument("explanation batch is empty".into()))?;
        let (m, baseline) = (first.n_features(), first.baseline);
        if observations.n_rows() != explanations.len() {
            return Err(Error::shape(
                format!("{} observation rows", explanations.len()),
                observations.n_rows(),
            ));
        }
        observations.ensure_cols(m)?;
        for (i, e) in explanations.iter().enumerate() {
            if e.n_features() != m {
                return Err(Error::shape(
                    format!("{m} contributions"),
                    format!("{} in explanation {i}", e.n_features()),
                ));
            }
            if (e.baseline - baseline).abs() > 1e-12 * baseline.abs() {
                return Err(Error::InvalidArgument(format!(
                    "explanation {i} has baseline {} but the batch uses {baseline}",
                    e.baseline
                )));
            }
        }
        Ok(Self {
            explanations,
            observations,
        })
    }

    pub fn len(&self) -> usize {
        self.explanations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.explanations.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.observations.n_cols()
    }

    pub fn baseline(&self) -> f64 {
        self.explanations[0].baseline
    }

    pub fn explanations(&self) -> &[MultiplicativeExplanation] {
        &self.explanations
    }

    pub fn observations(&self) -> &DataTable {
        &self.observations
    }

    fn contributions_of(&self, j: usize) -> Vec<f64> {
        self.explanations.iter().map(|e| e.contributions[j]).collect()
    }

    /// `⟨Ŷ⟩×`, the geometric mean of the explained predictions.
    pub fn prediction_geometric_mean(&self) -> Result<f64> {
        let ys: Vec<f64> = self.explanations.iter().map(|e| e.prediction).collect();
        geometric_mean(&ys)
    }
}

/// Labelled subset of batch rows.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupSpec {
    pub label: String,
    pub members: Vec<usize>,
}

impl GroupSpec {
    pub fn new(label: impl Into<String>, members: Vec<usize>) -> Self {
        Self {
            label: label.into(),
            members,
        }
    }

    /// Group of every row in the batch.
    pub fn all(batch: &ExplanationBatch) -> Self {
        Self::new("all", (0..batch.len()).collect())
    }

    fn validate(&self, batch: &ExplanationBatch) -> Result<()> {
        if self.members.is_empty() {
            return Err(Error::InvalidArgument(format!("group {:?} is empty", self.label)));
        }
        let mut seen = vec![false; batch.len()];
        for &i in &self.members {
            if i >= batch.len() {
                return Err(Error::InvalidArgument(format!(
                    "group {:?} refers to row {i} of a batch of {}",
                    self.label,
                    batch.len()
                )));
            }
            if std::mem::replace(&mut seen[i], true) {
                return Err(Error::InvalidArgument(format!(
                    "group {:?} lists row {i} twice",
                    self.label
                )));
            }
        }
        Ok(())
    }
}

/// `ψʲ(G)`: per-feature geometric mean of the members' contributions.
pub fn group_contribution(batch: &ExplanationBatch, group: &GroupSpec) -> Result<Vec<f64>> {
    group.validate(batch)?;
    (0..batch.n_features())
        .map(|j| {
            let v: Vec<f64> = group
                .members
                .iter()
                .map(|&i| batch.explanations[i].contributions[j])
                .collect();
            geometric_mean(&v)
        })
        .collect()
}

/// `Iʲ = max(1/ψʲ, ψʲ)`.
pub fn local_importance(e: &MultiplicativeExplanation) -> Vec<f64> {
    e.contributions.iter().map(|&c| c.max(1.0 / c)).collect()
}

/// Per-feature geometric mean of local importances over the batch.
pub fn global_importance(batch: &ExplanationBatch) -> Result<Vec<f64>> {
    let local: Vec<Vec<f64>> = batch.explanations.iter().map(local_importance).collect();
    (0..batch.n_features())
        .map(|j| {
            let v: Vec<f64> = local.iter().map(|row| row[j]).collect();
            geometric_mean(&v)
        })
        .collect()
}

/// Group importance: global importance restricted to the group's rows.
pub fn group_importance(batch: &ExplanationBatch, group: &GroupSpec) -> Result<Vec<f64>> {
    group.validate(batch)?;
    let subset: Vec<MultiplicativeExplanation> = group
        .members
        .iter()
        .map(|&i| batch.explanations[i].clone())
        .collect();
    let rows = batch.observations.select_rows(&group.members);
    global_importance(&ExplanationBatch::new(subset, rows)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PartialDependenceCurve {
    pub feature: usize,
    /// Ascending bin edges; bin `b` spans `[edges[b], edges[b+1])`, the last
    /// bin also includes its right edge.
    pub edges: Vec<f64>,
    /// `None` for bins holding no observation.
    pub values: Vec<Option<f64>>,
    pub counts: Vec<usize>,
}

impl PartialDependenceCurve {
    pub fn n_bins(&self) -> usize {
        self.counts.len()
    }

    pub fn centers(&self) -> Vec<f64> {
        self.edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }
}

/// `bins` equal-width bins over `[min, max]` of `values`. A constant column
/// gets one bin of unit width centred on its value.
pub fn equal_width_edges(values: &[f64], bins: usize) -> Result<Vec<f64>> {
    if bins == 0 {
        return Err(Error::InvalidArgument("need at least one bin".into()));
    }
    if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("bin edges need finite values".into()));
    }
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if lo == hi {
        return Ok(vec![lo - 0.5, lo + 0.5]);
    }
    let width = (hi - lo) / bins as f64;
    let mut edges: Vec<f64> = (0..bins).map(|b| lo + b as f64 * width).collect();
    edges.push(hi);
    Ok(edges)
}

/// Bin index of `v`, or `None` when it lies outside the edges.
fn bin_of(edges: &[f64], v: f64) -> Option<usize> {
    let last = edges.len() - 2;
    if v < edges[0] || v > edges[last + 1] {
        return None;
    }
    let upper = edges.partition_point(|&e| e <= v);
    Some((upper.max(1) - 1).min(last))
}

/// Partial dependence of feature `j` over the given bins:
/// `PD(b) = ⟨ψʲ in b⟩× / ⟨ψʲ⟩× · ⟨Ŷ⟩×`.
pub fn partial_dependence(batch: &ExplanationBatch, j: usize, edges: &[f64]) -> Result<PartialDependenceCurve> {
    if j >= batch.n_features() {
        return Err(Error::InvalidArgument(format!(
            "feature {j} out of range for {} features",
            batch.n_features()
        )));
    }
    if edges.len() < 2 || edges.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidArgument("bin edges must be strictly increasing".into()));
    }
    let n_bins = edges.len() - 1;
    let mut members: Vec<Vec<f64>> = vec![Vec::new(); n_bins];
    for (i, e) in batch.explanations.iter().enumerate() {
        let v = batch.observations.get(i, j);
        let b = bin_of(edges, v).ok_or_else(|| {
            Error::InvalidArgument(format!(
                "value {v} of feature {j} lies outside the bin edges [{}, {}]",
                edges[0],
                edges[n_bins]
            ))
        })?;
        members[b].push(e.contributions[j]);
    }
    if members.iter().all(Vec::is_empty) {
        return Err(Error::InvalidArgument("every bin is empty".into()));
    }

    let log_overall = log_mean(&batch.contributions_of(j))?;
    let log_pred = log_mean(&batch.explanations.iter().map(|e| e.prediction).collect::<Vec<_>>())?;
    let values = members
        .iter()
        .map(|bin| {
            if bin.is_empty() {
                Ok(None)
            } else {
                log_mean(bin).map(|l| Some((l - log_overall + log_pred).exp()))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PartialDependenceCurve {
        feature: j,
        edges: edges.to_vec(),
        values,
        counts: members.iter().map(Vec::len).collect(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSummary {
    pub feature: usize,
    pub name: String,
    pub importance: f64,
    /// `(feature value, contribution)` in batch order.
    pub points: Vec<(f64, f64)>,
}

/// Per-feature `(value, contribution)` pairs ordered by descending global
/// importance (ties by feature index). With `trim = Some(q)`, points whose
/// contribution falls outside the `[q, 1-q]` quantiles of that feature are
/// left out of the pairs; importances always use every observation.
pub fn summary_data(batch: &ExplanationBatch, trim: Option<f64>) -> Result<Vec<FeatureSummary>> {
    if let Some(q) = trim {
        if !(0.0..0.5).contains(&q) {
            return Err(Error::InvalidArgument(format!("trim quantile {q} not in [0, 0.5)")));
        }
    }
    let importance = global_importance(batch)?;
    let mut out: Vec<FeatureSummary> = (0..batch.n_features())
        .map(|j| {
            let contributions = batch.contributions_of(j);
            let (lo, hi) = match trim {
                Some(q) => (quantile(&contributions, q), quantile(&contributions, 1.0 - q)),
                None => (f64::NEG_INFINITY, f64::INFINITY),
            };
            let points = contributions
                .iter()
                .enumerate()
                .filter(|(_, &c)| c >= lo && c <= hi)
                .map(|(i, &c)| (batch.observations.get(i, j), c))
                .collect();
            FeatureSummary {
                feature: j,
                name: batch.observations.names()[j].clone(),
                importance: importance[j],
                points,
            }
        })
        .collect();
    out.sort_by(|a, b| {
        b.importance
            .partial_cmp(&a.importance)
            .unwrap_or(Ordering::Equal)
            .then(a.feature.cmp(&b.feature))
    });
    Ok(out)
}

/// Linear-interpolation quantile.
fn quantile(values: &[f64], q: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = q * (v.len() - 1) as f64;
    let (i, frac) = (pos.floor() as usize, pos.fract());
    if i + 1 < v.len() {
        v[i] + frac * (v[i + 1] - v[i])
    } else {
        v[i]
    }
}
