//! Shared run orchestration for explain, metrics and validate.

use rayon::prelude::*;
use xshap_core::{
    enumerate_coalitions, fit_gbt, fit_log_glm, kernel_shap_explain, x_shap_explain, AdditiveExplanation,
    CoalitionPlan, DataTable, ExternalModel, GbtParams, LogGlm, Mode, MultiplicativeExplanation, Predictor,
    ReferenceSet,
};

use crate::config::{ModelKind, RunConfig};
use crate::data::{load_csv, Encoded};
use crate::error::{CliError, Result};
use crate::split::{split_and_sample, Split};

/// Everything needed to explain rows of the test set.
pub struct Prepared {
    pub encoded: Encoded,
    pub split: Split,
    pub model: Box<dyn Predictor>,
    /// Set when the model is an in-process log-GLM.
    pub glm: Option<LogGlm>,
    pub reference: ReferenceSet,
    pub pool: rayon::ThreadPool,
}

/// Explanations of one test row.
#[derive(Debug, Clone)]
pub struct RowExplanation {
    /// Row index in the source file.
    pub index: usize,
    pub x: Vec<f64>,
    pub multiplicative: Option<MultiplicativeExplanation>,
    pub additive: Option<AdditiveExplanation>,
}

pub fn prepare(cfg: &RunConfig) -> Result<Prepared> {
    let file = load_csv(&cfg.data)?;
    let encoded = file.encode(&cfg.target)?;
    let features = &encoded.features;
    if features.n_cols() == 0 {
        return Err(CliError::Data("no feature columns besides the target".into()));
    }
    let split = split_and_sample(features.n_rows(), cfg.split, cfg.ref_size, cfg.seed)?;

    let (model, glm): (Box<dyn Predictor>, Option<LogGlm>) = match cfg.model {
        ModelKind::Glm => {
            let (x, y) = training_data(&encoded, &split)?;
            let g = fit_log_glm(&x, &y).map_err(model_error)?;
            (Box::new(g.clone()), Some(g))
        }
        ModelKind::Gbt => {
            let (x, y) = training_data(&encoded, &split)?;
            let params = GbtParams {
                n_trees: cfg.trees,
                max_depth: cfg.depth,
                learning_rate: cfg.learning_rate,
            };
            (Box::new(fit_gbt(&x, &y, params).map_err(model_error)?), None)
        }
        ModelKind::Extern => {
            let cmd = cfg.extern_cmd.as_deref().unwrap_or_default();
            let mode = if cfg.mode.multiplicative() {
                Mode::Multiplicative
            } else {
                Mode::Additive
            };
            (Box::new(ExternalModel::spawn(cmd, features.n_cols(), mode)?), None)
        }
    };

    let reference = ReferenceSet::new(&model, features.select_rows(&split.reference))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    Ok(Prepared {
        encoded,
        split,
        model,
        glm,
        reference,
        pool,
    })
}

fn training_data(encoded: &Encoded, split: &Split) -> Result<(DataTable, Vec<f64>)> {
    let x = encoded.features.select_rows(&split.train);
    let y = split.train.iter().map(|&i| encoded.target[i]).collect();
    Ok((x, y))
}

/// Fitting failures are model errors whatever their numerical cause,
/// except a bad target, which is a data error.
fn model_error(e: xshap_core::Error) -> CliError {
    match e {
        xshap_core::Error::NonPositiveTarget { .. } => CliError::Data(e.to_string()),
        other => CliError::Model(format!("fitting failed: {other}")),
    }
}

impl Prepared {
    pub fn n_features(&self) -> usize {
        self.encoded.features.n_cols()
    }

    pub fn feature_names(&self) -> &[String] {
        self.encoded.features.names()
    }

    /// Source-file indices of the selected test rows.
    pub fn selected_rows(&self, rows: Option<(usize, usize)>) -> Result<Vec<usize>> {
        let test = &self.split.test;
        let (a, b) = rows.unwrap_or((0, test.len()));
        if b > test.len() {
            return Err(CliError::Config(format!(
                "row selector {a}:{b} exceeds the {} test rows",
                test.len()
            )));
        }
        if a >= b {
            return Err(CliError::Config("no test rows selected".into()));
        }
        Ok(test[a..b].to_vec())
    }

    pub fn plan(&self, budget: usize) -> Result<CoalitionPlan> {
        Ok(enumerate_coalitions(self.n_features(), budget)?)
    }

    /// Explains each row on the worker pool; output keeps the order of
    /// `rows`.
    pub fn explain_rows(
        &self,
        rows: &[usize],
        plan: &CoalitionPlan,
        multiplicative: bool,
        additive: bool,
    ) -> Result<Vec<RowExplanation>> {
        self.pool.install(|| {
            rows.par_iter()
                .map(|&index| {
                    let x = self.encoded.features.row(index).to_vec();
                    let multiplicative = multiplicative
                        .then(|| x_shap_explain(&self.model, &x, &self.reference, plan))
                        .transpose()?;
                    let additive = additive
                        .then(|| kernel_shap_explain(&self.model, &x, &self.reference, plan))
                        .transpose()?;
                    Ok(RowExplanation {
                        index,
                        x,
                        multiplicative,
                        additive,
                    })
                })
                .collect::<std::result::Result<Vec<_>, xshap_core::Error>>()
                .map_err(CliError::from)
        })
    }
}
