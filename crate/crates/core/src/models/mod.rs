//! Predictors that can be explained: a log-link GLM, a gradient-boosted tree
//! ensemble and a bridge to models running in another process.

pub mod external;
pub mod gbt;
pub mod glm;

pub use external::ExternalModel;
pub use gbt::{fit_gbt, fit_gbt_traced, GbtParams, RegressionTree, TreeEnsemble};
pub use glm::{fit_log_glm, LogGlm};

use crate::error::{Error, Result};
use crate::table::DataTable;

/// Whether explanations decompose predictions as a product or as a sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Multiplicative,
    Additive,
}

/// Deterministic batch prediction function.
///
/// Identical input tables must give bit-identical outputs.
pub trait Predictor: Sync {
    fn n_features(&self) -> usize;

    fn predict(&self, x: &DataTable) -> Result<Vec<f64>>;

    /// Whether concurrent calls to `predict` are allowed.
    fn parallel_safe(&self) -> bool {
        true
    }
}

impl<P: Predictor + ?Sized> Predictor for &P {
    fn n_features(&self) -> usize {
        (**self).n_features()
    }

    fn predict(&self, x: &DataTable) -> Result<Vec<f64>> {
        (**self).predict(x)
    }

    fn parallel_safe(&self) -> bool {
        (**self).parallel_safe()
    }
}

impl<P: Predictor + ?Sized> Predictor for Box<P> {
    fn n_features(&self) -> usize {
        (**self).n_features()
    }

    fn predict(&self, x: &DataTable) -> Result<Vec<f64>> {
        (**self).predict(x)
    }

    fn parallel_safe(&self) -> bool {
        (**self).parallel_safe()
    }
}

/// Predictor built from a row function.
pub struct FnModel<F> {
    n_features: usize,
    f: F,
}

impl<F> FnModel<F>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    pub fn new(n_features: usize, f: F) -> Self {
        Self { n_features, f }
    }
}

impl<F> Predictor for FnModel<F>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    fn n_features(&self) -> usize {
        self.n_features
    }

    fn predict(&self, x: &DataTable) -> Result<Vec<f64>> {
        x.ensure_cols(self.n_features)?;
        Ok(x.rows().map(&self.f).collect())
    }
}

/// `ln ∘ f` for a strictly positive predictor `f`.
pub struct LogPredictor<P>(pub P);

impl<P: Predictor> Predictor for LogPredictor<P> {
    fn n_features(&self) -> usize {
        self.0.n_features()
    }

    fn predict(&self, x: &DataTable) -> Result<Vec<f64>> {
        let mut out = self.0.predict(x)?;
        check_positive(&out)?;
        for v in &mut out {
            *v = v.ln();
        }
        Ok(out)
    }

    fn parallel_safe(&self) -> bool {
        self.0.parallel_safe()
    }
}

/// Fails on the first prediction that is not strictly positive and finite.
pub fn check_positive(predictions: &[f64]) -> Result<()> {
    match predictions
        .iter()
        .position(|v| !(*v > 0.0 && v.is_finite()))
    {
        Some(row) => Err(Error::NonPositivePrediction {
            row,
            value: predictions[row],
        }),
        None => Ok(()),
    }
}

/// Predicts a single row.
pub fn predict_one<P: Predictor + ?Sized>(f: &P, x: &[f64]) -> Result<f64> {
    let table = DataTable::new(crate::table::default_names(x.len()), 1, x.to_vec())?;
    let out = f.predict(&table)?;
    out.first()
        .copied()
        .ok_or_else(|| Error::ExternalModel("model returned no prediction".into()))
}
