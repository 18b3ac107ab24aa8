//! Additive (Kernel SHAP) and multiplicative (X-SHAP) explainers, exact
//! enumeration oracles, and the closed form for log-link GLMs.
//!
//! A coalition is evaluated by substituting the explained row into every
//! reference row on the active features and averaging the model over the
//! result: arithmetically for additive explanations, geometrically for
//! multiplicative ones.

mod exact;
mod glm;
mod kernel;

pub use exact::{
    exact_additive_shapley, exact_additive_shapley_restricted, exact_multiplicative_shapley,
    exact_multiplicative_shapley_restricted, MAX_EXACT_FEATURES,
};
pub use glm::glm_closed_form_contributions;
pub use kernel::{kernel_shap_explain, x_shap_explain};

use rayon::prelude::*;

use crate::coalitions::Coalition;
use crate::error::{Error, Result};
use crate::models::{check_positive, predict_one, Predictor};
use crate::numerics::{arithmetic_mean, log_mean};
use crate::table::DataTable;

/// Reference sample standing in for the data distribution, with its cached
/// predictions and baselines.
#[derive(Debug, Clone)]
pub struct ReferenceSet {
    table: DataTable,
    predictions: Vec<f64>,
    additive_baseline: f64,
    log_baseline: Result<f64>,
}

impl ReferenceSet {
    pub fn new<P: Predictor + ?Sized>(f: &P, table: DataTable) -> Result<Self> {
        if table.n_rows() == 0 {
            return Err(Error::InvalidArgument("reference set is empty".into()));
        }
        table.ensure_cols(f.n_features())?;
        let predictions = f.predict(&table)?;
        if predictions.len() != table.n_rows() {
            return Err(Error::shape(
                format!("{} predictions", table.n_rows()),
                predictions.len(),
            ));
        }
        let additive_baseline = arithmetic_mean(&predictions)?;
        let log_baseline = check_positive(&predictions).and_then(|()| log_mean(&predictions));
        Ok(Self {
            table,
            predictions,
            additive_baseline,
            log_baseline,
        })
    }

    pub fn table(&self) -> &DataTable {
        &self.table
    }

    pub fn n_rows(&self) -> usize {
        self.table.n_rows()
    }

    pub fn n_features(&self) -> usize {
        self.table.n_cols()
    }

    pub fn predictions(&self) -> &[f64] {
        &self.predictions
    }

    /// `φ⁰`, the arithmetic mean of reference predictions.
    pub fn additive_baseline(&self) -> f64 {
        self.additive_baseline
    }

    /// `ψ⁰`, the geometric mean of reference predictions.
    pub fn multiplicative_baseline(&self) -> Result<f64> {
        self.log_multiplicative_baseline().map(f64::exp)
    }

    /// `ln ψ⁰`.
    pub fn log_multiplicative_baseline(&self) -> Result<f64> {
        self.log_baseline.clone()
    }
}

/// Decomposition `φ⁰ + Σ φʲ = ŷ`.
#[derive(Debug, Clone, PartialEq)]
pub struct AdditiveExplanation {
    pub baseline: f64,
    pub contributions: Vec<f64>,
    pub prediction: f64,
}

impl AdditiveExplanation {
    pub fn reconstruction(&self) -> f64 {
        self.baseline + self.contributions.iter().sum::<f64>()
    }

    /// `|φ⁰ + Σφʲ - ŷ| / max(1, |ŷ|)`.
    pub fn efficiency_error(&self) -> f64 {
        (self.reconstruction() - self.prediction).abs() / self.prediction.abs().max(1.0)
    }
}

/// Decomposition `ψ⁰ · Π ψʲ = ŷ`.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiplicativeExplanation {
    pub baseline: f64,
    pub contributions: Vec<f64>,
    pub prediction: f64,
}

impl MultiplicativeExplanation {
    pub fn reconstruction(&self) -> f64 {
        self.contributions.iter().fold(self.baseline, |acc, c| acc * c)
    }

    /// `|ψ⁰ · Πψʲ - ŷ| / ŷ`.
    pub fn efficiency_error(&self) -> f64 {
        (self.reconstruction() - self.prediction).abs() / self.prediction.abs()
    }

    pub fn n_features(&self) -> usize {
        self.contributions.len()
    }
}

/// Reference rows with the active features of `c` replaced by `x`.
pub fn build_perturbed_dataset(x: &[f64], reference: &ReferenceSet, c: &Coalition) -> Result<DataTable> {
    let m = reference.n_features();
    if x.len() != m {
        return Err(Error::shape(format!("{m} features"), format!("{} in observation", x.len())));
    }
    if c.len() != m {
        return Err(Error::shape(format!("{m} features"), format!("{} in coalition", c.len())));
    }
    let table = reference.table();
    let mut values = Vec::with_capacity(table.n_rows() * m);
    for row in table.rows() {
        values.extend(
            row.iter()
                .zip(x)
                .zip(c.mask())
                .map(|((r, o), &active)| if active { *o } else { *r }),
        );
    }
    DataTable::new(table.names().to_vec(), table.n_rows(), values)
}

/// Arithmetic mean of `f` over the perturbed dataset of `c`.
pub fn coalition_value_additive<P: Predictor + ?Sized>(
    f: &P,
    x: &[f64],
    reference: &ReferenceSet,
    c: &Coalition,
) -> Result<f64> {
    let perturbed = build_perturbed_dataset(x, reference, c)?;
    arithmetic_mean(&f.predict(&perturbed)?)
}

/// Geometric mean of `f` over the perturbed dataset of `c`.
pub fn coalition_value_multiplicative<P: Predictor + ?Sized>(
    f: &P,
    x: &[f64],
    reference: &ReferenceSet,
    c: &Coalition,
) -> Result<f64> {
    coalition_log_value(f, x, reference, c).map(f64::exp)
}

/// Logarithm of [`coalition_value_multiplicative`], without the round trip
/// through `exp`.
pub fn coalition_log_value<P: Predictor + ?Sized>(
    f: &P,
    x: &[f64],
    reference: &ReferenceSet,
    c: &Coalition,
) -> Result<f64> {
    let perturbed = build_perturbed_dataset(x, reference, c)?;
    let predictions = f.predict(&perturbed)?;
    check_positive(&predictions)?;
    log_mean(&predictions)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Averaging {
    Arithmetic,
    LogGeometric,
}

/// Evaluates the coalitions in order. Coalitions are spread over the rayon
/// pool when the predictor allows it; each value is an independent
/// sequential reduction, so the output does not depend on the worker count.
pub(crate) fn evaluate_coalitions<P: Predictor + ?Sized>(
    f: &P,
    x: &[f64],
    reference: &ReferenceSet,
    coalitions: &[Coalition],
    averaging: Averaging,
) -> Result<Vec<f64>> {
    let one = |c: &Coalition| match averaging {
        Averaging::Arithmetic => coalition_value_additive(f, x, reference, c),
        Averaging::LogGeometric => coalition_log_value(f, x, reference, c),
    };
    if f.parallel_safe() && coalitions.len() > 1 {
        coalitions.par_iter().map(one).collect()
    } else {
        coalitions.iter().map(one).collect()
    }
}

pub(crate) fn check_observation<P: Predictor + ?Sized>(f: &P, x: &[f64], reference: &ReferenceSet) -> Result<()> {
    let m = f.n_features();
    if x.len() != m {
        return Err(Error::shape(format!("{m} features"), format!("{} in observation", x.len())));
    }
    reference.table().ensure_cols(m)
}

pub(crate) fn predict_positive<P: Predictor + ?Sized>(f: &P, x: &[f64]) -> Result<f64> {
    let y = predict_one(f, x)?;
    check_positive(&[y]).map_err(|_| Error::NonPositivePrediction { row: 0, value: y })?;
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::FnModel;

    fn reference<P: Predictor>(f: &P, rows: &[Vec<f64>]) -> ReferenceSet {
        ReferenceSet::new(f, DataTable::from_rows(rows).unwrap()).unwrap()
    }

    #[test]
    fn perturbed_dataset() {
        let f = FnModel::new(2, |x: &[f64]| x[0] + x[1]);
        let r = reference(&f, &[vec![1.0, 2.0], vec![3.0, 4.0]]);
        let x = [9.0, 9.0];
        let full = build_perturbed_dataset(&x, &r, &Coalition::full(2)).unwrap();
        assert!(full.rows().all(|row| row == x));
        let empty = build_perturbed_dataset(&x, &r, &Coalition::empty(2)).unwrap();
        assert_eq!(&empty, r.table());
        let mixed = build_perturbed_dataset(&x, &r, &Coalition::parse("10").unwrap()).unwrap();
        assert_eq!(mixed.as_slice(), &[9.0, 2.0, 9.0, 4.0]);
        assert!(build_perturbed_dataset(&[1.0], &r, &Coalition::full(2)).is_err());
        assert!(build_perturbed_dataset(&x, &r, &Coalition::full(3)).is_err());
    }

    #[test]
    fn additive_values() {
        let f = FnModel::new(2, |x: &[f64]| x[0] + x[1]);
        let r = reference(&f, &[vec![1.0, 2.0], vec![3.0, 4.0]]);
        let x = [9.0, 9.0];
        assert_eq!(coalition_value_additive(&f, &x, &r, &Coalition::full(2)).unwrap(), 18.0);
        assert_eq!(
            coalition_value_additive(&f, &x, &r, &Coalition::empty(2)).unwrap(),
            r.additive_baseline()
        );
        assert_eq!(
            coalition_value_additive(&f, &x, &r, &Coalition::parse("10").unwrap()).unwrap(),
            12.0
        );
    }

    #[test]
    fn multiplicative_values() {
        let f = FnModel::new(2, |x: &[f64]| (x[0] + 2.0 * x[1]).exp());
        let r = reference(&f, &[vec![0.0, 0.0], vec![1.0, 1.0]]);
        let x = [1.0, 0.0];
        let full = coalition_value_multiplicative(&f, &x, &r, &Coalition::full(2)).unwrap();
        assert!((full - 1f64.exp()).abs() < 1e-14);
        let empty = coalition_value_multiplicative(&f, &x, &r, &Coalition::empty(2)).unwrap();
        assert!((empty - r.multiplicative_baseline().unwrap()).abs() < 1e-14);
        let mixed = coalition_value_multiplicative(&f, &x, &r, &Coalition::parse("10").unwrap()).unwrap();
        assert!((mixed - 7.389056).abs() < 1e-6);
    }

    #[test]
    fn baselines() {
        let f = FnModel::new(1, |x: &[f64]| x[0]);
        let r = reference(&f, &[vec![1.0], vec![4.0]]);
        assert_eq!(r.additive_baseline(), 2.5);
        assert!((r.multiplicative_baseline().unwrap() - 2.0).abs() < 1e-15);
        assert!(r.multiplicative_baseline().unwrap() <= r.additive_baseline());

        let r = reference(&f, &[vec![1.0], vec![-4.0]]);
        assert_eq!(r.additive_baseline(), -1.5);
        assert_eq!(
            r.multiplicative_baseline(),
            Err(Error::NonPositivePrediction { row: 1, value: -4.0 })
        );
        assert!(ReferenceSet::new(&f, DataTable::from_rows(&[]).unwrap()).is_err());
    }

    #[test]
    fn non_positive_coalition_prediction() {
        let f = FnModel::new(2, |x: &[f64]| x[0] - x[1]);
        let r = reference(&f, &[vec![5.0, 1.0]]);
        let err = coalition_value_multiplicative(&f, &[0.5, 1.0], &r, &Coalition::parse("10").unwrap());
        assert!(matches!(err, Err(Error::NonPositivePrediction { .. })));
    }
}
