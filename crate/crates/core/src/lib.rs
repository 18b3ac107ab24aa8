//! Multiplicative and additive Shapley explanations for black-box models.
//!
//! For a strictly positive model `f`, [`x_shap_explain`] decomposes a
//! prediction as `ŷ = ψ⁰ · Π ψʲ`, one factor per feature, while
//! [`kernel_shap_explain`] gives the classical additive split
//! `ŷ = φ⁰ + Σ φʲ`. Both estimate the Shapley values by a weighted regression
//! over coalitions chosen in decreasing kernel-weight order, and both are
//! checked against brute-force enumeration ([`exact_multiplicative_shapley`],
//! [`exact_additive_shapley`]).
//!
//! ```
//! use xshap_core::{enumerate_coalitions, x_shap_explain, DataTable, LogGlm, ReferenceSet};
//!
//! let model = LogGlm::new(0.0, vec![1.0, 2.0]);
//! let reference = ReferenceSet::new(&model, DataTable::from_rows(&[vec![0.0, 0.0], vec![1.0, 1.0]])?)?;
//! let plan = enumerate_coalitions(2, 100)?;
//! let e = x_shap_explain(&model, &[1.0, 0.0], &reference, &plan)?;
//! assert!((e.contributions[0] - 0.5f64.exp()).abs() < 1e-12);
//! assert!((e.reconstruction() - std::f64::consts::E).abs() < 1e-12);
//! # Ok::<(), xshap_core::Error>(())
//! ```

pub mod coalitions;
pub mod error;
pub mod explainers;
pub mod metrics;
pub mod models;
pub mod numerics;
pub mod table;

pub use coalitions::{enumerate_coalitions, kernel_weight, shapley_weight, Coalition, CoalitionPlan};
pub use error::{Error, Result};
pub use explainers::{
    build_perturbed_dataset, coalition_value_additive, coalition_value_multiplicative,
    exact_additive_shapley, exact_multiplicative_shapley, glm_closed_form_contributions,
    kernel_shap_explain, x_shap_explain, AdditiveExplanation, MultiplicativeExplanation, ReferenceSet,
};
pub use metrics::{ExplanationBatch, GroupSpec, PartialDependenceCurve};
pub use models::{fit_gbt, fit_log_glm, ExternalModel, FnModel, GbtParams, LogGlm, Mode, Predictor, TreeEnsemble};
pub use table::DataTable;
