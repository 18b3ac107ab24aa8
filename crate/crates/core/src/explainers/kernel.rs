use crate::coalitions::CoalitionPlan;
use crate::error::{Error, Result};
use crate::models::{predict_one, Predictor};
use crate::numerics::{solve_wls_constrained, WlsProblem};

use super::{
    check_observation, evaluate_coalitions, predict_positive, AdditiveExplanation, Averaging,
    MultiplicativeExplanation, ReferenceSet,
};

/// Kernel SHAP: regress the coalition gaps `ŷᶜ - φ⁰` on the coalition masks
/// with kernel weights, constraining the contributions to sum to `ŷ - φ⁰`.
pub fn kernel_shap_explain<P: Predictor + ?Sized>(
    f: &P,
    x: &[f64],
    reference: &ReferenceSet,
    plan: &CoalitionPlan,
) -> Result<AdditiveExplanation> {
    check_observation(f, x, reference)?;
    check_plan(plan, x.len())?;
    let prediction = predict_one(f, x)?;
    let baseline = reference.additive_baseline();

    let values = evaluate_coalitions(f, x, reference, plan.coalitions(), Averaging::Arithmetic)?;
    let gaps = values.iter().map(|v| v - baseline).collect();
    let contributions = regress(plan, gaps, prediction - baseline)?;
    Ok(AdditiveExplanation {
        baseline,
        contributions,
        prediction,
    })
}

/// X-SHAP: regress `ln(ŷᶜ× / ψ⁰)` on the coalition masks with kernel weights,
/// constraining the log-contributions to sum to `ln(ŷ / ψ⁰)`, then
/// exponentiate. Local accuracy `ψ⁰ · Π ψʲ = ŷ` holds by construction.
pub fn x_shap_explain<P: Predictor + ?Sized>(
    f: &P,
    x: &[f64],
    reference: &ReferenceSet,
    plan: &CoalitionPlan,
) -> Result<MultiplicativeExplanation> {
    check_observation(f, x, reference)?;
    check_plan(plan, x.len())?;
    let log_baseline = reference.log_multiplicative_baseline()?;
    let prediction = predict_positive(f, x)?;

    let log_values = evaluate_coalitions(f, x, reference, plan.coalitions(), Averaging::LogGeometric)?;
    let log_gaps = log_values.iter().map(|v| v - log_baseline).collect();
    let log_contributions = regress(plan, log_gaps, prediction.ln() - log_baseline)?;
    Ok(MultiplicativeExplanation {
        baseline: log_baseline.exp(),
        contributions: log_contributions.into_iter().map(f64::exp).collect(),
        prediction,
    })
}

fn check_plan(plan: &CoalitionPlan, m: usize) -> Result<()> {
    if plan.n_features() != m {
        return Err(Error::shape(
            format!("plan over {m} features"),
            format!("plan over {}", plan.n_features()),
        ));
    }
    Ok(())
}

fn regress(plan: &CoalitionPlan, gaps: Vec<f64>, total: f64) -> Result<Vec<f64>> {
    let m = plan.n_features();
    let design = plan
        .coalitions()
        .iter()
        .flat_map(|c| c.mask().iter().map(|&b| if b { 1.0 } else { 0.0 }))
        .collect();
    let problem = WlsProblem::new(design, m, plan.weights().to_vec(), gaps).with_sum_constraint(total);
    solve_wls_constrained(&problem).map_err(|e| match e {
        Error::RankDeficient { condition } => Error::Explanation(format!(
            "coalition budget {} too small for {m} features (condition estimate {condition:.3e})",
            plan.len()
        )),
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coalitions::enumerate_coalitions;
    use crate::models::{FnModel, LogGlm};
    use crate::table::DataTable;
    use approx::assert_relative_eq;

    fn reference<P: Predictor>(f: &P, rows: &[Vec<f64>]) -> ReferenceSet {
        ReferenceSet::new(f, DataTable::from_rows(rows).unwrap()).unwrap()
    }

    fn grid_rows(m: usize, n: usize) -> Vec<Vec<f64>> {
        (0..n)
            .map(|i| (0..m).map(|j| ((i * 7 + j * 3) % 11) as f64 / 5.0 - 1.0).collect())
            .collect()
    }

    #[test]
    fn worked_multiplicative_example() {
        let f = LogGlm::new(0.0, vec![1.0, 2.0]);
        let r = reference(&f, &[vec![0.0, 0.0], vec![1.0, 1.0]]);
        let plan = enumerate_coalitions(2, 100).unwrap();
        let e = x_shap_explain(&f, &[1.0, 0.0], &r, &plan).unwrap();
        assert_relative_eq!(e.baseline, 1.5f64.exp(), max_relative = 1e-12);
        assert_relative_eq!(e.baseline, 4.481689, epsilon = 1e-6);
        assert_relative_eq!(e.contributions[0], 0.5f64.exp(), max_relative = 1e-12);
        assert_relative_eq!(e.contributions[1], (-1f64).exp(), max_relative = 1e-12);
        assert_relative_eq!(e.reconstruction(), std::f64::consts::E, max_relative = 1e-12);
    }

    #[test]
    fn inessential_feature_pairwise_game() {
        // log f has interactions of order at most two
        let f = FnModel::new(4, |x: &[f64]| (x[0] * x[1] + 0.3 * x[3] - x[0] * x[3]).exp());
        let r = reference(&f, &grid_rows(4, 12));
        let x = [0.7, -0.4, 1.9, 0.2];
        for budget in [6, 8, 10, 12, 14] {
            let plan = enumerate_coalitions(4, budget).unwrap();
            let e = x_shap_explain(&f, &x, &r, &plan).unwrap();
            assert!((e.contributions[2] - 1.0).abs() <= 1e-10, "budget {budget}: {:?}", e.contributions);
        }
    }

    #[test]
    fn inessential_feature_full_budget() {
        let f = FnModel::new(4, |x: &[f64]| (x[0] * x[1] * x[3]).exp() + 0.5 * x[0].sin().abs());
        let r = reference(&f, &grid_rows(4, 12));
        let x = [0.7, -0.4, 1.9, 0.2];
        let plan = enumerate_coalitions(4, 14).unwrap();
        let e = x_shap_explain(&f, &x, &r, &plan).unwrap();
        assert!((e.contributions[2] - 1.0).abs() <= 1e-10, "{:?}", e.contributions);
        let a = kernel_shap_explain(&f, &x, &r, &plan).unwrap();
        assert!(a.contributions[2].abs() <= 1e-10, "{:?}", a.contributions);
    }

    #[test]
    fn linear_model_contributions() {
        let betas = [0.5, -1.5, 2.0];
        let f = FnModel::new(3, move |x: &[f64]| betas.iter().zip(x).map(|(b, v)| b * v).sum());
        let rows = grid_rows(3, 9);
        let r = reference(&f, &rows);
        let x = [1.0, 2.0, -0.5];
        let plan = enumerate_coalitions(3, 6).unwrap();
        let e = kernel_shap_explain(&f, &x, &r, &plan).unwrap();
        for j in 0..3 {
            let mean = rows.iter().map(|row| row[j]).sum::<f64>() / rows.len() as f64;
            assert_relative_eq!(e.contributions[j], betas[j] * (x[j] - mean), epsilon = 1e-8);
        }
        assert!(e.efficiency_error() <= 1e-10);
    }

    #[test]
    fn local_accuracy_at_small_budget() {
        let f = FnModel::new(5, |x: &[f64]| (x[0] * x[1] - x[2] + 0.2 * x[3] * x[4]).exp());
        let r = reference(&f, &grid_rows(5, 10));
        let plan = enumerate_coalitions(5, 12).unwrap();
        let x = [0.3, 1.1, -0.7, 0.9, 0.1];
        let e = x_shap_explain(&f, &x, &r, &plan).unwrap();
        assert!(e.efficiency_error() <= 1e-10);
        let a = kernel_shap_explain(&f, &x, &r, &plan).unwrap();
        assert!(a.efficiency_error() <= 1e-10);
    }

    #[test]
    fn budget_too_small() {
        let f = LogGlm::new(0.0, vec![1.0; 4]);
        let r = reference(&f, &grid_rows(4, 5));
        let plan = enumerate_coalitions(4, 2).unwrap();
        let err = x_shap_explain(&f, &[0.0; 4], &r, &plan).unwrap_err();
        assert!(matches!(err, Error::Explanation(ref msg) if msg.contains("too small")), "{err}");
    }

    #[test]
    fn single_feature() {
        let f = LogGlm::new(0.2, vec![1.3]);
        let r = reference(&f, &[vec![0.0], vec![1.0], vec![3.0]]);
        let plan = enumerate_coalitions(1, 10).unwrap();
        let e = x_shap_explain(&f, &[2.0], &r, &plan).unwrap();
        assert_relative_eq!(e.contributions[0], e.prediction / e.baseline, max_relative = 1e-14);
    }

    #[test]
    fn mismatched_shapes() {
        let f = LogGlm::new(0.0, vec![1.0, 1.0]);
        let r = reference(&f, &[vec![0.0, 0.0]]);
        let plan3 = enumerate_coalitions(3, 6).unwrap();
        assert!(matches!(x_shap_explain(&f, &[0.0, 0.0], &r, &plan3), Err(Error::Shape { .. })));
        let plan2 = enumerate_coalitions(2, 6).unwrap();
        assert!(matches!(kernel_shap_explain(&f, &[0.0], &r, &plan2), Err(Error::Shape { .. })));
    }

    #[test]
    fn non_positive_model_rejected() {
        let f = FnModel::new(2, |x: &[f64]| x[0] - 1.0);
        let r = reference(&f, &[vec![3.0, 0.0], vec![4.0, 0.0]]);
        let plan = enumerate_coalitions(2, 2).unwrap();
        assert!(matches!(
            x_shap_explain(&f, &[0.5, 0.0], &r, &plan),
            Err(Error::NonPositivePrediction { .. })
        ));
        // additive mode has no positivity requirement
        assert!(kernel_shap_explain(&f, &[0.5, 0.0], &r, &plan).is_ok());
    }
}
