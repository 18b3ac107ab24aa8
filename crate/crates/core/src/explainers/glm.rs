use crate::error::{Error, Result};
use crate::models::LogGlm;
use crate::numerics::arithmetic_mean;
use crate::table::DataTable;

use super::MultiplicativeExplanation;

/// Closed-form multiplicative contributions of a log-link GLM:
/// `ψʲ = exp(βʲ (xʲ - ⟨Xʲ⟩₊))` and `ψ⁰ = exp(α + Σ βʲ ⟨Xʲ⟩₊)`, where
/// `⟨Xʲ⟩₊` is the column mean of `data`.
pub fn glm_closed_form_contributions(
    glm: &LogGlm,
    x: &[f64],
    data: &DataTable,
) -> Result<MultiplicativeExplanation> {
    let m = glm.betas.len();
    if x.len() != m {
        return Err(Error::shape(format!("{m} features"), format!("{} in observation", x.len())));
    }
    data.ensure_cols(m)?;
    let means = (0..m)
        .map(|j| arithmetic_mean(&data.column(j)))
        .collect::<Result<Vec<_>>>()?;

    let contributions = glm
        .betas
        .iter()
        .zip(x.iter().zip(&means))
        .map(|(b, (v, mu))| (b * (v - mu)).exp())
        .collect();
    let baseline = glm.linear_predictor(&means).exp();
    let prediction = glm.linear_predictor(x).exp();
    Ok(MultiplicativeExplanation {
        baseline,
        contributions,
        prediction,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn worked_example() {
        let g = LogGlm::new(0.0, vec![1.0, 2.0]);
        let data = DataTable::from_rows(&[vec![0.0, 0.0], vec![1.0, 1.0]]).unwrap();
        let e = glm_closed_form_contributions(&g, &[1.0, 0.0], &data).unwrap();
        assert_relative_eq!(e.baseline, 1.5f64.exp(), max_relative = 1e-15);
        assert_relative_eq!(e.contributions[0], 0.5f64.exp(), max_relative = 1e-15);
        assert_relative_eq!(e.contributions[1], (-1f64).exp(), max_relative = 1e-15);
        assert!(e.efficiency_error() < 1e-14);
    }

    #[test]
    fn unit_factors() {
        let g = LogGlm::new(0.4, vec![0.0, -1.2]);
        let data = DataTable::from_rows(&[vec![1.0, 3.0], vec![5.0, 1.0]]).unwrap();
        let e = glm_closed_form_contributions(&g, &[9.0, 2.0], &data).unwrap();
        // β⁰ = 0 and x¹ at the column mean
        assert_eq!(e.contributions, vec![1.0, 1.0]);
    }

    #[test]
    fn shape_errors() {
        let g = LogGlm::new(0.0, vec![1.0, 2.0]);
        let data = DataTable::from_rows(&[vec![0.0, 0.0]]).unwrap();
        assert!(glm_closed_form_contributions(&g, &[1.0], &data).is_err());
        let data = DataTable::from_rows(&[vec![0.0]]).unwrap();
        assert!(glm_closed_form_contributions(&g, &[1.0, 2.0], &data).is_err());
    }
}
