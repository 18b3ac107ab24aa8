use crate::error::{Error, Result};
use crate::models::Predictor;
use crate::numerics::{arithmetic_mean, solve_wls, WlsProblem};
use crate::table::DataTable;

/// `ŷ = exp(α) · Π exp(βʲ xʲ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LogGlm {
    pub alpha: f64,
    pub betas: Vec<f64>,
}

impl LogGlm {
    pub fn new(alpha: f64, betas: Vec<f64>) -> Self {
        Self { alpha, betas }
    }

    /// Linear predictor `α + Σ βʲ xʲ` for one row.
    pub fn linear_predictor(&self, x: &[f64]) -> f64 {
        self.betas
            .iter()
            .zip(x)
            .fold(self.alpha, |acc, (b, v)| acc + b * v)
    }
}

impl Predictor for LogGlm {
    fn n_features(&self) -> usize {
        self.betas.len()
    }

    fn predict(&self, x: &DataTable) -> Result<Vec<f64>> {
        x.ensure_cols(self.betas.len())?;
        Ok(x.rows().map(|row| self.linear_predictor(row).exp()).collect())
    }
}

/// Ordinary least squares of `ln y` on `X` with an intercept.
///
/// Columns are standardised before the solve and the coefficients mapped
/// back, which keeps the normal matrix well conditioned for raw feature
/// scales.
pub fn fit_log_glm(x: &DataTable, y: &[f64]) -> Result<LogGlm> {
    let (n, m) = (x.n_rows(), x.n_cols());
    if y.len() != n {
        return Err(Error::shape(format!("{n} targets"), y.len()));
    }
    if let Some(row) = y.iter().position(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(Error::NonPositiveTarget { row, value: y[row] });
    }
    if n < m + 1 {
        return Err(Error::RankDeficient {
            condition: f64::INFINITY,
        });
    }

    let mut centers = Vec::with_capacity(m);
    let mut scales = Vec::with_capacity(m);
    for j in 0..m {
        let col = x.column(j);
        let mu = arithmetic_mean(&col)?;
        let var = col.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / n as f64;
        if var.sqrt() <= 1e-12 * mu.abs().max(1.0) {
            // constant column is collinear with the intercept
            return Err(Error::RankDeficient {
                condition: f64::INFINITY,
            });
        }
        centers.push(mu);
        scales.push(var.sqrt());
    }

    let p = m + 1;
    let mut design = Vec::with_capacity(n * p);
    for row in x.rows() {
        design.push(1.0);
        design.extend(row.iter().zip(centers.iter().zip(&scales)).map(|(v, (c, s))| (v - c) / s));
    }
    let response = y.iter().map(|v| v.ln()).collect();
    let coeffs = solve_wls(&WlsProblem::new(design, p, vec![1.0; n], response))?;

    let betas: Vec<f64> = coeffs[1..].iter().zip(&scales).map(|(b, s)| b / s).collect();
    let alpha = coeffs[0] - betas.iter().zip(&centers).map(|(b, c)| b * c).sum::<f64>();
    Ok(LogGlm { alpha, betas })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::E;

    #[test]
    fn predictions() {
        let g = LogGlm::new(0.0, vec![1.0, 2.0]);
        let t = DataTable::from_rows(&[vec![0.0, 0.0], vec![1.0, 0.0]]).unwrap();
        let y = g.predict(&t).unwrap();
        assert_eq!(y[0], 1.0);
        assert_relative_eq!(y[1], 2.718281828, epsilon = 1e-9);

        let g = LogGlm::new(1.0, vec![0.0; 3]);
        let t = DataTable::from_rows(&[vec![4.0, -7.0, 1e3]]).unwrap();
        assert_eq!(g.predict(&t).unwrap(), vec![E]);

        assert!(matches!(
            g.predict(&DataTable::from_rows(&[vec![1.0]]).unwrap()),
            Err(Error::Shape { .. })
        ));
    }

    #[test]
    fn recovers_noiseless_parameters() {
        let truth = LogGlm::new(0.3, vec![1.0, -2.0]);
        let rows: Vec<Vec<f64>> = (0..20)
            .map(|i| {
                let a = i as f64 * 0.37 - 3.0;
                vec![a, (a * 1.7).sin() + 0.1 * i as f64]
            })
            .collect();
        let x = DataTable::from_rows(&rows).unwrap();
        let y = truth.predict(&x).unwrap();
        let fit = fit_log_glm(&x, &y).unwrap();
        assert!((fit.alpha - 0.3).abs() < 1e-8);
        assert!((fit.betas[0] - 1.0).abs() < 1e-8);
        assert!((fit.betas[1] + 2.0).abs() < 1e-8);
    }

    #[test]
    fn constant_target() {
        let x = DataTable::from_rows(&[vec![1.0, 5.0], vec![2.0, 3.0], vec![4.0, 4.0], vec![0.5, 1.0]]).unwrap();
        let fit = fit_log_glm(&x, &[3.5; 4]).unwrap();
        assert!((fit.alpha - 3.5f64.ln()).abs() < 1e-10);
        assert!(fit.betas.iter().all(|b| b.abs() < 1e-10));
    }

    #[test]
    fn fit_errors() {
        let x = DataTable::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        assert!(matches!(fit_log_glm(&x, &[1.0, 2.0]), Err(Error::RankDeficient { .. })));

        let x = DataTable::from_rows(&[vec![1.0], vec![2.0], vec![3.0]]).unwrap();
        assert_eq!(
            fit_log_glm(&x, &[1.0, -2.0, 3.0]),
            Err(Error::NonPositiveTarget { row: 1, value: -2.0 })
        );
    }
}
