//! Means and weighted least-squares kernels shared by both explainers.
//!
//! All reductions run left to right in index order so that repeated calls
//! on the same data give bit-identical results.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Normal matrices whose condition estimate exceeds this are rejected.
pub const MAX_CONDITION: f64 = 1e12;

/// `(1/n) Σ vᵢ`.
pub fn arithmetic_mean(v: &[f64]) -> Result<f64> {
    if v.is_empty() {
        return Err(Error::InvalidArgument("mean of an empty vector".into()));
    }
    if let Some(i) = v.iter().position(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "non-finite value {} at index {i}",
            v[i]
        )));
    }
    Ok(v.iter().sum::<f64>() / v.len() as f64)
}

/// Geometric mean computed as `exp(mean(ln vᵢ))`.
pub fn geometric_mean(v: &[f64]) -> Result<f64> {
    Ok(log_mean(v)?.exp())
}

/// `mean(ln vᵢ)`, the logarithm of the geometric mean.
pub fn log_mean(v: &[f64]) -> Result<f64> {
    if v.is_empty() {
        return Err(Error::InvalidArgument("mean of an empty vector".into()));
    }
    let mut acc = 0.0;
    for (index, &value) in v.iter().enumerate() {
        if !(value > 0.0 && value.is_finite()) {
            return Err(Error::NonPositiveValue { index, value });
        }
        acc += value.ln();
    }
    Ok(acc / v.len() as f64)
}

/// A weighted least-squares problem `argmin Σ wₖ (rₖ - Cₖ·β)²`, optionally
/// subject to `Σ βⱼ = s`.
#[derive(Debug, Clone, PartialEq)]
pub struct WlsProblem {
    /// Row-major `K x p` design matrix.
    pub design: Vec<f64>,
    pub n_params: usize,
    pub weights: Vec<f64>,
    pub response: Vec<f64>,
    pub sum_constraint: Option<f64>,
}

impl WlsProblem {
    pub fn new(design: Vec<f64>, n_params: usize, weights: Vec<f64>, response: Vec<f64>) -> Self {
        Self {
            design,
            n_params,
            weights,
            response,
            sum_constraint: None,
        }
    }

    pub fn with_sum_constraint(mut self, total: f64) -> Self {
        self.sum_constraint = Some(total);
        self
    }

    pub fn n_obs(&self) -> usize {
        self.weights.len()
    }

    pub fn solve(&self) -> Result<Vec<f64>> {
        match self.sum_constraint {
            None => solve_wls(self),
            Some(_) => solve_wls_constrained(self),
        }
    }

    fn validate(&self) -> Result<()> {
        let k = self.weights.len();
        if self.n_params == 0 {
            return Err(Error::InvalidArgument("no coefficients to estimate".into()));
        }
        if self.response.len() != k {
            return Err(Error::shape(format!("{k} responses"), self.response.len()));
        }
        if self.design.len() != k * self.n_params {
            return Err(Error::shape(
                format!("{k}x{} design", self.n_params),
                format!("{} entries", self.design.len()),
            ));
        }
        if let Some(i) = self.weights.iter().position(|w| !(*w > 0.0 && w.is_finite())) {
            return Err(Error::InvalidArgument(format!(
                "weight {} at index {i} is not strictly positive",
                self.weights[i]
            )));
        }
        if self.response.iter().chain(&self.design).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite design or response".into()));
        }
        Ok(())
    }
}

/// Unconstrained weighted least squares through the weighted normal
/// equations `(CᵀWC) β = CᵀWr`, factorised by Cholesky.
pub fn solve_wls(problem: &WlsProblem) -> Result<Vec<f64>> {
    problem.validate()?;
    normal_equations(
        &problem.design,
        problem.n_params,
        &problem.weights,
        &problem.response,
    )
}

/// Weighted least squares under `Σ βⱼ = s`.
///
/// The last coefficient is eliminated (`β_p = s - Σ_{j<p} βⱼ`), the reduced
/// unconstrained problem is solved, and `β_p` is recovered by substitution, so
/// the constraint holds up to one rounding per coefficient.
pub fn solve_wls_constrained(problem: &WlsProblem) -> Result<Vec<f64>> {
    problem.validate()?;
    let total = problem.sum_constraint.ok_or_else(|| {
        Error::InvalidArgument("constrained solve requires a sum constraint".into())
    })?;
    if !total.is_finite() {
        return Err(Error::InvalidArgument(format!("non-finite sum constraint {total}")));
    }
    let p = problem.n_params;
    if p == 1 {
        return Ok(vec![total]);
    }

    let q = p - 1;
    let k = problem.n_obs();
    let mut reduced = Vec::with_capacity(k * q);
    let mut response = Vec::with_capacity(k);
    for (row, &r) in problem.design.chunks_exact(p).zip(&problem.response) {
        let last = row[q];
        reduced.extend(row[..q].iter().map(|c| c - last));
        response.push(r - last * total);
    }
    let mut coeffs = normal_equations(&reduced, q, &problem.weights, &response)?;
    let partial: f64 = coeffs.iter().sum();
    coeffs.push(total - partial);
    Ok(coeffs)
}

fn normal_equations(design: &[f64], p: usize, weights: &[f64], response: &[f64]) -> Result<Vec<f64>> {
    let mut gram = DMatrix::<f64>::zeros(p, p);
    let mut rhs = DVector::<f64>::zeros(p);
    for ((row, &w), &r) in design.chunks_exact(p).zip(weights).zip(response) {
        for a in 0..p {
            let wa = w * row[a];
            if wa == 0.0 {
                continue;
            }
            rhs[a] += wa * r;
            for b in a..p {
                gram[(a, b)] += wa * row[b];
            }
        }
    }
    for a in 0..p {
        for b in 0..a {
            gram[(a, b)] = gram[(b, a)];
        }
    }

    let condition = condition_estimate(&gram);
    if !(condition <= MAX_CONDITION) {
        return Err(Error::RankDeficient { condition });
    }
    let chol = gram
        .cholesky()
        .ok_or(Error::RankDeficient { condition })?;
    Ok(chol.solve(&rhs).iter().copied().collect())
}

/// Ratio of extreme eigenvalues of a symmetric matrix; infinite when the
/// smallest is not positive.
fn condition_estimate(gram: &DMatrix<f64>) -> f64 {
    let eig = gram.symmetric_eigenvalues();
    let max = eig.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = eig.iter().copied().fold(f64::INFINITY, f64::min);
    if !(min > 0.0) || !max.is_finite() {
        f64::INFINITY
    } else {
        max / min
    }
}
