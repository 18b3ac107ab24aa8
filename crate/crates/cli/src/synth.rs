//! Seeded synthetic data from a log-linear model.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub n_rows: usize,
    pub n_features: usize,
    pub alpha: f64,
    /// Drawn uniformly from `[-0.5, 0.5]` when `None`.
    pub betas: Option<Vec<f64>>,
    /// Standard deviation of Gaussian noise on `ln y`.
    pub noise: f64,
    /// Pairwise correlation of the features through one shared factor.
    pub correlation: f64,
    pub seed: u64,
}

impl SynthConfig {
    pub fn new(n_rows: usize, n_features: usize, seed: u64) -> Self {
        Self {
            n_rows,
            n_features,
            alpha: 0.0,
            betas: None,
            noise: 0.0,
            correlation: 0.0,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthData {
    /// `x0 .. x{m-1}` then `y`.
    pub names: Vec<String>,
    pub features: Vec<Vec<f64>>,
    pub target: Vec<f64>,
    pub alpha: f64,
    pub betas: Vec<f64>,
}

/// `xʲ = √(1-ρ) zʲ + √ρ u` with standard normal `z`, `u`, and
/// `y = exp(α + Σ βʲ xʲ + σ ε)`.
pub fn generate(cfg: &SynthConfig) -> Result<SynthData> {
    let m = cfg.n_features;
    if m == 0 || cfg.n_rows == 0 {
        return Err(CliError::Config("synthetic data needs at least one row and one feature".into()));
    }
    if !(0.0..1.0).contains(&cfg.correlation) {
        return Err(CliError::Config(format!("correlation {} not in [0, 1)", cfg.correlation)));
    }
    if !(cfg.noise >= 0.0 && cfg.noise.is_finite()) {
        return Err(CliError::Config(format!("noise {} must be finite and non-negative", cfg.noise)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let betas = match &cfg.betas {
        Some(b) if b.len() != m => {
            return Err(CliError::Config(format!("{} betas given for {m} features", b.len())));
        }
        Some(b) => b.clone(),
        None => (0..m).map(|_| rng.random_range(-0.5..=0.5)).collect(),
    };
    let (own, shared) = ((1.0 - cfg.correlation).sqrt(), cfg.correlation.sqrt());
    let mut features = Vec::with_capacity(cfg.n_rows);
    let mut target = Vec::with_capacity(cfg.n_rows);
    for _ in 0..cfg.n_rows {
        let u: f64 = StandardNormal.sample(&mut rng);
        let x: Vec<f64> = (0..m)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                own * z + shared * u
            })
            .collect();
        let eps: f64 = StandardNormal.sample(&mut rng);
        let eta = cfg.alpha + betas.iter().zip(&x).map(|(b, v)| b * v).sum::<f64>() + cfg.noise * eps;
        features.push(x);
        target.push(eta.exp());
    }
    let mut names: Vec<String> = xshap_core::table::default_names(m);
    names.push("y".into());
    Ok(SynthData {
        names,
        features,
        target,
        alpha: cfg.alpha,
        betas,
    })
}

impl SynthData {
    pub fn to_csv(&self) -> String {
        let mut out = self.names.join(",");
        out.push('\n');
        for (x, y) in self.features.iter().zip(&self.target) {
            for v in x {
                let _ = write!(out, "{v},");
            }
            let _ = writeln!(out, "{y}");
        }
        out
    }
}
