//! Brute-force Shapley values over every coalition.

use crate::coalitions::{shapley_weight, Coalition};
use crate::error::{Error, Result};
use crate::models::{predict_one, Predictor};

use super::{
    check_observation, evaluate_coalitions, predict_positive, AdditiveExplanation, Averaging,
    MultiplicativeExplanation, ReferenceSet,
};

/// Largest feature count accepted by the exact oracles (`2^m` coalition
/// sweeps).
pub const MAX_EXACT_FEATURES: usize = 12;

/// `φʲ = Σ_{c ⊆ F∖{j}} w(m,|c|) (f_{c∪{j}} - f_c)` with `f_c` the reference
/// average of the perturbed coalition dataset.
pub fn exact_additive_shapley<P: Predictor + ?Sized>(
    f: &P,
    x: &[f64],
    reference: &ReferenceSet,
) -> Result<AdditiveExplanation> {
    exact_additive_shapley_restricted(f, x, reference, &vec![true; x.len()])
}

/// `ψʲ = exp(Σ_{c ⊆ F∖{j}} w(m,|c|) (ln f_{c∪{j}} - ln f_c))` with `f_c` the
/// reference geometric average of the perturbed coalition dataset.
pub fn exact_multiplicative_shapley<P: Predictor + ?Sized>(
    f: &P,
    x: &[f64],
    reference: &ReferenceSet,
) -> Result<MultiplicativeExplanation> {
    exact_multiplicative_shapley_restricted(f, x, reference, &vec![true; x.len()])
}

/// Additive Shapley values of the subgame where only features with
/// `players[j]` set may join a coalition; the others stay at their
/// reference values and receive a zero contribution.
pub fn exact_additive_shapley_restricted<P: Predictor + ?Sized>(
    f: &P,
    x: &[f64],
    reference: &ReferenceSet,
    players: &[bool],
) -> Result<AdditiveExplanation> {
    check_observation(f, x, reference)?;
    let values = subgame_values(f, x, reference, players, Averaging::Arithmetic)?;
    Ok(AdditiveExplanation {
        baseline: reference.additive_baseline(),
        contributions: shapley_from_values(&values, players)?,
        prediction: predict_one(f, x)?,
    })
}

/// Multiplicative counterpart of [`exact_additive_shapley_restricted`];
/// non-players receive a factor of one.
pub fn exact_multiplicative_shapley_restricted<P: Predictor + ?Sized>(
    f: &P,
    x: &[f64],
    reference: &ReferenceSet,
    players: &[bool],
) -> Result<MultiplicativeExplanation> {
    check_observation(f, x, reference)?;
    let baseline = reference.multiplicative_baseline()?;
    let prediction = predict_positive(f, x)?;
    let log_values = subgame_values(f, x, reference, players, Averaging::LogGeometric)?;
    let contributions = shapley_from_values(&log_values, players)?
        .into_iter()
        .map(f64::exp)
        .collect();
    Ok(MultiplicativeExplanation {
        baseline,
        contributions,
        prediction,
    })
}

/// Values of every coalition of players, indexed by a bitmask over the
/// player list.
fn subgame_values<P: Predictor + ?Sized>(
    f: &P,
    x: &[f64],
    reference: &ReferenceSet,
    players: &[bool],
    averaging: Averaging,
) -> Result<Vec<f64>> {
    let m = x.len();
    if players.len() != m {
        return Err(Error::shape(format!("{m} player flags"), players.len()));
    }
    if m > MAX_EXACT_FEATURES {
        return Err(Error::TooManyFeatures {
            m,
            max: MAX_EXACT_FEATURES,
        });
    }
    let members: Vec<usize> = (0..m).filter(|&j| players[j]).collect();
    let coalitions: Vec<Coalition> = (0..1usize << members.len())
        .map(|bits| {
            let active: Vec<usize> = members
                .iter()
                .enumerate()
                .filter(|(k, _)| bits >> k & 1 == 1)
                .map(|(_, &j)| j)
                .collect();
            Coalition::from_members(m, &active)
        })
        .collect();
    evaluate_coalitions(f, x, reference, &coalitions, averaging)
}

fn shapley_from_values(values: &[f64], players: &[bool]) -> Result<Vec<f64>> {
    let members: Vec<usize> = (0..players.len()).filter(|&j| players[j]).collect();
    let p = members.len();
    let mut out = vec![0.0; players.len()];
    for (k, &j) in members.iter().enumerate() {
        let bit = 1usize << k;
        let mut acc = 0.0;
        for bits in 0..1usize << p {
            if bits & bit != 0 {
                continue;
            }
            let w = shapley_weight(p, bits.count_ones() as usize)?;
            acc += w * (values[bits | bit] - values[bits]);
        }
        out[j] = acc;
    }
    Ok(out)
}
