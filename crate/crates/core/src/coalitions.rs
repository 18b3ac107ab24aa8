//! Coalition masks, Shapley combinatorial weights and regression kernel
//! weights.

use std::collections::HashSet;

use itertools::Itertools;

use crate::error::{Error, Result};

/// Binary mask over the feature set; `true` marks an active feature.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Coalition {
    mask: Vec<bool>,
}

impl Coalition {
    pub fn new(mask: Vec<bool>) -> Self {
        Self { mask }
    }

    pub fn empty(m: usize) -> Self {
        Self::new(vec![false; m])
    }

    pub fn full(m: usize) -> Self {
        Self::new(vec![true; m])
    }

    /// Coalition whose active features are `members`.
    pub fn from_members(m: usize, members: &[usize]) -> Self {
        let mut mask = vec![false; m];
        for &j in members {
            mask[j] = true;
        }
        Self::new(mask)
    }

    /// Parses a string of `0`/`1` characters, e.g. `"101"`.
    pub fn parse(bits: &str) -> Result<Self> {
        bits.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::InvalidArgument(format!("bad mask character {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Self::new)
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn len(&self) -> usize {
        self.mask.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mask.is_empty()
    }

    pub fn contains(&self, j: usize) -> bool {
        self.mask[j]
    }

    /// Number of active features.
    pub fn size(&self) -> usize {
        self.mask.iter().filter(|&&b| b).count()
    }

    pub fn complement(&self) -> Self {
        Self::new(self.mask.iter().map(|b| !b).collect())
    }
}

impl std::fmt::Display for Coalition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for &b in &self.mask {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// `binom(n, k)` as a float, exact while the result fits in 53 bits.
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0f64;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc.round()
}

/// Shapley combinatorial weight `s!(m-s-1)!/m!` for a coalition of size `s`
/// that excludes the feature being credited.
pub fn shapley_weight(m: usize, s: usize) -> Result<f64> {
    if m == 0 || s >= m {
        return Err(Error::InvalidArgument(format!(
            "coalition size {s} out of range for {m} features"
        )));
    }
    // s!(m-s-1)!/m! = 1 / (m * binom(m-1, s))
    Ok(1.0 / (m as f64 * binomial(m - 1, s)))
}

/// Shapley kernel regression weight `(m-1) / (binom(m,s) s (m-s))`.
///
/// Undefined (infinite) for the empty and full coalitions.
pub fn kernel_weight(m: usize, s: usize) -> Result<f64> {
    if s == 0 || s >= m {
        return Err(Error::InvalidArgument(format!(
            "kernel weight undefined for size {s} of {m} features"
        )));
    }
    Ok((m - 1) as f64 / (binomial(m, s) * s as f64 * (m - s) as f64))
}

/// Ordered coalitions with their regression weights.
#[derive(Debug, Clone, PartialEq)]
pub struct CoalitionPlan {
    m: usize,
    coalitions: Vec<Coalition>,
    weights: Vec<f64>,
}

impl CoalitionPlan {
    pub fn n_features(&self) -> usize {
        self.m
    }

    pub fn len(&self) -> usize {
        self.coalitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coalitions.is_empty()
    }

    pub fn coalitions(&self) -> &[Coalition] {
        &self.coalitions
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Coalition, f64)> {
        self.coalitions.iter().zip(self.weights.iter().copied())
    }

    /// True when every proper non-empty coalition is present.
    pub fn is_complete(&self) -> bool {
        Some(self.len()) == proper_coalition_count(self.m)
    }
}

/// `2^m - 2`, or `None` when it does not fit in `usize`.
pub fn proper_coalition_count(m: usize) -> Option<usize> {
    u32::try_from(m)
        .ok()
        .and_then(|m| 1usize.checked_shl(m))
        .map(|n| n - 2)
}

/// Coalitions in decreasing kernel-weight order: every size-1 mask followed
/// by its complement, then every size-2 mask followed by its complement, and
/// so on towards the middle. Within a size, masks follow lexicographic order
/// of their member indices. Masks already emitted are skipped and the plan
/// stops after `min(budget, 2^m - 2)` entries.
pub fn enumerate_coalitions(m: usize, budget: usize) -> Result<CoalitionPlan> {
    if budget < 2 {
        return Err(Error::InvalidArgument(format!(
            "coalition budget must be at least 2, got {budget}"
        )));
    }
    if m == 0 {
        return Err(Error::InvalidArgument("no features to form coalitions".into()));
    }
    let limit = proper_coalition_count(m).map_or(budget, |total| total.min(budget));

    let mut coalitions = Vec::with_capacity(limit);
    let mut weights = Vec::with_capacity(limit);
    let mut seen = HashSet::with_capacity(limit);
    'rounds: for size in 1..=m / 2 {
        let weight = kernel_weight(m, size)?;
        for members in (0..m).combinations(size) {
            let c = Coalition::from_members(m, &members);
            let comp = c.complement();
            for mask in [c, comp] {
                if coalitions.len() == limit {
                    break 'rounds;
                }
                if seen.insert(mask.clone()) {
                    coalitions.push(mask);
                    weights.push(weight);
                }
            }
        }
    }
    Ok(CoalitionPlan {
        m,
        coalitions,
        weights,
    })
}
