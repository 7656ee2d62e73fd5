//! Class-distribution arithmetic.
//!
//! The divergence used everywhere is the class-wise L1 distance
//! `sum_i |p_i - q_i|`, which lies in `[0, 2]` on the simplex. It is twice
//! the total-variation distance; no factor of one half is applied.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenario::Scenario;

/// Tolerance used when validating that a probability vector sums to one.
pub const SIMPLEX_TOL: f64 = 1e-9;

/// A normalized probability vector over `C` classes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ClassDistribution(Vec<f64>);

impl ClassDistribution {
    /// Validates `probs` (non-negative, finite, sums to one within
    /// [`SIMPLEX_TOL`]) and renormalizes it.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::validation("class distribution is empty"));
        }
        if let Some(p) = probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return Err(Error::validation(format!(
                "class distribution has invalid entry {p}"
            )));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::validation(format!(
                "class distribution sums to {sum}"
            )));
        }
        Ok(Self(canonicalize(probs)))
    }

    /// Normalizes non-negative weights into a distribution.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::validation("mixture weights must be finite and non-negative"));
        }
        let sum: f64 = weights.iter().sum();
        if sum <= 0.0 {
            return Err(Error::validation("mixture weights sum to zero"));
        }
        Ok(Self(canonicalize(weights.into_iter().map(|w| w / sum).collect())))
    }

    pub fn uniform(classes: usize) -> Self {
        Self(vec![1.0 / classes as f64; classes])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl AsRef<[f64]> for ClassDistribution {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// Rescales only when the sum is off by more than a few ulps, so applying
/// it twice is the same as applying it once.
pub(crate) fn canonicalize(mut probs: Vec<f64>) -> Vec<f64> {
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > 1e-15 && sum > 0.0 {
        probs.iter_mut().for_each(|p| *p /= sum);
    }
    probs
}

/// Class-wise L1 distance between two vectors of equal length.
#[inline]
pub fn l1(p: &[f64], q: &[f64]) -> f64 {
    p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum()
}

pub fn emd(p: &ClassDistribution, q: &ClassDistribution) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::LengthMismatch {
            left: p.len(),
            right: q.len(),
        });
    }
    Ok(l1(p.as_slice(), q.as_slice()))
}

/// `Q`-weighted mixture of block distributions. Blocks listed more than once
/// contribute their mass once per occurrence.
pub(crate) fn mass_mixture<'a, I>(classes: usize, blocks: I) -> ClassDistribution
where
    I: IntoIterator<Item = (f64, &'a ClassDistribution)>,
{
    let mut acc = vec![0.0; classes];
    let mut total = 0.0;
    for (mass, dist) in blocks {
        total += mass;
        for (a, p) in acc.iter_mut().zip(dist.as_slice()) {
            *a += mass * p;
        }
    }
    acc.iter_mut().for_each(|a| *a /= total);
    ClassDistribution(canonicalize(acc))
}

/// Regional distribution: blocks mixed by their expected object counts.
pub fn global_distribution(scenario: &Scenario) -> ClassDistribution {
    mass_mixture(
        scenario.classes(),
        scenario.blocks.iter().map(|b| (b.avg_objects, &b.class_dist)),
    )
}

/// Importance-weighted block mixture; the reference every divergence is
/// measured against.
pub fn target_distribution(scenario: &Scenario) -> ClassDistribution {
    let mut acc = vec![0.0; scenario.classes()];
    for b in &scenario.blocks {
        for (a, p) in acc.iter_mut().zip(b.class_dist.as_slice()) {
            *a += b.weight * p;
        }
    }
    ClassDistribution(canonicalize(acc))
}

/// Distribution of the data gathered on the first `g` blocks of trajectory
/// `m` of `vehicle`.
pub fn collected_distribution(
    scenario: &Scenario,
    vehicle: u32,
    m: usize,
    g: usize,
) -> Result<ClassDistribution> {
    let traj = scenario.trajectory(vehicle, m)?;
    traj.check_stop(vehicle, m, g)?;
    Ok(prefix_distribution(scenario, &traj.blocks[..g]))
}

pub(crate) fn prefix_distribution(scenario: &Scenario, prefix: &[u32]) -> ClassDistribution {
    mass_mixture(
        scenario.classes(),
        prefix.iter().map(|id| {
            let b = scenario.block(*id).expect("validated block id");
            (b.avg_objects, &b.class_dist)
        }),
    )
}
