//! Synthetic per-block labelled data.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng as _;
use rand_distr::{Normal, Poisson};
use std::collections::BTreeMap;

use crate::divergence::target_distribution;
use crate::error::{Error, Result};
use crate::rng::{stream, Rng};
use crate::scenario::{Scenario, Trajectory};

use super::model::Dataset;

/// Class-conditional Gaussian features: `x ~ N(mu_y, noise_std^2 I)`.
#[derive(Debug, Clone)]
pub struct FeatureModel {
    pub class_means: Vec<Vec<f64>>,
    pub noise_std: f64,
}

impl FeatureModel {
    /// Class means with i.i.d. `N(0, separation^2)` coordinates.
    pub fn random(classes: usize, dim: usize, separation: f64, noise_std: f64, rng: &mut Rng) -> Result<Self> {
        let normal = Normal::new(0.0, separation)
            .map_err(|e| Error::validation(format!("class separation: {e}")))?;
        if !(noise_std > 0.0) {
            return Err(Error::validation("noise_std must be positive"));
        }
        let class_means = (0..classes)
            .map(|_| (0..dim).map(|_| normal.sample(rng)).collect())
            .collect();
        Ok(Self {
            class_means,
            noise_std,
        })
    }

    pub fn dim(&self) -> usize {
        self.class_means.first().map_or(0, Vec::len)
    }

    pub fn sample_x(&self, label: usize, rng: &mut Rng) -> Vec<f64> {
        let noise = Normal::new(0.0, self.noise_std).expect("validated std");
        self.class_means[label]
            .iter()
            .map(|mu| mu + noise.sample(rng))
            .collect()
    }

    /// `n` samples with labels drawn from `probs`.
    pub fn sample(&self, probs: &[f64], n: usize, rng: &mut Rng) -> Result<Dataset> {
        let labels = WeightedIndex::new(probs)
            .map_err(|e| Error::validation(format!("label distribution: {e}")))?;
        let mut data = Dataset::new(self.dim());
        for _ in 0..n {
            let y = labels.sample(rng);
            let x = self.sample_x(y, rng);
            data.push(&x, y);
        }
        Ok(data)
    }
}

/// Per-block sample pools and a held-out test set labelled by the target
/// distribution.
#[derive(Debug, Clone)]
pub struct BlockData {
    pub features: FeatureModel,
    pub pools: BTreeMap<u32, Dataset>,
    pub test: Dataset,
}

pub fn synthesize_block_data(
    scenario: &Scenario,
    dim: usize,
    separation: f64,
    noise_std: f64,
    pool_size: usize,
    test_size: usize,
    seed: u64,
) -> Result<BlockData> {
    if pool_size == 0 {
        return Err(Error::validation("pool_size must be positive"));
    }
    let features = FeatureModel::random(
        scenario.classes(),
        dim,
        separation,
        noise_std,
        &mut stream(seed, &[0]),
    )?;
    let pools = scenario
        .blocks
        .iter()
        .map(|b| {
            let mut rng = stream(seed, &[1, u64::from(b.id)]);
            Ok((b.id, features.sample(b.class_dist.as_slice(), pool_size, &mut rng)?))
        })
        .collect::<Result<_>>()?;
    let test = features.sample(
        target_distribution(scenario).as_slice(),
        test_size,
        &mut stream(seed, &[2]),
    )?;
    Ok(BlockData {
        features,
        pools,
        test,
    })
}

impl BlockData {
    /// Data gathered along the first `g` blocks of `traj`: `Poisson(Q_b)`
    /// samples per block, drawn with replacement from the block pool.
    /// Successive blocks consume the stream in order, so a shorter prefix
    /// yields a prefix of a longer one.
    pub fn collect(&self, scenario: &Scenario, traj: &Trajectory, g: usize, rng: &mut Rng) -> Result<Dataset> {
        let mut out = Dataset::new(self.features.dim());
        for id in &traj.blocks[..g.min(traj.len())] {
            let block = scenario
                .block(*id)
                .ok_or_else(|| Error::validation(format!("unknown block {id}")))?;
            let pool = &self.pools[id];
            let count = poisson(block.avg_objects, rng);
            for _ in 0..count {
                out.push_from(pool, rng.random_range(0..pool.len()));
            }
        }
        Ok(out)
    }

    /// `n` samples from the target-distribution mixture of block pools.
    pub fn target_batch(&self, scenario: &Scenario, n: usize, rng: &mut Rng) -> Result<Dataset> {
        let weights: Vec<f64> = scenario.blocks.iter().map(|b| b.weight).collect();
        let pick = WeightedIndex::new(&weights)
            .map_err(|e| Error::validation(format!("block weights: {e}")))?;
        let mut out = Dataset::new(self.features.dim());
        for _ in 0..n {
            let pool = &self.pools[&scenario.blocks[pick.sample(rng)].id];
            out.push_from(pool, rng.random_range(0..pool.len()));
        }
        Ok(out)
    }
}

pub(crate) fn poisson(mean: f64, rng: &mut Rng) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).map_or(0, |p| p.sample(rng) as u64)
}
