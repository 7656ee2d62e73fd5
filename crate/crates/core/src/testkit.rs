//! Small hand-built scenarios for tests and examples.

use crate::divergence::ClassDistribution;
use crate::scenario::{
    LearningParams, Scenario, StreetBlock, TimingParams, Trajectory, VehicleProfile,
    DEFAULT_CYCLES_PER_SAMPLE, DEFAULT_FLOPS, DEFAULT_MIN_RATE_BPS, SCHEMA_VERSION,
};
use crate::timing::SojournModel;

pub fn dist(p: &[f64]) -> ClassDistribution {
    ClassDistribution::new(p.to_vec()).expect("valid distribution")
}

pub fn block(id: u32, avg_objects: f64, p: &[f64], weight: f64) -> StreetBlock {
    StreetBlock {
        id,
        avg_objects,
        class_dist: dist(p),
        weight,
    }
}

pub fn trajectory(blocks: &[u32], prob: f64, c: usize, means: &[f64]) -> Trajectory {
    Trajectory {
        blocks: blocks.to_vec(),
        prob,
        collected_count: c,
        sojourn: SojournModel::deterministic(means.to_vec()),
    }
}

pub fn vehicle(id: u32, trajectories: Vec<Trajectory>) -> VehicleProfile {
    VehicleProfile {
        id,
        flops: DEFAULT_FLOPS,
        cycles_per_sample: DEFAULT_CYCLES_PER_SAMPLE,
        min_rate_bps: DEFAULT_MIN_RATE_BPS,
        trajectories,
    }
}

/// Assembles and validates a scenario with default timing and learning
/// parameters.
pub fn scenario(blocks: Vec<StreetBlock>, vehicles: Vec<VehicleProfile>, budget: usize) -> Scenario {
    Scenario {
        schema_version: SCHEMA_VERSION,
        blocks,
        vehicles,
        timing: TimingParams::default(),
        learning: LearningParams::default(),
        budget_s: budget,
    }
    .validate()
    .expect("valid scenario")
}

/// One vehicle driving blocks `1..=n` with deterministic sojourn `means`,
/// `c` blocks already collected.
pub fn line_scenario(means: &[f64], c: usize) -> Scenario {
    let n = means.len();
    let blocks = (0..n)
        .map(|i| {
            let p = if i % 2 == 0 { [1.0, 0.0] } else { [0.0, 1.0] };
            block(i as u32 + 1, 100.0, &p, 1.0 / n as f64)
        })
        .collect();
    let ids: Vec<u32> = (1..=n as u32).collect();
    scenario(blocks, vec![vehicle(1, vec![trajectory(&ids, 1.0, c, means)])], 1)
}

/// Like [`line_scenario`] with `c = 1` and truncated-Gaussian sojourns of
/// standard deviation `cv * mean`.
pub fn noisy_line_scenario(means: &[f64], cv: f64) -> Scenario {
    let mut s = line_scenario(means, 1);
    let t = &mut s.vehicles[0].trajectories[0];
    t.sojourn = SojournModel::truncated_gaussian(
        means.to_vec(),
        means.iter().map(|m| m * cv).collect(),
    );
    s
}
