//! The world the selector decides over: street blocks, vehicles with
//! candidate trajectories, and the timing and learning parameters.
//!
//! Scenarios are read from and written to JSON (`schema_version: 1`, unknown
//! fields rejected). Probability vectors are validated to `1e-9` and then
//! renormalized once, so downstream code sees exact simplexes.

use std::collections::HashSet;
use std::path::Path;

use rand::Rng as _;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::divergence::{canonicalize, ClassDistribution, SIMPLEX_TOL};
use crate::error::{Error, Result};
use crate::rng::{rng_from_seed, Rng};
use crate::timing::{SojournKind, SojournModel};

pub const SCHEMA_VERSION: u32 = 1;

// Simulation parameters of the reference setup.
pub const DEFAULT_MODEL_BITS: f64 = 5.904e8;
pub const DEFAULT_CYCLES_PER_SAMPLE: f64 = 9.8304e7;
pub const DEFAULT_FLOPS: f64 = 4.0e10;
pub const DEFAULT_MIN_RATE_BPS: f64 = 5.0e7;
pub const DEFAULT_WIRED_DELAY_S: f64 = 1.0;
pub const DEFAULT_DEADLINE_S: f64 = 80.0;
pub const DEFAULT_LOCAL_STEPS: u32 = 2;
pub const DEFAULT_BATCH_SIZE: u32 = 32;
pub const DEFAULT_LIPSCHITZ: f64 = 0.01;
pub const DEFAULT_LR: f64 = 0.001;
pub const DEFAULT_BUDGET: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StreetBlock {
    pub id: u32,
    /// Expected number of objects seen per traversal (`Q_b`).
    pub avg_objects: f64,
    pub class_dist: ClassDistribution,
    /// Importance factor `l_b`; weights sum to one over the region.
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Trajectory {
    pub blocks: Vec<u32>,
    pub prob: f64,
    /// Leading blocks already traversed when the round starts (`c`).
    pub collected_count: usize,
    pub sojourn: SojournModel,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// Feasible stop counts `c..=N`.
    pub fn stop_range(&self) -> std::ops::RangeInclusive<usize> {
        self.collected_count..=self.blocks.len()
    }

    pub fn check_stop(&self, vehicle: u32, m: usize, g: usize) -> Result<()> {
        if self.stop_range().contains(&g) {
            Ok(())
        } else {
            Err(Error::StopOutOfRange {
                vehicle,
                trajectory: m,
                g,
                min: self.collected_count,
                max: self.blocks.len(),
            })
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VehicleProfile {
    pub id: u32,
    pub flops: f64,
    pub cycles_per_sample: f64,
    pub min_rate_bps: f64,
    pub trajectories: Vec<Trajectory>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimingParams {
    pub deadline_s: f64,
    pub model_bits: f64,
    pub wired_delay_s: f64,
    pub batch_size: u32,
    pub local_steps: u32,
}

impl Default for TimingParams {
    fn default() -> Self {
        Self {
            deadline_s: DEFAULT_DEADLINE_S,
            model_bits: DEFAULT_MODEL_BITS,
            wired_delay_s: DEFAULT_WIRED_DELAY_S,
            batch_size: DEFAULT_BATCH_SIZE,
            local_steps: DEFAULT_LOCAL_STEPS,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LearningParams {
    pub lr: f64,
    pub lipschitz: f64,
}

impl Default for LearningParams {
    fn default() -> Self {
        Self {
            lr: DEFAULT_LR,
            lipschitz: DEFAULT_LIPSCHITZ,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema_version: u32,
    pub blocks: Vec<StreetBlock>,
    pub vehicles: Vec<VehicleProfile>,
    pub timing: TimingParams,
    pub learning: LearningParams,
    /// Number of vehicles to select (`S`).
    pub budget_s: usize,
}

impl Scenario {
    pub fn classes(&self) -> usize {
        self.blocks.first().map_or(0, |b| b.class_dist.len())
    }

    pub fn budget(&self) -> usize {
        self.budget_s
    }

    pub fn block(&self, id: u32) -> Option<&StreetBlock> {
        self.blocks.iter().find(|b| b.id == id)
    }

    pub fn vehicle_index(&self, id: u32) -> Result<usize> {
        self.vehicles
            .iter()
            .position(|v| v.id == id)
            .ok_or(Error::UnknownVehicle(id))
    }

    pub fn vehicle(&self, id: u32) -> Result<&VehicleProfile> {
        self.vehicles
            .iter()
            .find(|v| v.id == id)
            .ok_or(Error::UnknownVehicle(id))
    }

    pub fn trajectory(&self, vehicle: u32, m: usize) -> Result<&Trajectory> {
        self.vehicle(vehicle)?
            .trajectories
            .get(m)
            .ok_or(Error::UnknownTrajectory {
                vehicle,
                trajectory: m,
            })
    }

    /// Checks every invariant and renormalizes probability vectors. Returns
    /// the first violation as a validation error.
    pub fn validate(mut self) -> Result<Self> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::validation(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.blocks.is_empty() {
            return Err(Error::validation("scenario has no blocks"));
        }
        if self.vehicles.is_empty() {
            return Err(Error::validation("scenario has no vehicles"));
        }
        let classes = self.classes();
        let mut ids = HashSet::new();
        for b in &mut self.blocks {
            if b.id < 1 {
                return Err(Error::validation("block ids must be >= 1"));
            }
            if !ids.insert(b.id) {
                return Err(Error::validation(format!("duplicate block id {}", b.id)));
            }
            if !(b.avg_objects.is_finite() && b.avg_objects > 0.0) {
                return Err(Error::validation(format!(
                    "block {} avg_objects {} must be positive",
                    b.id, b.avg_objects
                )));
            }
            if !(b.weight.is_finite() && b.weight >= 0.0) {
                return Err(Error::validation(format!(
                    "block {} weight {} must be non-negative",
                    b.id, b.weight
                )));
            }
            if b.class_dist.len() != classes {
                return Err(Error::validation(format!(
                    "block {} has {} classes, expected {classes}",
                    b.id,
                    b.class_dist.len()
                )));
            }
            b.class_dist = ClassDistribution::new(b.class_dist.clone().into_inner())
                .map_err(|e| Error::validation(format!("block {}: {e}", b.id)))?;
        }
        let weight_sum: f64 = self.blocks.iter().map(|b| b.weight).sum();
        if (weight_sum - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::validation(format!(
                "block weights sum to {weight_sum}"
            )));
        }
        let weights = canonicalize(self.blocks.iter().map(|b| b.weight).collect());
        for (b, w) in self.blocks.iter_mut().zip(weights) {
            b.weight = w;
        }

        let mut vids = HashSet::new();
        for v in &mut self.vehicles {
            if !vids.insert(v.id) {
                return Err(Error::validation(format!("duplicate vehicle id {}", v.id)));
            }
            for (name, x) in [
                ("flops", v.flops),
                ("cycles_per_sample", v.cycles_per_sample),
                ("min_rate_bps", v.min_rate_bps),
            ] {
                if !(x.is_finite() && x > 0.0) {
                    return Err(Error::validation(format!(
                        "vehicle {} {name} {x} must be positive",
                        v.id
                    )));
                }
            }
            if v.trajectories.is_empty() {
                return Err(Error::validation(format!(
                    "vehicle {} has no trajectories",
                    v.id
                )));
            }
            for (m, t) in v.trajectories.iter().enumerate() {
                if t.blocks.is_empty() {
                    return Err(Error::validation(format!(
                        "vehicle {} trajectory {m} is empty",
                        v.id
                    )));
                }
                if let Some(bad) = t.blocks.iter().find(|b| !ids.contains(b)) {
                    return Err(Error::validation(format!(
                        "vehicle {} trajectory {m} references unknown block {bad}",
                        v.id
                    )));
                }
                if !(0.0..=1.0).contains(&t.prob) {
                    return Err(Error::validation(format!(
                        "vehicle {} trajectory {m} prob {} outside [0, 1]",
                        v.id, t.prob
                    )));
                }
                if t.collected_count < 1 || t.collected_count > t.blocks.len() {
                    return Err(Error::validation(format!(
                        "vehicle {} trajectory {m} collected_count {} outside [1, {}]",
                        v.id,
                        t.collected_count,
                        t.blocks.len()
                    )));
                }
                t.sojourn.validate(t.blocks.len()).map_err(|e| {
                    Error::validation(format!("vehicle {} trajectory {m}: {e}", v.id))
                })?;
            }
            let prob_sum: f64 = v.trajectories.iter().map(|t| t.prob).sum();
            if (prob_sum - 1.0).abs() > SIMPLEX_TOL {
                return Err(Error::validation(format!(
                    "vehicle {} trajectory probs sum to {prob_sum}",
                    v.id
                )));
            }
            let probs = canonicalize(v.trajectories.iter().map(|t| t.prob).collect());
            for (t, q) in v.trajectories.iter_mut().zip(probs) {
                t.prob = q;
            }
        }

        let t = &self.timing;
        for (name, x) in [
            ("deadline_s", t.deadline_s),
            ("model_bits", t.model_bits),
        ] {
            if !(x > 0.0) || x.is_nan() {
                return Err(Error::validation(format!("timing {name} {x} must be positive")));
            }
        }
        if !(t.wired_delay_s >= 0.0 && t.wired_delay_s.is_finite()) {
            return Err(Error::validation("timing wired_delay_s must be non-negative"));
        }
        if t.batch_size < 1 || t.local_steps < 1 {
            return Err(Error::validation("timing batch_size and local_steps must be >= 1"));
        }
        let l = &self.learning;
        if !(l.lr.is_finite() && l.lr > 0.0 && l.lipschitz.is_finite() && l.lipschitz > 0.0) {
            return Err(Error::validation("learning lr and lipschitz must be positive"));
        }
        if self.budget_s < 1 || self.budget_s > self.vehicles.len() {
            return Err(Error::validation(format!(
                "budget_s {} must be in [1, {}]",
                self.budget_s,
                self.vehicles.len()
            )));
        }
        Ok(self)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let raw: Scenario = serde_json::from_str(s)?;
        raw.validate()
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Copy restricted to the given vehicle ids (in scenario order), with the
    /// budget clamped to the number of vehicles kept.
    pub fn restrict_to(&self, keep: &[u32]) -> Scenario {
        let mut out = self.clone();
        out.vehicles.retain(|v| keep.contains(&v.id));
        out.budget_s = out.budget_s.min(out.vehicles.len());
        out
    }
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    Scenario::from_json_str(&text)
}

pub fn save_scenario(scenario: &Scenario, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, scenario.to_json_string()?).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Parameters of the synthetic scenario generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorSpec {
    pub blocks: usize,
    pub vehicles: usize,
    pub classes: usize,
    pub max_trajectories: usize,
    pub max_len: usize,
    pub budget: usize,
    pub seed: u64,
    /// Symmetric Dirichlet concentration of block class distributions.
    pub concentration: f64,
    pub objects_range: (f64, f64),
    /// Raw block importance is uniform on this range before normalization.
    pub weight_range: (f64, f64),
    pub sojourn_mean_range: (f64, f64),
    /// Sojourn standard deviation as a fraction of the mean.
    pub sojourn_cv: f64,
    pub timing: TimingParams,
    pub learning: LearningParams,
}

impl Default for GeneratorSpec {
    fn default() -> Self {
        Self {
            blocks: 8,
            vehicles: 8,
            classes: 3,
            max_trajectories: 2,
            max_len: 4,
            budget: 3,
            seed: 0,
            concentration: 0.3,
            objects_range: (50.0, 400.0),
            weight_range: (0.2, 1.0),
            sojourn_mean_range: (15.0, 35.0),
            sojourn_cv: 0.2,
            timing: TimingParams::default(),
            learning: LearningParams::default(),
        }
    }
}

impl GeneratorSpec {
    /// Reference-scale setup: 70 vehicles with two candidate routes each,
    /// ten of them selected per round.
    pub fn reference() -> Self {
        Self {
            blocks: 36,
            vehicles: 70,
            classes: 4,
            max_trajectories: 2,
            max_len: 10,
            budget: DEFAULT_BUDGET,
            seed: 2024,
            ..Self::default()
        }
    }

    /// Small non-IID setup used for training comparisons.
    pub fn desk() -> Self {
        Self {
            blocks: 12,
            vehicles: 20,
            classes: 4,
            max_trajectories: 2,
            max_len: 6,
            budget: 5,
            seed: 1,
            ..Self::default()
        }
    }
}

/// Builds a random scenario. Deterministic in `spec` (including its seed).
///
/// Blocks sit on a square grid; trajectories are random walks over the
/// 4-neighbourhood that avoid revisiting blocks and end early when boxed in.
pub fn generate_synthetic(spec: &GeneratorSpec) -> Result<Scenario> {
    if spec.blocks < 1
        || spec.vehicles < 1
        || spec.classes < 1
        || spec.max_trajectories < 1
        || spec.max_len < 1
        || spec.budget < 1
    {
        return Err(Error::validation("generator counts must all be >= 1"));
    }
    if spec.budget > spec.vehicles {
        return Err(Error::validation(format!(
            "budget {} exceeds vehicle count {}",
            spec.budget, spec.vehicles
        )));
    }
    if !(spec.concentration > 0.0) {
        return Err(Error::validation("concentration must be positive"));
    }
    let mut rng = rng_from_seed(spec.seed);
    let gamma = Gamma::new(spec.concentration, 1.0)
        .map_err(|e| Error::validation(format!("concentration: {e}")))?;

    let mut raw_weights = Vec::with_capacity(spec.blocks);
    let mut blocks = Vec::with_capacity(spec.blocks);
    for b in 0..spec.blocks {
        let avg_objects = uniform(&mut rng, spec.objects_range);
        let class_dist = loop {
            let draws: Vec<f64> = (0..spec.classes).map(|_| gamma.sample(&mut rng)).collect();
            if draws.iter().sum::<f64>() > 0.0 {
                break ClassDistribution::from_weights(draws)?;
            }
        };
        raw_weights.push(uniform(&mut rng, spec.weight_range).max(f64::MIN_POSITIVE));
        blocks.push(StreetBlock {
            id: b as u32 + 1,
            avg_objects,
            class_dist,
            weight: 0.0,
        });
    }
    let total: f64 = raw_weights.iter().sum();
    let weights = canonicalize(raw_weights.iter().map(|w| w / total).collect());
    for (b, w) in blocks.iter_mut().zip(weights) {
        b.weight = w;
    }

    let width = (spec.blocks as f64).sqrt().ceil() as usize;
    let mut vehicles = Vec::with_capacity(spec.vehicles);
    for v in 0..spec.vehicles {
        let count = rng.random_range(1..=spec.max_trajectories);
        let raw: Vec<f64> = (0..count).map(|_| rng.random_range(0.05..1.0)).collect();
        let qsum: f64 = raw.iter().sum();
        let probs = canonicalize(raw.iter().map(|q| q / qsum).collect());
        let mut trajectories = Vec::with_capacity(count);
        for prob in probs {
            let target_len = rng.random_range(1..=spec.max_len);
            let path = random_walk(&mut rng, spec.blocks, width, target_len);
            let collected_count = rng.random_range(1..=path.len());
            let mean_s: Vec<f64> = path
                .iter()
                .map(|_| uniform(&mut rng, spec.sojourn_mean_range))
                .collect();
            let sojourn = if spec.sojourn_cv > 0.0 {
                let std_s = mean_s.iter().map(|m| m * spec.sojourn_cv).collect();
                SojournModel {
                    mean_s,
                    std_s,
                    dist: SojournKind::TruncatedGaussian,
                }
            } else {
                SojournModel::deterministic(mean_s)
            };
            trajectories.push(Trajectory {
                blocks: path.into_iter().map(|b| b as u32 + 1).collect(),
                prob,
                collected_count,
                sojourn,
            });
        }
        vehicles.push(VehicleProfile {
            id: v as u32 + 1,
            flops: DEFAULT_FLOPS,
            cycles_per_sample: DEFAULT_CYCLES_PER_SAMPLE,
            min_rate_bps: DEFAULT_MIN_RATE_BPS,
            trajectories,
        });
    }

    Scenario {
        schema_version: SCHEMA_VERSION,
        blocks,
        vehicles,
        timing: spec.timing,
        learning: spec.learning,
        budget_s: spec.budget,
    }
    .validate()
}

fn uniform(rng: &mut Rng, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        rng.random_range(lo..hi)
    } else {
        lo
    }
}

fn random_walk(rng: &mut Rng, blocks: usize, width: usize, len: usize) -> Vec<usize> {
    let mut path = vec![rng.random_range(0..blocks)];
    while path.len() < len {
        let cur = *path.last().unwrap();
        let (r, c) = (cur / width, cur % width);
        let mut next = Vec::with_capacity(4);
        if r > 0 {
            next.push(cur - width);
        }
        if c > 0 {
            next.push(cur - 1);
        }
        if c + 1 < width && cur + 1 < blocks {
            next.push(cur + 1);
        }
        if cur + width < blocks {
            next.push(cur + width);
        }
        next.retain(|b| !path.contains(b));
        if next.is_empty() {
            break;
        }
        path.push(next[rng.random_range(0..next.len())]);
    }
    path
}
