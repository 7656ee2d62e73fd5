//! Round-by-round federated training driven by a selection strategy.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::index::sample;
use rand::Rng as _;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use crate::baselines;
use crate::error::{Error, Result};
use crate::objective::{Decision, Objective};
use crate::optimizer::{OptimizerConfig, Solver};
use crate::rng::{derive_seed, stream};
use crate::scenario::Scenario;

use super::data::{synthesize_block_data, BlockData};
use super::model::{local_sgd, Dataset, ToyModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    Sense4fl,
    Random,
    UploadingCentric,
    CoverageCentric,
    GradientBased,
    PowerOfChoice,
    FullData,
    SelectionOnly,
    Centralized,
}

impl Strategy {
    pub const ALL: [Strategy; 9] = [
        Strategy::Sense4fl,
        Strategy::Random,
        Strategy::UploadingCentric,
        Strategy::CoverageCentric,
        Strategy::GradientBased,
        Strategy::PowerOfChoice,
        Strategy::FullData,
        Strategy::SelectionOnly,
        Strategy::Centralized,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Sense4fl => "sense4fl",
            Strategy::Random => "random",
            Strategy::UploadingCentric => "uploading-centric",
            Strategy::CoverageCentric => "coverage-centric",
            Strategy::GradientBased => "gradient-based",
            Strategy::PowerOfChoice => "power-of-choice",
            Strategy::FullData => "full-data",
            Strategy::SelectionOnly => "selection-only",
            Strategy::Centralized => "centralized",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Strategy::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::validation(format!("unknown strategy {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    pub rounds: usize,
    pub feature_dim: usize,
    /// Std of each class-mean coordinate.
    pub class_separation: f64,
    pub noise_std: f64,
    pub pool_size: usize,
    pub test_size: usize,
    /// Step size of local SGD. Independent of the learning rate that sets
    /// the drift factor in the objective.
    pub train_lr: f64,
    /// Round `k` trains with `train_lr / (1 + lr_decay * (k - 1))`.
    pub lr_decay: f64,
    /// Vehicles available per round; all of them when `None`.
    pub available_per_round: Option<usize>,
    pub optimizer: OptimizerConfig,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            rounds: 50,
            feature_dim: 16,
            class_separation: 0.25,
            noise_std: 1.0,
            pool_size: 1000,
            test_size: 20000,
            train_lr: 0.5,
            lr_decay: 0.1,
            available_per_round: None,
            optimizer: OptimizerConfig::default(),
        }
    }
}

impl SimConfig {
    pub fn round_lr(&self, round: usize) -> f64 {
        self.train_lr / (1.0 + self.lr_decay * round.saturating_sub(1) as f64)
    }

    fn check(&self, scenario: &Scenario) -> Result<()> {
        if self.feature_dim == 0 || self.test_size == 0 {
            return Err(Error::validation("feature_dim and test_size must be positive"));
        }
        if !(self.train_lr >= 0.0) || !(self.lr_decay >= 0.0) {
            return Err(Error::validation("train_lr and lr_decay must be non-negative"));
        }
        if let Some(n) = self.available_per_round {
            if n < scenario.budget() || n > scenario.vehicles.len() {
                return Err(Error::validation(format!(
                    "available_per_round {n} outside [{}, {}]",
                    scenario.budget(),
                    scenario.vehicles.len()
                )));
            }
        }
        Ok(())
    }
}

/// Outcome of the random events of one round for one selected vehicle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Realization {
    pub vehicle: u32,
    pub trajectory: usize,
    pub stop: usize,
    pub uploaded: bool,
}

/// Trajectory drawn by `vehicle` in the round with seed `round_seed`.
pub fn draw_trajectory(scenario: &Scenario, vehicle: u32, round_seed: u64) -> Result<usize> {
    let v = scenario.vehicle(vehicle)?;
    let probs: Vec<f64> = v.trajectories.iter().map(|t| t.prob).collect();
    let pick = WeightedIndex::new(&probs)
        .map_err(|e| Error::validation(format!("trajectory probabilities: {e}")))?;
    Ok(pick.sample(&mut stream(round_seed, &[1, u64::from(vehicle)])))
}

/// Draws `z ~ q` and `e ~ Bernoulli(q_rcv(z, g_z))` for every selected vehicle.
pub fn realize_round(objective: &Objective<'_>, decision: &Decision, round_seed: u64) -> Result<Vec<Realization>> {
    let scenario = objective.scenario();
    decision.validate(scenario)?;
    decision
        .selected
        .iter()
        .map(|&id| {
            let m = draw_trajectory(scenario, id, round_seed)?;
            let stop = decision.stops[&id][m];
            let p = objective.q_rcv(scenario.vehicle_index(id)?, m, stop);
            let uploaded = stream(round_seed, &[2, u64::from(id)]).random_bool(p.clamp(0.0, 1.0));
            Ok(Realization {
                vehicle: id,
                trajectory: m,
                stop,
                uploaded,
            })
        })
        .collect()
}

/// Weighted average of models; `None` when the weights sum to zero.
pub fn aggregate(models: &[(ToyModel, f64)]) -> Option<ToyModel> {
    let total: f64 = models.iter().map(|(_, w)| w).sum();
    if !(total > 0.0) {
        return None;
    }
    let mut out = models[0].0.clone();
    out.weights.iter_mut().for_each(|w| *w = 0.0);
    for (m, w) in models {
        for (o, v) in out.weights.iter_mut().zip(&m.weights) {
            *o += w / total * v;
        }
    }
    Some(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VehicleRound {
    pub vehicle: u32,
    pub trajectory: usize,
    pub stop: usize,
    pub uploaded: bool,
    pub samples: usize,
    /// Loss and gradient norm of the global model on the collected data.
    pub local_loss: f64,
    pub grad_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundLog {
    pub round: usize,
    pub strategy: Strategy,
    pub seed: u64,
    pub omega: f64,
    pub uploads: usize,
    pub test_acc: f64,
    pub test_loss: f64,
    pub vehicles: Vec<VehicleRound>,
}

fn probe(model: &ToyModel, data: &Dataset) -> (f64, f64) {
    if data.is_empty() {
        return (0.0, 0.0);
    }
    let all: Vec<usize> = (0..data.len()).collect();
    let (loss, grad) = model.loss_and_gradient(data, &all);
    (loss, grad.iter().map(|g| g * g).sum::<f64>().sqrt())
}

/// A scenario together with its objective tables and the synthesized data.
pub struct Simulation<'a> {
    scenario: &'a Scenario,
    config: SimConfig,
    objective: Objective<'a>,
    data: BlockData,
    seed: u64,
    /// Sense4FL decision when the vehicle set never changes.
    cached: Option<Decision>,
}

impl<'a> Simulation<'a> {
    pub fn new(scenario: &'a Scenario, config: SimConfig, seed: u64) -> Result<Self> {
        config.check(scenario)?;
        let data = synthesize_block_data(
            scenario,
            config.feature_dim,
            config.class_separation,
            config.noise_std,
            config.pool_size,
            config.test_size,
            derive_seed(seed, &[0xda7a]),
        )?;
        Ok(Self {
            scenario,
            objective: Objective::new(scenario, config.optimizer.timing),
            config,
            data,
            seed,
            cached: None,
        })
    }

    pub fn objective(&self) -> &Objective<'a> {
        &self.objective
    }

    pub fn data(&self) -> &BlockData {
        &self.data
    }

    fn sense4fl(&mut self, sub: &Scenario, churn: bool) -> Result<Decision> {
        if !churn {
            if let Some(d) = &self.cached {
                return Ok(d.clone());
            }
        }
        let decision = if churn {
            Solver::new(sub, self.config.optimizer.timing)
                .solve(&self.config.optimizer)?
                .decision
        } else {
            Solver::with_objective(self.objective.clone())
                .solve(&self.config.optimizer)?
                .decision
        };
        if !churn {
            self.cached = Some(decision.clone());
        }
        Ok(decision)
    }

    fn probe_scores(
        &self,
        sub: &Scenario,
        model: &ToyModel,
        round_seed: u64,
    ) -> Result<(BTreeMap<u32, f64>, BTreeMap<u32, f64>)> {
        let mut losses = BTreeMap::new();
        let mut norms = BTreeMap::new();
        for v in &sub.vehicles {
            let m = draw_trajectory(sub, v.id, round_seed)?;
            let t = &v.trajectories[m];
            let mut rng = stream(round_seed, &[3, u64::from(v.id)]);
            let data = self.data.collect(sub, t, t.collected_count, &mut rng)?;
            let (loss, norm) = probe(model, &data);
            losses.insert(v.id, loss);
            norms.insert(v.id, norm);
        }
        Ok((losses, norms))
    }

    fn decide(&mut self, strategy: Strategy, sub: &Scenario, churn: bool, model: &ToyModel, round_seed: u64) -> Result<Decision> {
        let mode = self.config.optimizer.timing;
        match strategy {
            Strategy::Sense4fl => self.sense4fl(sub, churn),
            Strategy::FullData => {
                let sel = self.sense4fl(sub, churn)?;
                baselines::full_data(sub, &sel)
            }
            Strategy::SelectionOnly => {
                let sel = self.sense4fl(sub, churn)?;
                baselines::selection_only(sub, &sel)
            }
            Strategy::Random => baselines::random_select(sub, derive_seed(round_seed, &[4])),
            Strategy::UploadingCentric => baselines::uploading_centric(sub, mode),
            Strategy::CoverageCentric => baselines::coverage_centric(sub),
            Strategy::GradientBased | Strategy::PowerOfChoice => {
                let (losses, norms) = self.probe_scores(sub, model, round_seed)?;
                if strategy == Strategy::GradientBased {
                    baselines::gradient_based(sub, &norms)
                } else {
                    baselines::power_of_choice(sub, &losses)
                }
            }
            Strategy::Centralized => Ok(Decision::default()),
        }
    }

    fn available(&self, round_seed: u64) -> Vec<u32> {
        let ids: Vec<u32> = self.scenario.vehicles.iter().map(|v| v.id).collect();
        match self.config.available_per_round {
            None => ids,
            Some(n) => {
                let mut keep: Vec<u32> = sample(&mut stream(round_seed, &[7]), ids.len(), n)
                    .into_iter()
                    .map(|i| ids[i])
                    .collect();
                keep.sort_unstable();
                keep
            }
        }
    }

    /// Full-batch gradient descent on the union of all block pools, each
    /// pool weighted by its block importance, i.e. the target distribution.
    fn pooled_descent(&self, model: &ToyModel, steps: u32, lr: f64) -> ToyModel {
        let mut out = model.clone();
        for _ in 0..steps {
            let mut grad = vec![0.0; out.weights.len()];
            for b in &self.scenario.blocks {
                let pool = &self.data.pools[&b.id];
                let all: Vec<usize> = (0..pool.len()).collect();
                let (_, g) = out.loss_and_gradient(pool, &all);
                grad.iter_mut().zip(&g).for_each(|(acc, gi)| *acc += b.weight * gi);
            }
            out.weights.iter_mut().zip(&grad).for_each(|(w, g)| *w -= lr * g);
        }
        out
    }

    pub fn run(&mut self, strategy: Strategy) -> Result<Vec<RoundLog>> {
        let scenario = self.scenario;
        let timing = &scenario.timing;
        let mut model = ToyModel::zeros(scenario.classes(), self.config.feature_dim);
        let mut logs = Vec::with_capacity(self.config.rounds);
        for round in 1..=self.config.rounds {
            let round_seed = derive_seed(self.seed, &[round as u64]);
            let lr = self.config.round_lr(round);
            let mut log = RoundLog {
                round,
                strategy,
                seed: self.seed,
                omega: 0.0,
                uploads: 0,
                test_acc: 0.0,
                test_loss: 0.0,
                vehicles: Vec::new(),
            };
            if strategy == Strategy::Centralized {
                model = self.pooled_descent(&model, timing.local_steps, lr);
                log.uploads = scenario.budget();
            } else {
                let churn = self.config.available_per_round.is_some();
                let sub = if churn {
                    scenario.restrict_to(&self.available(round_seed))
                } else {
                    scenario.clone()
                };
                let decision = self.decide(strategy, &sub, churn, &model, round_seed)?;
                log.omega = self.objective.effective_omega(&decision);
                let mut updates = Vec::new();
                for r in realize_round(&self.objective, &decision, round_seed)? {
                    let t = &scenario.vehicle(r.vehicle)?.trajectories[r.trajectory];
                    let mut rng = stream(round_seed, &[3, u64::from(r.vehicle)]);
                    let local = self.data.collect(scenario, t, r.stop, &mut rng)?;
                    let (local_loss, grad_norm) = probe(&model, &local);
                    if r.uploaded && !local.is_empty() {
                        let mut train_rng = stream(round_seed, &[5, u64::from(r.vehicle)]);
                        let trained = local_sgd(
                            &model,
                            &local,
                            timing.local_steps,
                            lr,
                            timing.batch_size as usize,
                            &mut train_rng,
                        )?;
                        let weight = self.objective.rho(r.vehicle, &decision.stops[&r.vehicle])?;
                        updates.push((trained, weight));
                    }
                    log.vehicles.push(VehicleRound {
                        vehicle: r.vehicle,
                        trajectory: r.trajectory,
                        stop: r.stop,
                        uploaded: r.uploaded,
                        samples: local.len(),
                        local_loss,
                        grad_norm,
                    });
                }
                // No usable upload: the global model carries over.
                if let Some(next) = aggregate(&updates) {
                    model = next;
                    log.uploads = updates.len();
                }
            }
            log.test_acc = model.accuracy(&self.data.test);
            log.test_loss = model.loss(&self.data.test);
            logs.push(log);
        }
        Ok(logs)
    }
}

pub fn run_training(scenario: &Scenario, strategy: Strategy, config: &SimConfig, seed: u64) -> Result<Vec<RoundLog>> {
    Simulation::new(scenario, config.clone(), seed)?.run(strategy)
}

pub fn write_csv<W: Write>(logs: &[RoundLog], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["round", "strategy", "seed", "omega", "uploads", "test_acc", "test_loss"])?;
    for l in logs {
        w.write_record([
            l.round.to_string(),
            l.strategy.to_string(),
            l.seed.to_string(),
            l.omega.to_string(),
            l.uploads.to_string(),
            l.test_acc.to_string(),
            l.test_loss.to_string(),
        ])?;
    }
    w.flush().map_err(|source| Error::Io {
        path: "<csv output>".into(),
        source,
    })?;
    Ok(())
}
