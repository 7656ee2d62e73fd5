//! The per-round selection objective.
//!
//! For a vehicle `v` with stop vector `g_v`:
//!
//! * `rho_v = sum_m q_{v,m} * sum_{b in first g_{v,m}} l_b` is its aggregation
//!   weight,
//! * `xi_{v,m} = q_{v,m} q_rcv_{v,m} / sum_m' q_{v,m'} q_rcv_{v,m'}` mixes its
//!   trajectories,
//! * `d_v = sum_m xi_{v,m} * L1(p_{v,m}, target)` is its client divergence.
//!
//! Over the selected set, with `w_v = rho_v / sum rho`,
//! `omega = delta * sum_v w_v d_v + L1(sum_v w_v sum_m xi_{v,m} p_{v,m}, target)`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::divergence::{l1, prefix_distribution, target_distribution};
use crate::error::{Error, Result};
use crate::scenario::{LearningParams, Scenario, TimingParams};
use crate::timing::{reception_curve, TimingMode};

/// Local-drift factor `sum_{j=1}^{T-1} (1 + lr * lipschitz)^j`; zero for a
/// single local step.
pub fn delta(local_steps: u32, lr: f64, lipschitz: f64) -> f64 {
    let base = 1.0 + lr * lipschitz;
    (1..local_steps).fold(0.0, |acc, j| acc + base.powi(j as i32))
}

pub fn scenario_delta(scenario: &Scenario) -> f64 {
    delta(
        scenario.timing.local_steps,
        scenario.learning.lr,
        scenario.learning.lipschitz,
    )
}

/// Which vehicles are selected and where each stops collecting on every
/// candidate trajectory.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Decision {
    /// Selected vehicle ids, ascending.
    pub selected: Vec<u32>,
    /// Stop count per trajectory for every selected vehicle.
    pub stops: BTreeMap<u32, Vec<usize>>,
}

impl Decision {
    pub fn new(entries: impl IntoIterator<Item = (u32, Vec<usize>)>) -> Self {
        let stops: BTreeMap<u32, Vec<usize>> = entries.into_iter().collect();
        Self {
            selected: stops.keys().copied().collect(),
            stops,
        }
    }

    pub fn len(&self) -> usize {
        self.selected.len()
    }

    pub fn is_empty(&self) -> bool {
        self.selected.is_empty()
    }

    pub fn validate(&self, scenario: &Scenario) -> Result<()> {
        for id in &self.selected {
            let v = scenario.vehicle(*id)?;
            let stops = self.stops.get(id).ok_or_else(|| {
                Error::validation(format!("selected vehicle {id} has no stop vector"))
            })?;
            check_stops(scenario, *id, stops)?;
            debug_assert_eq!(stops.len(), v.trajectories.len());
        }
        if self.stops.len() != self.selected.len() {
            return Err(Error::validation("stop vectors given for unselected vehicles"));
        }
        Ok(())
    }
}

fn check_stops(scenario: &Scenario, vehicle: u32, stops: &[usize]) -> Result<()> {
    let v = scenario.vehicle(vehicle)?;
    if stops.len() != v.trajectories.len() {
        return Err(Error::validation(format!(
            "vehicle {vehicle} has {} trajectories but {} stop values",
            v.trajectories.len(),
            stops.len()
        )));
    }
    for (m, (t, g)) in v.trajectories.iter().zip(stops).enumerate() {
        t.check_stop(vehicle, m, *g)?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VehicleBreakdown {
    pub id: u32,
    pub rho: f64,
    pub d_tilde: f64,
    pub xi_bar: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DivergenceBreakdown {
    pub delta: f64,
    /// `delta` times the rho-weighted mean client divergence.
    pub d_client: f64,
    /// The rho-weighted mean client divergence itself.
    pub weighted_client: f64,
    pub d_global: f64,
    pub omega: f64,
    pub per_vehicle: Vec<VehicleBreakdown>,
}

/// Everything one trajectory contributes, tabulated for each `g = c..=N`.
#[derive(Debug, Clone)]
pub(crate) struct TrajectoryTable {
    pub prob: f64,
    pub first_stop: usize,
    pub dists: Vec<Vec<f64>>,
    pub emd: Vec<f64>,
    pub weight_sum: Vec<f64>,
    pub q_rcv: Vec<f64>,
}

impl TrajectoryTable {
    pub fn stops(&self) -> std::ops::RangeInclusive<usize> {
        self.first_stop..=self.first_stop + self.emd.len() - 1
    }

    pub fn last_stop(&self) -> usize {
        self.first_stop + self.emd.len() - 1
    }
}

/// Terms a vehicle contributes for one stop vector.
#[derive(Debug, Clone, PartialEq)]
pub struct VehicleTerms {
    pub rho: f64,
    pub d_tilde: f64,
    pub xi_bar: Vec<f64>,
    /// `sum_m xi_{v,m} p_{v,m}`.
    pub mixture: Vec<f64>,
}

/// Objective evaluator for one scenario under a fixed timing mode.
///
/// All `q_rcv` values are computed once at construction, so every evaluation
/// during a solve sees the same deterministic function.
#[derive(Debug, Clone)]
pub struct Objective<'a> {
    scenario: &'a Scenario,
    mode: TimingMode,
    delta: f64,
    target: Vec<f64>,
    tables: Vec<Vec<TrajectoryTable>>,
}

impl<'a> Objective<'a> {
    pub fn new(scenario: &'a Scenario, mode: TimingMode) -> Self {
        let target = target_distribution(scenario).into_inner();
        let tables = scenario
            .vehicles
            .iter()
            .map(|v| {
                v.trajectories
                    .iter()
                    .enumerate()
                    .map(|(m, t)| {
                        let q_rcv = reception_curve(&scenario.timing, v, m, t, mode);
                        let mut dists = Vec::new();
                        let mut emd = Vec::new();
                        let mut weight_sum = Vec::new();
                        for g in t.stop_range() {
                            let d = prefix_distribution(scenario, &t.blocks[..g]).into_inner();
                            emd.push(l1(&d, &target));
                            dists.push(d);
                            weight_sum.push(
                                t.blocks[..g]
                                    .iter()
                                    .map(|b| scenario.block(*b).expect("validated").weight)
                                    .sum(),
                            );
                        }
                        TrajectoryTable {
                            prob: t.prob,
                            first_stop: t.collected_count,
                            dists,
                            emd,
                            weight_sum,
                            q_rcv,
                        }
                    })
                    .collect()
            })
            .collect();
        Self {
            scenario,
            mode,
            delta: scenario_delta(scenario),
            target,
            tables,
        }
    }

    pub fn scenario(&self) -> &'a Scenario {
        self.scenario
    }

    pub fn mode(&self) -> TimingMode {
        self.mode
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn target(&self) -> &[f64] {
        &self.target
    }

    pub(crate) fn tables(&self, index: usize) -> &[TrajectoryTable] {
        &self.tables[index]
    }

    /// Tabulated `q_rcv` of vehicle `index`, trajectory `m`, stop `g`.
    pub fn q_rcv(&self, index: usize, m: usize, g: usize) -> f64 {
        let t = &self.tables[index][m];
        t.q_rcv[g - t.first_stop]
    }

    pub fn rho(&self, vehicle: u32, stops: &[usize]) -> Result<f64> {
        check_stops(self.scenario, vehicle, stops)?;
        let ix = self.scenario.vehicle_index(vehicle)?;
        Ok(self.rho_at(ix, stops))
    }

    pub(crate) fn rho_at(&self, index: usize, stops: &[usize]) -> f64 {
        self.tables[index]
            .iter()
            .zip(stops)
            .map(|(t, g)| t.prob * t.weight_sum[g - t.first_stop])
            .sum()
    }

    pub fn xi_bar(&self, vehicle: u32, stops: &[usize]) -> Result<Vec<f64>> {
        Ok(self.vehicle_terms(vehicle, stops)?.xi_bar)
    }

    pub fn client_divergence(&self, vehicle: u32, stops: &[usize]) -> Result<f64> {
        Ok(self.vehicle_terms(vehicle, stops)?.d_tilde)
    }

    pub fn vehicle_terms(&self, vehicle: u32, stops: &[usize]) -> Result<VehicleTerms> {
        check_stops(self.scenario, vehicle, stops)?;
        let ix = self.scenario.vehicle_index(vehicle)?;
        self.terms_at(ix, stops).ok_or(Error::Ineligible(vehicle))
    }

    /// `None` when no trajectory can deliver a model under `stops`.
    pub(crate) fn terms_at(&self, index: usize, stops: &[usize]) -> Option<VehicleTerms> {
        let tables = &self.tables[index];
        let raw: Vec<f64> = tables
            .iter()
            .zip(stops)
            .map(|(t, g)| t.prob * t.q_rcv[g - t.first_stop])
            .collect();
        let total: f64 = raw.iter().sum();
        if total <= 0.0 {
            return None;
        }
        let xi_bar: Vec<f64> = raw.iter().map(|x| x / total).collect();
        let mut mixture = vec![0.0; self.target.len()];
        let mut d_tilde = 0.0;
        for ((t, g), xi) in tables.iter().zip(stops).zip(&xi_bar) {
            let k = g - t.first_stop;
            d_tilde += xi * t.emd[k];
            for (acc, p) in mixture.iter_mut().zip(&t.dists[k]) {
                *acc += xi * p;
            }
        }
        Some(VehicleTerms {
            rho: self.rho_at(index, stops),
            d_tilde,
            xi_bar,
            mixture,
        })
    }

    pub fn global_divergence(&self, decision: &Decision) -> Result<f64> {
        let terms = self.decision_terms(decision)?;
        let agg = Aggregate::from_terms(self.target.len(), terms.iter().map(|(_, t)| t));
        if agg.weight <= 0.0 {
            return Err(Error::ZeroWeight);
        }
        Ok(agg.global(&self.target))
    }

    /// Full breakdown. A decision whose aggregation weights are all zero gets
    /// `omega = +inf`.
    pub fn omega(&self, decision: &Decision) -> Result<DivergenceBreakdown> {
        let terms = self.decision_terms(decision)?;
        Ok(self.breakdown(&terms))
    }

    /// Omega counting only selected vehicles that can deliver a model under
    /// their stops; `+inf` when none can. Used to score decisions produced
    /// by strategies that ignore deliverability.
    pub fn effective_omega(&self, decision: &Decision) -> f64 {
        let terms: Vec<VehicleTerms> = decision
            .selected
            .iter()
            .filter_map(|id| {
                let ix = self.scenario.vehicle_index(*id).ok()?;
                self.terms_at(ix, decision.stops.get(id)?)
            })
            .collect();
        Aggregate::from_terms(self.target.len(), terms.iter()).omega(self.delta, &self.target)
    }

    fn decision_terms(&self, decision: &Decision) -> Result<Vec<(u32, VehicleTerms)>> {
        decision.validate(self.scenario)?;
        decision
            .selected
            .iter()
            .map(|id| Ok((*id, self.vehicle_terms(*id, &decision.stops[id])?)))
            .collect()
    }

    pub fn breakdown(&self, terms: &[(u32, VehicleTerms)]) -> DivergenceBreakdown {
        let agg = Aggregate::from_terms(self.target.len(), terms.iter().map(|(_, t)| t));
        let per_vehicle = terms
            .iter()
            .map(|(id, t)| VehicleBreakdown {
                id: *id,
                rho: t.rho,
                d_tilde: t.d_tilde,
                xi_bar: t.xi_bar.clone(),
            })
            .collect();
        if agg.weight <= 0.0 {
            return DivergenceBreakdown {
                delta: self.delta,
                d_client: f64::INFINITY,
                weighted_client: f64::INFINITY,
                d_global: f64::INFINITY,
                omega: f64::INFINITY,
                per_vehicle,
            };
        }
        let weighted_client = agg.weighted_client();
        let d_global = agg.global(&self.target);
        DivergenceBreakdown {
            delta: self.delta,
            d_client: self.delta * weighted_client,
            weighted_client,
            d_global,
            omega: self.delta * weighted_client + d_global,
            per_vehicle,
        }
    }
}

/// Running sums over a selected set: `sum rho`, `sum rho d`, `sum rho mix`.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Aggregate {
    pub weight: f64,
    pub client: f64,
    pub mix: Vec<f64>,
}

impl Aggregate {
    pub fn empty(classes: usize) -> Self {
        Self {
            weight: 0.0,
            client: 0.0,
            mix: vec![0.0; classes],
        }
    }

    pub fn from_terms<'t>(classes: usize, terms: impl IntoIterator<Item = &'t VehicleTerms>) -> Self {
        let mut agg = Self::empty(classes);
        for t in terms {
            agg.add(t);
        }
        agg
    }

    pub fn add(&mut self, t: &VehicleTerms) {
        self.weight += t.rho;
        self.client += t.rho * t.d_tilde;
        for (a, p) in self.mix.iter_mut().zip(&t.mixture) {
            *a += t.rho * p;
        }
    }

    pub fn weighted_client(&self) -> f64 {
        self.client / self.weight
    }

    pub fn global(&self, target: &[f64]) -> f64 {
        self.mix
            .iter()
            .zip(target)
            .map(|(m, t)| (m / self.weight - t).abs())
            .sum()
    }

    pub fn omega(&self, delta: f64, target: &[f64]) -> f64 {
        if self.weight <= 0.0 {
            return f64::INFINITY;
        }
        delta * self.weighted_client() + self.global(target)
    }

    /// Omega of `self` plus one more vehicle, without mutating `self`.
    pub fn omega_with(&self, extra: &VehicleTerms, delta: f64, target: &[f64]) -> f64 {
        let weight = self.weight + extra.rho;
        if weight <= 0.0 {
            return f64::INFINITY;
        }
        let client = (self.client + extra.rho * extra.d_tilde) / weight;
        let global: f64 = self
            .mix
            .iter()
            .zip(&extra.mixture)
            .zip(target)
            .map(|((m, e), t)| ((m + extra.rho * e) / weight - t).abs())
            .sum();
        delta * client + global
    }
}

pub fn rho(scenario: &Scenario, vehicle: u32, stops: &[usize]) -> Result<f64> {
    Objective::new(scenario, TimingMode::Deterministic).rho(vehicle, stops)
}

pub fn xi_bar(scenario: &Scenario, vehicle: u32, stops: &[usize], mode: TimingMode) -> Result<Vec<f64>> {
    Objective::new(scenario, mode).xi_bar(vehicle, stops)
}

pub fn client_divergence(
    scenario: &Scenario,
    vehicle: u32,
    stops: &[usize],
    mode: TimingMode,
) -> Result<f64> {
    Objective::new(scenario, mode).client_divergence(vehicle, stops)
}

pub fn global_divergence(scenario: &Scenario, decision: &Decision, mode: TimingMode) -> Result<f64> {
    Objective::new(scenario, mode).global_divergence(decision)
}

pub fn omega(scenario: &Scenario, decision: &Decision, mode: TimingMode) -> Result<DivergenceBreakdown> {
    Objective::new(scenario, mode).omega(decision)
}

/// Constants of the loss bound. None of them can be read off a scenario;
/// callers supply estimates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundParams {
    /// `beta`
    pub smoothness: f64,
    /// `L`
    pub loss_lipschitz: f64,
    /// `epsilon`
    pub loss_gap: f64,
    /// `phi`
    pub init_distance: f64,
    /// `U`
    pub max_grad_norm: f64,
    /// `K`
    pub rounds: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "status")]
pub enum BoundValue {
    Bound { value: f64 },
    Infeasible { denominator: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub value: BoundValue,
    /// `lr <= 1 / beta`
    pub lr_within_smoothness: bool,
    /// `lr < (2 / beta) (1 - L U sum(omega) / (K T phi eps^2))`
    pub lr_within_divergence_limit: bool,
}

/// Upper bound on the final-round loss gap,
/// `1 / (lr (phi K T (1 - beta lr / 2) - (L / eps^2) U sum(omega)))`.
pub fn convergence_bound(
    omega_per_round: &[f64],
    params: &BoundParams,
    timing: &TimingParams,
    learning: &LearningParams,
) -> BoundReport {
    let lr = learning.lr;
    let steps = timing.local_steps as f64;
    let total: f64 = omega_per_round.iter().sum();
    let BoundParams {
        smoothness: beta,
        loss_lipschitz: l,
        loss_gap: eps,
        init_distance: phi,
        max_grad_norm: u,
        rounds: k,
    } = *params;
    let denominator =
        lr * (phi * k * steps * (1.0 - beta * lr / 2.0) - l / (eps * eps) * u * total);
    let value = if denominator > 0.0 {
        BoundValue::Bound {
            value: 1.0 / denominator,
        }
    } else {
        BoundValue::Infeasible { denominator }
    };
    let limit = 2.0 / beta * (1.0 - l * u * total / (k * steps * phi * eps * eps));
    BoundReport {
        value,
        lr_within_smoothness: lr <= 1.0 / beta,
        lr_within_divergence_limit: lr < limit,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testkit::{block, scenario, trajectory, vehicle};

    #[test]
    fn delta_examples() {
        assert_eq!(delta(1, 0.001, 0.01), 0.0);
        assert!((delta(2, 0.001, 0.01) - 1.00001).abs() < 1e-15);
        assert!((delta(3, 0.001, 0.01) - 2.0000300001).abs() < 1e-12);
    }

    /// Two blocks with (1,0) and (0,1), equal weights: target (0.5, 0.5).
    fn two_block_pair() -> Scenario {
        scenario(
            vec![
                block(1, 100.0, &[1.0, 0.0], 0.5),
                block(2, 100.0, &[0.0, 1.0], 0.5),
            ],
            vec![
                vehicle(1, vec![trajectory(&[1], 1.0, 1, &[10.0])]),
                vehicle(2, vec![trajectory(&[2], 1.0, 1, &[10.0])]),
            ],
            2,
        )
    }

    #[test]
    fn rho_examples() {
        let s = scenario(
            vec![
                block(1, 100.0, &[1.0, 0.0], 0.1),
                block(2, 100.0, &[0.0, 1.0], 0.2),
                block(3, 100.0, &[0.5, 0.5], 0.3),
                block(4, 100.0, &[0.5, 0.5], 0.4),
            ],
            vec![vehicle(
                1,
                vec![
                    trajectory(&[1, 2, 4], 0.6, 1, &[10.0; 3]),
                    trajectory(&[3, 1], 0.4, 1, &[10.0; 2]),
                ],
            )],
            1,
        );
        // Prefix weight sums: (0.1 + 0.2) and 0.3.
        assert!((rho(&s, 1, &[2, 1]).unwrap() - 0.3).abs() < 1e-15);
        assert!(matches!(rho(&s, 1, &[4, 1]), Err(Error::StopOutOfRange { .. })));

        let zero = scenario(
            vec![block(1, 100.0, &[1.0], 0.0), block(2, 100.0, &[1.0], 1.0)],
            vec![vehicle(1, vec![trajectory(&[1], 1.0, 1, &[10.0])])],
            1,
        );
        assert_eq!(rho(&zero, 1, &[1]).unwrap(), 0.0);
    }

    #[test]
    fn xi_bar_examples() {
        // Trajectory 1 always meets the deadline; trajectory 0 never does past c.
        let s = scenario(
            vec![block(1, 100.0, &[1.0, 0.0], 0.5), block(2, 100.0, &[0.0, 1.0], 0.5)],
            vec![vehicle(
                1,
                vec![
                    trajectory(&[1, 2], 0.6, 1, &[10.0, 100.0]),
                    trajectory(&[2, 1], 0.4, 1, &[10.0, 10.0]),
                ],
            )],
            1,
        );
        let det = TimingMode::Deterministic;
        let xi = xi_bar(&s, 1, &[1, 2], det).unwrap();
        assert!((xi[0] - 0.6).abs() < 1e-15 && (xi[1] - 0.4).abs() < 1e-15);
        let xi = xi_bar(&s, 1, &[2, 2], det).unwrap();
        assert_eq!(xi, vec![0.0, 1.0]);

        let single = crate::testkit::line_scenario(&[30.0, 30.0], 1);
        assert_eq!(xi_bar(&single, 1, &[1], det).unwrap(), vec![1.0]);

        let mut dead = single.clone();
        dead.timing.deadline_s = 1.0;
        assert!(matches!(xi_bar(&dead, 1, &[1], det), Err(Error::Ineligible(1))));
    }

    #[test]
    fn xi_normalizes_products() {
        let obj_terms = |q_rcv: [f64; 2]| {
            let q = [0.6, 0.4];
            let raw = [q[0] * q_rcv[0], q[1] * q_rcv[1]];
            let s: f64 = raw.iter().sum();
            [raw[0] / s, raw[1] / s]
        };
        let xi = obj_terms([1.0, 0.5]);
        assert!((xi[0] - 0.75).abs() < 1e-15 && (xi[1] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn client_divergence_examples() {
        let s = two_block_pair();
        let det = TimingMode::Deterministic;
        // Collected (1,0) against target (0.5,0.5).
        assert!((client_divergence(&s, 1, &[1], det).unwrap() - 1.0).abs() < 1e-15);

        let matched = scenario(
            vec![block(1, 100.0, &[0.3, 0.7], 0.5), block(2, 100.0, &[0.3, 0.7], 0.5)],
            vec![vehicle(1, vec![trajectory(&[1, 2], 1.0, 1, &[10.0, 10.0])])],
            1,
        );
        assert!(client_divergence(&matched, 1, &[2], det).unwrap().abs() < 1e-15);
    }

    #[test]
    fn global_and_omega_examples() {
        let s = two_block_pair();
        let det = TimingMode::Deterministic;
        let both = Decision::new([(1, vec![1]), (2, vec![1])]);
        assert!(global_divergence(&s, &both, det).unwrap().abs() < 1e-15);
        let b = omega(&s, &both, det).unwrap();
        assert!((b.omega - 1.00001).abs() < 1e-12);
        assert!((b.weighted_client - 1.0).abs() < 1e-15);

        let mut one = s.clone();
        one.budget_s = 1;
        let single = Decision::new([(1, vec![1])]);
        assert!((global_divergence(&one, &single, det).unwrap() - 1.0).abs() < 1e-15);

        let mut t1 = s.clone();
        t1.timing.local_steps = 1;
        let b = omega(&t1, &both, det).unwrap();
        assert_eq!(b.delta, 0.0);
        assert_eq!(b.omega, b.d_global);
    }

    #[test]
    fn zero_weight_decision_is_infinite() {
        let s = scenario(
            vec![block(1, 100.0, &[1.0, 0.0], 0.0), block(2, 100.0, &[0.0, 1.0], 1.0)],
            vec![vehicle(1, vec![trajectory(&[1], 1.0, 1, &[10.0])])],
            1,
        );
        let d = Decision::new([(1, vec![1])]);
        let det = TimingMode::Deterministic;
        assert!(omega(&s, &d, det).unwrap().omega.is_infinite());
        assert!(matches!(global_divergence(&s, &d, det), Err(Error::ZeroWeight)));
    }

    #[test]
    fn decision_validation() {
        let s = two_block_pair();
        let obj = Objective::new(&s, TimingMode::Deterministic);
        let missing = Decision {
            selected: vec![1],
            stops: BTreeMap::new(),
        };
        assert!(obj.omega(&missing).is_err());
        let unknown = Decision::new([(9, vec![1])]);
        assert!(matches!(obj.omega(&unknown), Err(Error::UnknownVehicle(9))));
    }

    #[test]
    fn bound_examples() {
        let params = BoundParams {
            smoothness: 1.0,
            loss_lipschitz: 1.0,
            loss_gap: 1.0,
            init_distance: 1.0,
            max_grad_norm: 1.0,
            rounds: 10.0,
        };
        let timing = TimingParams::default();
        let learning = LearningParams::default();
        let r = convergence_bound(&[0.0; 10], &params, &timing, &learning);
        match r.value {
            BoundValue::Bound { value } => assert!((value - 1.0 / (0.001 * 19.99)).abs() < 1e-9),
            other => panic!("{other:?}"),
        }
        assert!((1.0f64 / (0.001 * 19.99) - 50.025).abs() < 1e-3);
        assert!(r.lr_within_smoothness && r.lr_within_divergence_limit);

        let r = convergence_bound(&[100.0], &params, &timing, &learning);
        assert!(matches!(r.value, BoundValue::Infeasible { .. }));
        assert!(!r.lr_within_divergence_limit);

        let mut last = 0.0;
        for total in [0.0, 1.0, 5.0, 15.0] {
            let BoundValue::Bound { value } =
                convergence_bound(&[total], &params, &timing, &learning).value
            else {
                panic!("expected a bound");
            };
            assert!(value > last);
            last = value;
        }
    }
}
