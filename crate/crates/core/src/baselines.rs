//! Reference selection strategies.
//!
//! Strategies that stop collecting as soon as a vehicle is selected use
//! `g = c` on every trajectory.

use std::collections::BTreeMap;

use rand::seq::index::sample;
use rand::Rng as _;

use crate::error::{Error, Result};
use crate::objective::Decision;
use crate::rng::rng_from_seed;
use crate::scenario::{Scenario, VehicleProfile};
use crate::timing::{reception_curve, TimingMode};

fn check_budget(scenario: &Scenario) -> Result<usize> {
    let budget = scenario.budget();
    if scenario.vehicles.len() < budget {
        return Err(Error::Infeasible(format!(
            "{} vehicles for a budget of {budget}",
            scenario.vehicles.len()
        )));
    }
    Ok(budget)
}

fn stops_at_start(v: &VehicleProfile) -> Vec<usize> {
    v.trajectories.iter().map(|t| t.collected_count).collect()
}

fn stops_at_end(v: &VehicleProfile) -> Vec<usize> {
    v.trajectories.iter().map(|t| t.len()).collect()
}

/// Top `S` vehicles by `score` (descending, ties to the smaller id), with
/// `g = c`.
fn top_by(scenario: &Scenario, budget: usize, score: impl Fn(&VehicleProfile) -> f64) -> Decision {
    let mut ranked: Vec<(f64, &VehicleProfile)> =
        scenario.vehicles.iter().map(|v| (score(v), v)).collect();
    ranked.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.id.cmp(&b.1.id)));
    Decision::new(
        ranked
            .into_iter()
            .take(budget)
            .map(|(_, v)| (v.id, stops_at_start(v))),
    )
}

/// Uniform `S`-subset; each stop uniform on `[c, N]`.
pub fn random_select(scenario: &Scenario, seed: u64) -> Result<Decision> {
    let budget = check_budget(scenario)?;
    let mut rng = rng_from_seed(seed);
    let mut picked = sample(&mut rng, scenario.vehicles.len(), budget).into_vec();
    picked.sort_unstable();
    Ok(Decision::new(picked.into_iter().map(|ix| {
        let v = &scenario.vehicles[ix];
        let stops = v
            .trajectories
            .iter()
            .map(|t| rng.random_range(t.stop_range()))
            .collect();
        (v.id, stops)
    })))
}

/// Expected reception probability when stopping immediately,
/// `sum_m q_m q_rcv(m, c)`.
pub fn upload_score(scenario: &Scenario, v: &VehicleProfile, mode: TimingMode) -> f64 {
    v.trajectories
        .iter()
        .enumerate()
        .map(|(m, t)| t.prob * reception_curve(&scenario.timing, v, m, t, mode)[0])
        .sum()
}

/// The `S` vehicles most likely to deliver their model, stopping at `g = c`.
pub fn uploading_centric(scenario: &Scenario, mode: TimingMode) -> Result<Decision> {
    let budget = check_budget(scenario)?;
    Ok(top_by(scenario, budget, |v| upload_score(scenario, v, mode)))
}

/// Greedy maximum coverage of street blocks in expectation over trajectories.
///
/// A block counts as covered with probability `1 - prod (1 - P_v(b))` over the
/// chosen vehicles, where `P_v(b)` is the probability that `v` drives through
/// `b` before stopping. Each step adds the vehicle and stops with the largest
/// marginal gain; per trajectory the smallest stop reaching that gain is used.
pub fn coverage_centric(scenario: &Scenario) -> Result<Decision> {
    let budget = check_budget(scenario)?;
    let mut miss: BTreeMap<u32, f64> = scenario.blocks.iter().map(|b| (b.id, 1.0)).collect();
    let mut chosen: Vec<(u32, Vec<usize>)> = Vec::with_capacity(budget);
    for _ in 0..budget {
        let mut best: Option<(f64, u32, Vec<usize>)> = None;
        for v in &scenario.vehicles {
            if chosen.iter().any(|(id, _)| *id == v.id) {
                continue;
            }
            let (gain, stops) = best_coverage_stops(v, &miss);
            if best.as_ref().is_none_or(|b| gain > b.0) {
                best = Some((gain, v.id, stops));
            }
        }
        let (_, id, stops) = best.expect("budget checked");
        let v = scenario.vehicle(id)?;
        for (b, p) in visit_probabilities(v, &stops) {
            *miss.get_mut(&b).expect("validated block") *= 1.0 - p;
        }
        chosen.push((id, stops));
    }
    Ok(Decision::new(chosen))
}

fn prefix_blocks(blocks: &[u32], g: usize) -> Vec<u32> {
    let mut out: Vec<u32> = blocks[..g].to_vec();
    out.sort_unstable();
    out.dedup();
    out
}

fn best_coverage_stops(v: &VehicleProfile, miss: &BTreeMap<u32, f64>) -> (f64, Vec<usize>) {
    let mut total = 0.0;
    let mut stops = Vec::with_capacity(v.trajectories.len());
    for t in &v.trajectories {
        let mut best = (f64::NEG_INFINITY, t.collected_count);
        for g in t.stop_range() {
            let gain: f64 = t.prob * prefix_blocks(&t.blocks, g).iter().map(|b| miss[b]).sum::<f64>();
            if gain > best.0 {
                best = (gain, g);
            }
        }
        total += best.0;
        stops.push(best.1);
    }
    (total, stops)
}

/// `P_v(b)` for every block `v` can reach under `stops`.
pub fn visit_probabilities(v: &VehicleProfile, stops: &[usize]) -> BTreeMap<u32, f64> {
    let mut out = BTreeMap::new();
    for (t, g) in v.trajectories.iter().zip(stops) {
        for b in prefix_blocks(&t.blocks, *g) {
            *out.entry(b).or_insert(0.0) += t.prob;
        }
    }
    out
}

/// Expected number of covered blocks of a decision.
pub fn expected_coverage(scenario: &Scenario, decision: &Decision) -> Result<f64> {
    let mut miss: BTreeMap<u32, f64> = scenario.blocks.iter().map(|b| (b.id, 1.0)).collect();
    for id in &decision.selected {
        let v = scenario.vehicle(*id)?;
        for (b, p) in visit_probabilities(v, &decision.stops[id]) {
            *miss.get_mut(&b).expect("validated block") *= 1.0 - p;
        }
    }
    Ok(miss.values().map(|m| 1.0 - m).sum())
}

fn top_by_scores(
    scenario: &Scenario,
    scores: &BTreeMap<u32, f64>,
    what: &'static str,
) -> Result<Decision> {
    let budget = check_budget(scenario)?;
    if let Some(v) = scenario.vehicles.iter().find(|v| !scores.contains_key(&v.id)) {
        return Err(Error::MissingScore { what, vehicle: v.id });
    }
    Ok(top_by(scenario, budget, |v| scores[&v.id]))
}

/// The `S` vehicles with the largest gradient norms.
pub fn gradient_based(scenario: &Scenario, grad_norms: &BTreeMap<u32, f64>) -> Result<Decision> {
    top_by_scores(scenario, grad_norms, "gradient norm")
}

/// The `S` vehicles with the largest local losses, ranked over every
/// available vehicle.
pub fn power_of_choice(scenario: &Scenario, losses: &BTreeMap<u32, f64>) -> Result<Decision> {
    top_by_scores(scenario, losses, "local loss")
}

/// Same vehicles; each collects along its whole predicted trajectory.
pub fn full_data(scenario: &Scenario, selection: &Decision) -> Result<Decision> {
    restop(scenario, selection, stops_at_end)
}

/// Same vehicles; each stops collecting when selected.
pub fn selection_only(scenario: &Scenario, selection: &Decision) -> Result<Decision> {
    restop(scenario, selection, stops_at_start)
}

fn restop(
    scenario: &Scenario,
    selection: &Decision,
    stops: fn(&VehicleProfile) -> Vec<usize>,
) -> Result<Decision> {
    selection
        .selected
        .iter()
        .map(|id| Ok((*id, stops(scenario.vehicle(*id)?))))
        .collect::<Result<Vec<_>>>()
        .map(Decision::new)
}
