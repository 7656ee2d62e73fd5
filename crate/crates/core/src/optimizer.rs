//! Two-step vehicle selection.
//!
//! Step 1 drops the global term and solves the fractional program
//! `min_a delta * sum a rho d / sum a rho` exactly by bisection on the ratio
//! `d`: for fixed `d`, the set minimizing `sum a rho (delta d_v - d)` is the
//! `S` vehicles with the smallest per-vehicle terms, and the ratio `d` is
//! attainable iff that sum is `<= 0`. Step 2 starts from that set and applies
//! best-improvement single swaps on the full objective.
//!
//! [`brute_force`] enumerates every `S`-subset and every stop vector and
//! is the reference the two steps are checked against.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objective::{Aggregate, Decision, DivergenceBreakdown, Objective, VehicleTerms};
use crate::scenario::Scenario;
use crate::timing::TimingMode;

/// Stop-vector products up to this size are searched exhaustively;
/// larger ones by coordinate descent.
pub const MAX_EXACT_PRODUCT: usize = 256;
pub const COORDINATE_SWEEPS: usize = 5;
/// Combination limit of [`brute_force`].
pub const ORACLE_LIMIT: f64 = 1e7;
/// A swap must lower omega by more than this to be accepted.
const IMPROVEMENT_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerConfig {
    pub bisection_tol: f64,
    pub max_local_search_iters: usize,
    pub timing: TimingMode,
    /// Also try re-inserting the removed vehicle itself with re-optimized
    /// stops, so a move can change the stops of an already selected vehicle.
    pub reoptimize_selected: bool,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            bisection_tol: 1e-6,
            max_local_search_iters: 50,
            timing: TimingMode::default(),
            reoptimize_selected: true,
        }
    }
}

impl OptimizerConfig {
    fn check(&self) -> Result<()> {
        if !(self.bisection_tol > 0.0) {
            return Err(Error::validation("bisection_tol must be positive"));
        }
        if self.max_local_search_iters < 1 {
            return Err(Error::validation("max_local_search_iters must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Swap {
    pub removed: u32,
    pub inserted: u32,
    pub omega: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub decision: Decision,
    pub breakdown: DivergenceBreakdown,
    /// Smallest attainable ratio found by the bisection.
    pub d_dagger: f64,
    /// Step-1 objective `delta' * sum rho d / sum rho` of the step-1 set,
    /// where `delta'` is the drift factor used during step 1.
    pub step1_value: f64,
    /// Omega of the step-1 set.
    pub initial_omega: f64,
    pub iters_used: usize,
    pub swap_log: Vec<Swap>,
    pub ineligible: Vec<u32>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone)]
struct Choice {
    index: usize,
    stops: Vec<usize>,
    terms: VehicleTerms,
}

/// Per-vehicle search space.
#[derive(Debug, Clone)]
enum StopSpace {
    Ineligible,
    /// Every admissible stop vector in lexicographic order.
    Exact(Vec<(Vec<usize>, VehicleTerms)>),
    /// Too many vectors to list; searched by coordinate descent from `start`.
    Large { start: Vec<usize> },
}

/// Objective tables plus per-vehicle search spaces, shared by both steps.
pub struct Solver<'a> {
    obj: Objective<'a>,
    spaces: Vec<StopSpace>,
    notes: Vec<String>,
}

impl<'a> Solver<'a> {
    pub fn new(scenario: &'a Scenario, mode: TimingMode) -> Self {
        Self::with_objective(Objective::new(scenario, mode))
    }

    pub fn with_objective(obj: Objective<'a>) -> Self {
        let mut notes = Vec::new();
        let spaces = (0..obj.scenario().vehicles.len())
            .map(|ix| {
                let space = build_space(&obj, ix, MAX_EXACT_PRODUCT);
                if let StopSpace::Large { .. } = space {
                    notes.push(format!(
                        "vehicle {}: stop vectors searched by coordinate descent",
                        obj.scenario().vehicles[ix].id
                    ));
                }
                space
            })
            .collect();
        Self { obj, spaces, notes }
    }

    pub fn objective(&self) -> &Objective<'a> {
        &self.obj
    }

    fn id(&self, ix: usize) -> u32 {
        self.obj.scenario().vehicles[ix].id
    }

    pub fn eligible(&self) -> Vec<u32> {
        (0..self.spaces.len())
            .filter(|ix| !matches!(self.spaces[*ix], StopSpace::Ineligible))
            .map(|ix| self.id(ix))
            .collect()
    }

    pub fn ineligible(&self) -> Vec<u32> {
        (0..self.spaces.len())
            .filter(|ix| matches!(self.spaces[*ix], StopSpace::Ineligible))
            .map(|ix| self.id(ix))
            .collect()
    }

    /// Stop vector of vehicle `ix` minimizing `score`, with ties going to
    /// the lexicographically smallest vector.
    fn minimize<F>(&self, ix: usize, score: F) -> Option<(Vec<usize>, VehicleTerms, f64)>
    where
        F: Fn(&VehicleTerms) -> f64,
    {
        match &self.spaces[ix] {
            StopSpace::Ineligible => None,
            StopSpace::Exact(list) => {
                let mut best: Option<(usize, f64)> = None;
                for (k, (_, terms)) in list.iter().enumerate() {
                    let s = score(terms);
                    if best.is_none_or(|(_, b)| s < b) {
                        best = Some((k, s));
                    }
                }
                best.map(|(k, s)| (list[k].0.clone(), list[k].1.clone(), s))
            }
            StopSpace::Large { start } => {
                let tables = self.obj.tables(ix);
                let mut stops = start.clone();
                let mut terms = self.obj.terms_at(ix, &stops).expect("admissible start");
                let mut value = score(&terms);
                for _ in 0..COORDINATE_SWEEPS {
                    let mut moved = false;
                    for m in 0..stops.len() {
                        let keep = stops[m];
                        let mut best_g = keep;
                        for g in tables[m].stops() {
                            if g == keep {
                                continue;
                            }
                            stops[m] = g;
                            if let Some(t) = admissible_terms(&self.obj, ix, &stops) {
                                let s = score(&t);
                                if s < value {
                                    value = s;
                                    terms = t;
                                    best_g = g;
                                }
                            }
                        }
                        stops[m] = best_g;
                        moved |= best_g != keep;
                    }
                    if !moved {
                        break;
                    }
                }
                Some((stops, terms, value))
            }
        }
    }

    /// Stops of vehicle `vehicle` minimizing `rho (delta d - d)`.
    pub fn optimize_g_for_metric(&self, vehicle: u32, d: f64, delta: f64) -> Result<(Vec<usize>, f64)> {
        let ix = self.obj.scenario().vehicle_index(vehicle)?;
        self.minimize(ix, |t| t.rho * (delta * t.d_tilde - d))
            .map(|(stops, _, v)| (stops, v))
            .ok_or(Error::Ineligible(vehicle))
    }

    /// Vehicles of the sorted first-`S` prefix at ratio `d`, and the prefix
    /// sum of their metrics.
    fn probe(&self, d: f64, delta: f64, budget: usize) -> (Vec<Choice>, f64) {
        let mut scored: Vec<(f64, u32, Choice)> = (0..self.spaces.len())
            .filter_map(|ix| {
                let (stops, terms, metric) =
                    self.minimize(ix, |t| t.rho * (delta * t.d_tilde - d))?;
                Some((metric, self.id(ix), Choice { index: ix, stops, terms }))
            })
            .collect();
        scored.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        scored.truncate(budget);
        let sum = scored.iter().map(|s| s.0).sum();
        (scored.into_iter().map(|s| s.2).collect(), sum)
    }

    /// Step-1 feasibility at ratio `d`: the first-`S` prefix sum of
    /// `rho (delta d - d)` is non-positive. `delta` is the drift factor used
    /// in step 1 (1 in place of 0).
    pub fn feasible_at(&self, d: f64) -> bool {
        let delta = self.obj.delta();
        let delta = if delta <= 0.0 { 1.0 } else { delta };
        self.probe(d, delta, self.obj.scenario().budget()).1 <= 0.0
    }

    fn step1(&self, config: &OptimizerConfig) -> Result<Step1> {
        let scenario = self.obj.scenario();
        let budget = scenario.budget();
        let eligible = self.eligible().len();
        if eligible < budget {
            return Err(Error::Infeasible(format!(
                "{eligible} eligible vehicles for a budget of {budget} (ineligible: {:?})",
                self.ineligible()
            )));
        }
        let true_delta = self.obj.delta();
        let surrogate = true_delta <= 0.0;
        let delta = if surrogate { 1.0 } else { true_delta };
        let (mut lo, mut hi) = (0.0, 2.0 * delta);
        let mut probes = 0;
        while hi - lo >= config.bisection_tol {
            let mid = 0.5 * (lo + hi);
            let (_, sum) = self.probe(mid, delta, budget);
            probes += 1;
            if sum <= 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let (mut chosen, _) = self.probe(hi, delta, budget);
        chosen.sort_by_key(|c| self.id(c.index));
        let agg = Aggregate::from_terms(self.obj.target().len(), chosen.iter().map(|c| &c.terms));
        Ok(Step1 {
            d_dagger: hi,
            value: delta * agg.weighted_client(),
            surrogate,
            probes,
            chosen,
        })
    }

    fn omega_of(&self, chosen: &[Choice]) -> f64 {
        Aggregate::from_terms(self.obj.target().len(), chosen.iter().map(|c| &c.terms))
            .omega(self.obj.delta(), self.obj.target())
    }

    /// Best-improvement single swaps on omega.
    fn step2(&self, chosen: &mut [Choice], config: &OptimizerConfig) -> (usize, Vec<Swap>) {
        let delta = self.obj.delta();
        let target = self.obj.target();
        let classes = target.len();
        let mut current = self.omega_of(chosen);
        let mut log = Vec::new();
        let mut iters = 0;
        while iters < config.max_local_search_iters {
            iters += 1;
            let mut outside: Vec<usize> = (0..self.spaces.len())
                .filter(|ix| !matches!(self.spaces[*ix], StopSpace::Ineligible))
                .filter(|ix| chosen.iter().all(|c| c.index != *ix))
                .collect();
            outside.sort_by_key(|ix| self.id(*ix));
            let mut best: Option<(f64, usize, Choice)> = None;
            for pos in 0..chosen.len() {
                let base = Aggregate::from_terms(
                    classes,
                    chosen
                        .iter()
                        .enumerate()
                        .filter(|(k, _)| *k != pos)
                        .map(|(_, c)| &c.terms),
                );
                let own = chosen[pos].index;
                let pool = config
                    .reoptimize_selected
                    .then_some(own)
                    .into_iter()
                    .chain(outside.iter().copied());
                for cand in pool {
                    let Some((stops, terms, value)) =
                        self.minimize(cand, |t| base.omega_with(t, delta, target))
                    else {
                        continue;
                    };
                    if best.as_ref().is_none_or(|b| value < b.0) {
                        best = Some((value, pos, Choice { index: cand, stops, terms }));
                    }
                }
            }
            match best {
                Some((value, pos, choice)) if value < current - IMPROVEMENT_EPS => {
                    let removed = self.id(chosen[pos].index);
                    let inserted = self.id(choice.index);
                    chosen[pos] = choice;
                    chosen.sort_by_key(|c| self.id(c.index));
                    current = self.omega_of(chosen);
                    log.push(Swap {
                        removed,
                        inserted,
                        omega: current,
                    });
                }
                _ => break,
            }
        }
        (iters, log)
    }

    fn selection(&self, step1: &Step1, chosen: &[Choice], iters: usize, swaps: Vec<Swap>) -> Selection {
        let terms: Vec<(u32, VehicleTerms)> = chosen
            .iter()
            .map(|c| (self.id(c.index), c.terms.clone()))
            .collect();
        let mut notes = self.notes.clone();
        if step1.surrogate {
            notes.push(
                "delta = 0 (one local step): step 1 ran with surrogate delta' = 1, \
                 step 2 minimized the global divergence alone"
                    .into(),
            );
        }
        notes.push(format!("step 1 used {} bisection probes", step1.probes));
        Selection {
            decision: Decision::new(chosen.iter().map(|c| (self.id(c.index), c.stops.clone()))),
            breakdown: self.obj.breakdown(&terms),
            d_dagger: step1.d_dagger,
            step1_value: step1.value,
            initial_omega: self.omega_of(&step1.chosen),
            iters_used: iters,
            swap_log: swaps,
            ineligible: self.ineligible(),
            notes,
        }
    }

    pub fn step1_bisection(&self, config: &OptimizerConfig) -> Result<Selection> {
        config.check()?;
        let step1 = self.step1(config)?;
        Ok(self.selection(&step1, &step1.chosen, 0, Vec::new()))
    }

    pub fn step2_local_search(&self, initial: &Selection, config: &OptimizerConfig) -> Result<Selection> {
        config.check()?;
        let mut chosen = initial
            .decision
            .selected
            .iter()
            .map(|id| {
                let index = self.obj.scenario().vehicle_index(*id)?;
                let stops = initial.decision.stops[id].clone();
                let terms = self.obj.vehicle_terms(*id, &stops)?;
                Ok(Choice { index, stops, terms })
            })
            .collect::<Result<Vec<_>>>()?;
        let (iters, swaps) = self.step2(&mut chosen, config);
        let terms: Vec<(u32, VehicleTerms)> = chosen
            .iter()
            .map(|c| (self.id(c.index), c.terms.clone()))
            .collect();
        let mut out = initial.clone();
        out.decision = Decision::new(chosen.iter().map(|c| (self.id(c.index), c.stops.clone())));
        out.breakdown = self.obj.breakdown(&terms);
        out.iters_used = iters;
        out.swap_log = swaps;
        Ok(out)
    }

    pub fn solve(&self, config: &OptimizerConfig) -> Result<Selection> {
        config.check()?;
        let step1 = self.step1(config)?;
        let mut chosen = step1.chosen.clone();
        let (iters, swaps) = self.step2(&mut chosen, config);
        Ok(self.selection(&step1, &chosen, iters, swaps))
    }
}

struct Step1 {
    d_dagger: f64,
    value: f64,
    surrogate: bool,
    probes: usize,
    chosen: Vec<Choice>,
}

/// Terms for `stops` if the vehicle can deliver a model with non-zero
/// aggregation weight.
fn admissible_terms(obj: &Objective<'_>, ix: usize, stops: &[usize]) -> Option<VehicleTerms> {
    obj.terms_at(ix, stops).filter(|t| t.rho > 0.0)
}

fn stop_product(obj: &Objective<'_>, ix: usize) -> f64 {
    obj.tables(ix)
        .iter()
        .map(|t| (t.last_stop() - t.first_stop + 1) as f64)
        .product()
}

fn enumerate_stops(obj: &Objective<'_>, ix: usize) -> Vec<(Vec<usize>, VehicleTerms)> {
    let tables = obj.tables(ix);
    let mut stops: Vec<usize> = tables.iter().map(|t| t.first_stop).collect();
    let mut out = Vec::new();
    loop {
        if let Some(t) = admissible_terms(obj, ix, &stops) {
            out.push((stops.clone(), t));
        }
        // Odometer increment, last trajectory fastest.
        let mut m = stops.len();
        loop {
            if m == 0 {
                return out;
            }
            m -= 1;
            if stops[m] < tables[m].last_stop() {
                stops[m] += 1;
                for (k, t) in tables.iter().enumerate().skip(m + 1) {
                    stops[k] = t.first_stop;
                }
                break;
            }
        }
    }
}

fn first_admissible(obj: &Objective<'_>, ix: usize) -> Option<Vec<usize>> {
    let tables = obj.tables(ix);
    let base: Vec<usize> = tables.iter().map(|t| t.first_stop).collect();
    if admissible_terms(obj, ix, &base).is_some() {
        return Some(base);
    }
    // Delivery is most likely at g = c, so keep every other trajectory there
    // and move one at a time.
    for (m, t) in tables.iter().enumerate() {
        for g in t.stops() {
            let mut stops = base.clone();
            stops[m] = g;
            if admissible_terms(obj, ix, &stops).is_some() {
                return Some(stops);
            }
        }
    }
    None
}

fn build_space(obj: &Objective<'_>, ix: usize, exact_limit: usize) -> StopSpace {
    if stop_product(obj, ix) <= exact_limit as f64 {
        let list = enumerate_stops(obj, ix);
        if list.is_empty() {
            StopSpace::Ineligible
        } else {
            StopSpace::Exact(list)
        }
    } else {
        match first_admissible(obj, ix) {
            Some(start) => StopSpace::Large { start },
            None => StopSpace::Ineligible,
        }
    }
}

pub fn step1_bisection(scenario: &Scenario, config: &OptimizerConfig) -> Result<Selection> {
    Solver::new(scenario, config.timing).step1_bisection(config)
}

pub fn step2_local_search(
    scenario: &Scenario,
    initial: &Selection,
    config: &OptimizerConfig,
) -> Result<Selection> {
    Solver::new(scenario, config.timing).step2_local_search(initial, config)
}

pub fn solve(scenario: &Scenario, config: &OptimizerConfig) -> Result<Selection> {
    Solver::new(scenario, config.timing).solve(config)
}

pub fn optimize_g_for_metric(
    scenario: &Scenario,
    vehicle: u32,
    d: f64,
    mode: TimingMode,
) -> Result<(Vec<usize>, f64)> {
    let solver = Solver::new(scenario, mode);
    let delta = solver.objective().delta();
    solver.optimize_g_for_metric(vehicle, d, delta)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    /// Minimum omega over all decisions.
    pub obj_star: f64,
    pub decision: Decision,
    /// Minimum of `sum rho d / sum rho` (the step-1 ratio without `delta`).
    pub client_ratio_star: f64,
    pub client_decision: Decision,
    pub combinations: f64,
}

/// Exact minimizer by enumeration of every `S`-subset of eligible vehicles
/// and every admissible stop vector of each member.
pub fn brute_force(scenario: &Scenario, mode: TimingMode) -> Result<OracleResult> {
    let obj = Objective::new(scenario, mode);
    let budget = scenario.budget();
    let mut lists = Vec::new();
    for ix in 0..scenario.vehicles.len() {
        if stop_product(&obj, ix) > ORACLE_LIMIT {
            return Err(Error::TooLarge {
                combinations: stop_product(&obj, ix),
                limit: ORACLE_LIMIT,
            });
        }
        let list = enumerate_stops(&obj, ix);
        if !list.is_empty() {
            lists.push((scenario.vehicles[ix].id, list));
        }
    }
    if lists.len() < budget {
        return Err(Error::Infeasible(format!(
            "{} eligible vehicles for a budget of {budget}",
            lists.len()
        )));
    }
    // Elementary symmetric polynomial of the list sizes: the number of leaves.
    let mut e = vec![0.0f64; budget + 1];
    e[0] = 1.0;
    for (_, list) in &lists {
        for k in (1..=budget).rev() {
            e[k] += e[k - 1] * list.len() as f64;
        }
    }
    let combinations = e[budget];
    if combinations > ORACLE_LIMIT {
        return Err(Error::TooLarge {
            combinations,
            limit: ORACLE_LIMIT,
        });
    }

    let mut search = Enumeration {
        lists: &lists,
        delta: obj.delta(),
        target: obj.target(),
        picks: Vec::with_capacity(budget),
        best_omega: (f64::INFINITY, Vec::new()),
        best_ratio: (f64::INFINITY, Vec::new()),
    };
    search.run(0, budget, Aggregate::empty(obj.target().len()));
    let to_decision = |picks: &[(usize, usize)]| {
        Decision::new(
            picks
                .iter()
                .map(|&(v, k)| (lists[v].0, lists[v].1[k].0.clone())),
        )
    };
    let Enumeration {
        best_omega,
        best_ratio,
        ..
    } = search;
    if best_omega.1.is_empty() {
        return Err(Error::ZeroWeight);
    }
    Ok(OracleResult {
        obj_star: best_omega.0,
        decision: to_decision(&best_omega.1),
        client_ratio_star: best_ratio.0,
        client_decision: to_decision(&best_ratio.1),
        combinations,
    })
}

type VehicleList = (u32, Vec<(Vec<usize>, VehicleTerms)>);

struct Enumeration<'e> {
    lists: &'e [VehicleList],
    delta: f64,
    target: &'e [f64],
    picks: Vec<(usize, usize)>,
    best_omega: (f64, Vec<(usize, usize)>),
    best_ratio: (f64, Vec<(usize, usize)>),
}

impl Enumeration<'_> {
    fn run(&mut self, from: usize, remaining: usize, agg: Aggregate) {
        if remaining == 0 {
            let omega = agg.omega(self.delta, self.target);
            if omega < self.best_omega.0 {
                self.best_omega = (omega, self.picks.clone());
            }
            let ratio = agg.weighted_client();
            if ratio < self.best_ratio.0 {
                self.best_ratio = (ratio, self.picks.clone());
            }
            return;
        }
        for v in from..self.lists.len() {
            if self.lists.len() - v < remaining {
                break;
            }
            for k in 0..self.lists[v].1.len() {
                let mut next = agg.clone();
                next.add(&self.lists[v].1[k].1);
                self.picks.push((v, k));
                self.run(v + 1, remaining - 1, next);
                self.picks.pop();
            }
        }
    }
}
