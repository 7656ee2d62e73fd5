//! Command-line front end.

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::flsim::{write_csv, RoundLog, SimConfig, Simulation, Strategy};
use crate::objective::scenario_delta;
use crate::optimizer::{brute_force, OptimizerConfig, Selection, Solver};
use crate::scenario::{generate_synthetic, load_scenario, GeneratorSpec, Scenario, SCHEMA_VERSION};
use crate::timing::{TimingMode, DEFAULT_MC_SAMPLES};

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_INFEASIBLE: i32 = 3;
pub const EXIT_VIOLATION: i32 = 4;

/// Vehicle selection and data collection planning for vehicular federated
/// learning, plus a small training simulator.
///
/// Exit codes: 0 success, 2 invalid input, 3 infeasible scenario,
/// 4 invariant violation found by `oracle`.
#[derive(Debug, Parser)]
#[command(name = "crowdsense-fl", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic scenario JSON.
    Gen(GenArgs),
    /// Select vehicles and stopping points for one round.
    Optimize(OptimizeArgs),
    /// Train with one strategy and write per-round logs.
    #[command(after_help = SIMULATE_SCHEMA)]
    Simulate(SimulateArgs),
    /// Train with several strategies and write a summary table.
    #[command(after_help = COMPARE_SCHEMA)]
    Compare(CompareArgs),
    /// Compare the solver against exhaustive search on small instances.
    #[command(after_help = ORACLE_SCHEMA)]
    Oracle(OracleArgs),
}

const SIMULATE_SCHEMA: &str = "CSV columns: round,strategy,seed,omega,uploads,test_acc,test_loss\n\
Per-vehicle CSV (--vehicles-out): round,strategy,seed,vehicle,trajectory,stop,uploaded,samples,local_loss,grad_norm";
const COMPARE_SCHEMA: &str =
    "CSV columns: strategy,seeds,mean_final_acc,std_final_acc,mean_final_loss,mean_omega,mean_uploads\n\
Rows are sorted by mean_final_acc, highest first.";
const ORACLE_SCHEMA: &str = "CSV columns: trial,seed,obj_dagger,obj_star,ratio,bound,step1_value,step1_star,ok";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    /// 70 vehicles, 36 blocks, budget 10.
    Reference,
    /// 20 vehicles, 12 blocks, budget 5.
    Desk,
    /// 8 vehicles, 8 blocks, budget 3.
    Small,
}

impl Preset {
    pub fn spec(self) -> GeneratorSpec {
        match self {
            Preset::Reference => GeneratorSpec::reference(),
            Preset::Desk => GeneratorSpec::desk(),
            Preset::Small => GeneratorSpec::default(),
        }
    }
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long, value_enum, default_value = "reference")]
    pub preset: Preset,
    /// Generator spec JSON; replaces the preset.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub blocks: Option<usize>,
    #[arg(long)]
    pub vehicles: Option<usize>,
    #[arg(long)]
    pub classes: Option<usize>,
    #[arg(long)]
    pub max_trajectories: Option<usize>,
    #[arg(long)]
    pub max_len: Option<usize>,
    #[arg(long)]
    pub budget: Option<usize>,
    #[arg(long)]
    pub concentration: Option<f64>,
    /// Output path; stdout when omitted.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

/// Scenario source plus field overrides. Flags win over the file, which
/// wins over built-in defaults.
#[derive(Debug, Args)]
pub struct ScenarioArgs {
    /// Scenario JSON. When omitted a preset is generated.
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    #[arg(long)]
    pub budget: Option<usize>,
    #[arg(long)]
    pub local_steps: Option<u32>,
    #[arg(long)]
    pub deadline: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<u32>,
    #[arg(long)]
    pub model_bits: Option<f64>,
    #[arg(long)]
    pub wired_delay: Option<f64>,
    /// Learning rate that enters the drift factor.
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub lipschitz: Option<f64>,
}

impl ScenarioArgs {
    pub fn resolve(&self, default: Preset) -> Result<Scenario> {
        let base = match &self.scenario {
            Some(path) => load_scenario(path)?,
            None => generate_synthetic(&self.preset.unwrap_or(default).spec())?,
        };
        self.apply(base)
    }

    fn apply(&self, mut s: Scenario) -> Result<Scenario> {
        if let Some(v) = self.budget {
            s.budget_s = v;
        }
        if let Some(v) = self.local_steps {
            s.timing.local_steps = v;
        }
        if let Some(v) = self.deadline {
            s.timing.deadline_s = v;
        }
        if let Some(v) = self.batch_size {
            s.timing.batch_size = v;
        }
        if let Some(v) = self.model_bits {
            s.timing.model_bits = v;
        }
        if let Some(v) = self.wired_delay {
            s.timing.wired_delay_s = v;
        }
        if let Some(v) = self.lr {
            s.learning.lr = v;
        }
        if let Some(v) = self.lipschitz {
            s.learning.lipschitz = v;
        }
        s.validate()
    }
}

#[derive(Debug, Args)]
pub struct TimingArgs {
    /// Use the deterministic reception indicator instead of Monte Carlo.
    #[arg(long)]
    pub deterministic: bool,
    #[arg(long, default_value_t = DEFAULT_MC_SAMPLES)]
    pub mc_samples: usize,
}

impl TimingArgs {
    fn mode(&self, seed: u64) -> Result<TimingMode> {
        if self.deterministic {
            return Ok(TimingMode::Deterministic);
        }
        if self.mc_samples == 0 {
            return Err(Error::validation("--mc-samples must be positive"));
        }
        Ok(TimingMode::MonteCarlo {
            samples: self.mc_samples,
            seed,
        })
    }
}

#[derive(Debug, Args)]
pub struct SolverArgs {
    #[arg(long, default_value_t = 1e-6)]
    pub bisection_tol: f64,
    #[arg(long, default_value_t = 50)]
    pub max_iters: usize,
    /// Restrict local search to swapping in outside vehicles.
    #[arg(long)]
    pub swap_only: bool,
}

impl SolverArgs {
    fn config(&self, timing: TimingMode) -> OptimizerConfig {
        OptimizerConfig {
            bisection_tol: self.bisection_tol,
            max_local_search_iters: self.max_iters,
            timing,
            reoptimize_selected: !self.swap_only,
        }
    }
}

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[command(flatten)]
    pub timing: TimingArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Seed of the Monte Carlo reception estimates.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Print a readable account of the selection to stderr.
    #[arg(long)]
    pub explain: bool,
    /// Selection JSON path; stdout when omitted.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimArgs {
    #[arg(long)]
    pub rounds: Option<usize>,
    /// Number of seeds, run as `seed, seed+1, ...`.
    #[arg(long, default_value_t = 1)]
    pub seeds: u64,
    /// Base seed of training runs and of the Monte Carlo reception estimates.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Simulator config JSON; individual flags override it.
    #[arg(long)]
    pub sim_config: Option<PathBuf>,
    #[arg(long)]
    pub train_lr: Option<f64>,
    #[arg(long)]
    pub lr_decay: Option<f64>,
    #[arg(long)]
    pub class_separation: Option<f64>,
    #[arg(long)]
    pub noise_std: Option<f64>,
    #[arg(long)]
    pub feature_dim: Option<usize>,
    #[arg(long)]
    pub pool_size: Option<usize>,
    #[arg(long)]
    pub test_size: Option<usize>,
    /// Vehicles available per round; all when omitted.
    #[arg(long)]
    pub available: Option<usize>,
}

impl SimArgs {
    fn config(&self, optimizer: OptimizerConfig) -> Result<SimConfig> {
        let mut c = match &self.sim_config {
            Some(path) => read_json::<SimConfig>(path)?,
            None => SimConfig::default(),
        };
        c.optimizer = optimizer;
        if let Some(v) = self.rounds {
            c.rounds = v;
        }
        if let Some(v) = self.train_lr {
            c.train_lr = v;
        }
        if let Some(v) = self.lr_decay {
            c.lr_decay = v;
        }
        if let Some(v) = self.class_separation {
            c.class_separation = v;
        }
        if let Some(v) = self.noise_std {
            c.noise_std = v;
        }
        if let Some(v) = self.feature_dim {
            c.feature_dim = v;
        }
        if let Some(v) = self.pool_size {
            c.pool_size = v;
        }
        if let Some(v) = self.test_size {
            c.test_size = v;
        }
        if self.available.is_some() {
            c.available_per_round = self.available;
        }
        Ok(c)
    }

    fn seed_list(&self) -> Vec<u64> {
        (0..self.seeds).map(|i| self.seed.wrapping_add(i)).collect()
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[command(flatten)]
    pub timing: TimingArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub sim: SimArgs,
    #[arg(long, default_value = "sense4fl", value_parser = parse_strategy)]
    pub strategy: Strategy,
    /// CSV path; stdout when omitted.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    /// Optional per-vehicle CSV.
    #[arg(long)]
    pub vehicles_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[command(flatten)]
    pub timing: TimingArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub sim: SimArgs,
    /// Comma-separated strategies; all of them when omitted.
    #[arg(long, value_delimiter = ',', value_parser = parse_strategy)]
    pub strategies: Vec<Strategy>,
    /// CSV path; stdout when omitted.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    /// Generator spec JSON for the trial instances.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long, default_value_t = 100)]
    pub trials: u64,
    /// Trial `i` uses generator seed `seed + i`.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub vehicles: Option<usize>,
    #[arg(long)]
    pub budget: Option<usize>,
    /// Check ratios against `factor * (1 + delta) / delta`; values below 1
    /// probe how much slack the guarantee leaves.
    #[arg(long, default_value_t = 1.0)]
    pub bound_factor: f64,
    #[command(flatten)]
    pub timing: TimingArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// CSV path; stdout when omitted.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    /// Where offending instances are written; next to `--out` or the
    /// working directory by default.
    #[arg(long)]
    pub dump_dir: Option<PathBuf>,
}

fn parse_strategy(s: &str) -> std::result::Result<Strategy, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(serde_json::from_str(&text)?)
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.display().to_string(),
        source,
    }
}

fn open_out(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(io_err(p))?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn write_text(path: Option<&Path>, text: &str) -> Result<()> {
    let mut w = open_out(path)?;
    let label = path.unwrap_or(Path::new("<stdout>"));
    w.write_all(text.as_bytes()).map_err(io_err(label))?;
    w.flush().map_err(io_err(label))
}

/// Exit status for an error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Infeasible(_) | Error::Ineligible(_) | Error::ZeroWeight | Error::TooLarge { .. } => {
            EXIT_INFEASIBLE
        }
        Error::Csv(_) => EXIT_RUNTIME,
        _ => EXIT_VALIDATION,
    }
}

/// Runs a parsed invocation and returns its exit status.
pub fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Gen(a) => cmd_gen(&a),
        Command::Optimize(a) => cmd_optimize(&a),
        Command::Simulate(a) => cmd_simulate(&a),
        Command::Compare(a) => cmd_compare(&a),
        Command::Oracle(a) => cmd_oracle(&a),
    }
}

pub fn cmd_gen(a: &GenArgs) -> Result<i32> {
    let mut spec = match &a.spec {
        Some(path) => read_json::<GeneratorSpec>(path)?,
        None => a.preset.spec(),
    };
    macro_rules! set {
        ($($field:ident),*) => { $( if let Some(v) = a.$field { spec.$field = v; } )* };
    }
    set!(seed, blocks, vehicles, classes, max_trajectories, max_len, budget, concentration);
    let scenario = generate_synthetic(&spec)?;
    write_text(a.out.as_deref(), &(scenario.to_json_string()? + "\n"))?;
    Ok(EXIT_OK)
}

#[derive(Debug, Serialize)]
struct SelectionReport<'a> {
    schema_version: u32,
    timing: TimingMode,
    #[serde(flatten)]
    selection: &'a Selection,
}

pub fn cmd_optimize(a: &OptimizeArgs) -> Result<i32> {
    let scenario = a.scenario.resolve(Preset::Reference)?;
    let config = a.solver.config(a.timing.mode(a.seed)?);
    let selection = Solver::new(&scenario, config.timing).solve(&config)?;
    let report = SelectionReport {
        schema_version: SCHEMA_VERSION,
        timing: config.timing,
        selection: &selection,
    };
    write_text(a.out.as_deref(), &(serde_json::to_string_pretty(&report)? + "\n"))?;
    if a.explain {
        eprint!("{}", explain(&scenario, &selection));
    }
    Ok(EXIT_OK)
}

/// Readable account of a selection.
pub fn explain(scenario: &Scenario, sel: &Selection) -> String {
    let b = &sel.breakdown;
    let mut s = String::new();
    let delta = scenario_delta(scenario);
    s += &format!(
        "selected {} of {} vehicles (budget {})\n",
        sel.decision.len(),
        scenario.vehicles.len(),
        scenario.budget()
    );
    if delta == 0.0 {
        s += "delta = 0 with a single local step: omega reduces to the global divergence\n";
    }
    s += &format!(
        "omega {:.6} = delta {:.6} x client {:.6} + global {:.6}\n",
        b.omega, b.delta, b.weighted_client, b.d_global
    );
    s += &format!(
        "step 1: d = {:.6}, omega {:.6}; step 2: {} swaps in {} iterations\n",
        sel.d_dagger,
        sel.initial_omega,
        sel.swap_log.len(),
        sel.iters_used
    );
    for sw in &sel.swap_log {
        s += &format!("  swap out {} in {} -> omega {:.6}\n", sw.removed, sw.inserted, sw.omega);
    }
    for v in &b.per_vehicle {
        s += &format!(
            "  vehicle {:>4}: stops {:?} rho {:.4} client divergence {:.4}\n",
            v.id, sel.decision.stops[&v.id], v.rho, v.d_tilde
        );
    }
    if !sel.ineligible.is_empty() {
        s += &format!("ineligible: {:?}\n", sel.ineligible);
    }
    for n in &sel.notes {
        s += &format!("note: {n}\n");
    }
    s
}

fn run_strategies(
    scenario: &Scenario,
    config: &SimConfig,
    strategies: &[Strategy],
    seeds: &[u64],
) -> Result<Vec<Vec<Vec<RoundLog>>>> {
    let mut sims = seeds
        .iter()
        .map(|&seed| Simulation::new(scenario, config.clone(), seed))
        .collect::<Result<Vec<_>>>()?;
    strategies
        .iter()
        .map(|&st| sims.iter_mut().map(|sim| sim.run(st)).collect())
        .collect()
}

pub fn cmd_simulate(a: &SimulateArgs) -> Result<i32> {
    let scenario = a.scenario.resolve(Preset::Desk)?;
    let config = a.sim.config(a.solver.config(a.timing.mode(a.sim.seed)?))?;
    let runs = run_strategies(&scenario, &config, &[a.strategy], &a.sim.seed_list())?;
    let logs: Vec<RoundLog> = runs.into_iter().flatten().flatten().collect();
    let mut out = open_out(a.out.as_deref())?;
    write_csv(&logs, &mut out)?;
    if let Some(path) = &a.vehicles_out {
        write_vehicle_csv(&logs, File::create(path).map_err(io_err(path))?)?;
    }
    Ok(EXIT_OK)
}

fn write_vehicle_csv<W: Write>(logs: &[RoundLog], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "round", "strategy", "seed", "vehicle", "trajectory", "stop", "uploaded", "samples", "local_loss",
        "grad_norm",
    ])?;
    for l in logs {
        for v in &l.vehicles {
            w.write_record([
                l.round.to_string(),
                l.strategy.to_string(),
                l.seed.to_string(),
                v.vehicle.to_string(),
                v.trajectory.to_string(),
                v.stop.to_string(),
                v.uploaded.to_string(),
                v.samples.to_string(),
                v.local_loss.to_string(),
                v.grad_norm.to_string(),
            ])?;
        }
    }
    w.flush().map_err(io_err(Path::new("<vehicle csv>")))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareRow {
    pub strategy: Strategy,
    pub seeds: usize,
    pub mean_final_acc: f64,
    pub std_final_acc: f64,
    pub mean_final_loss: f64,
    pub mean_omega: f64,
    pub mean_uploads: f64,
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len().max(1) as f64
}

/// One summary row per strategy, sorted by mean final accuracy.
pub fn summarize(strategies: &[Strategy], runs: &[Vec<Vec<RoundLog>>]) -> Vec<CompareRow> {
    let mut rows: Vec<CompareRow> = strategies
        .iter()
        .zip(runs)
        .map(|(&strategy, per_seed)| {
            let finals: Vec<&RoundLog> = per_seed.iter().filter_map(|l| l.last()).collect();
            let accs: Vec<f64> = finals.iter().map(|l| l.test_acc).collect();
            let m = mean(&accs);
            let var = if accs.len() > 1 {
                accs.iter().map(|a| (a - m).powi(2)).sum::<f64>() / (accs.len() - 1) as f64
            } else {
                0.0
            };
            let all: Vec<&RoundLog> = per_seed.iter().flatten().collect();
            CompareRow {
                strategy,
                seeds: per_seed.len(),
                mean_final_acc: m,
                std_final_acc: var.sqrt(),
                mean_final_loss: mean(&finals.iter().map(|l| l.test_loss).collect::<Vec<_>>()),
                mean_omega: mean(&all.iter().map(|l| l.omega).collect::<Vec<_>>()),
                mean_uploads: mean(&all.iter().map(|l| l.uploads as f64).collect::<Vec<_>>()),
            }
        })
        .collect();
    rows.sort_by(|a, b| {
        b.mean_final_acc
            .total_cmp(&a.mean_final_acc)
            .then(a.strategy.cmp(&b.strategy))
    });
    rows
}

pub fn cmd_compare(a: &CompareArgs) -> Result<i32> {
    let scenario = a.scenario.resolve(Preset::Desk)?;
    let config = a.sim.config(a.solver.config(a.timing.mode(a.sim.seed)?))?;
    let strategies = if a.strategies.is_empty() {
        Strategy::ALL.to_vec()
    } else {
        a.strategies.clone()
    };
    let runs = run_strategies(&scenario, &config, &strategies, &a.sim.seed_list())?;
    let mut w = csv::Writer::from_writer(open_out(a.out.as_deref())?);
    for row in summarize(&strategies, &runs) {
        w.serialize(row)?;
    }
    w.flush().map_err(io_err(a.out.as_deref().unwrap_or(Path::new("<stdout>"))))?;
    Ok(EXIT_OK)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleRow {
    pub trial: u64,
    pub seed: u64,
    pub obj_dagger: f64,
    pub obj_star: f64,
    /// Empty when `obj_star` is zero.
    pub ratio: Option<f64>,
    pub bound: f64,
    pub step1_value: f64,
    pub step1_star: f64,
    pub ok: bool,
}

/// Solves one instance and checks it against exhaustive search.
pub fn oracle_trial(
    scenario: &Scenario,
    config: &OptimizerConfig,
    bound_factor: f64,
    trial: u64,
    seed: u64,
) -> Result<OracleRow> {
    let sel = Solver::new(scenario, config.timing).solve(config)?;
    let star = brute_force(scenario, config.timing)?;
    let delta = scenario_delta(scenario);
    let step_delta = if delta > 0.0 { delta } else { 1.0 };
    let step1_star = step_delta * star.client_ratio_star;
    let bound = if delta > 0.0 {
        bound_factor * (1.0 + delta) / delta
    } else {
        f64::INFINITY
    };
    let obj_dagger = sel.breakdown.omega;
    let ratio = (star.obj_star > 0.0).then(|| obj_dagger / star.obj_star);
    let step1_ok = (sel.step1_value - step1_star).abs() <= config.bisection_tol + 1e-9;
    let ratio_ok = obj_dagger <= bound * star.obj_star + 1e-12;
    let optimal_ok = obj_dagger >= star.obj_star - 1e-12;
    Ok(OracleRow {
        trial,
        seed,
        obj_dagger,
        obj_star: star.obj_star,
        ratio,
        bound,
        step1_value: sel.step1_value,
        step1_star,
        ok: step1_ok && ratio_ok && optimal_ok,
    })
}

pub fn cmd_oracle(a: &OracleArgs) -> Result<i32> {
    let mut spec = match &a.spec {
        Some(path) => read_json::<GeneratorSpec>(path)?,
        None => GeneratorSpec::default(),
    };
    if let Some(v) = a.vehicles {
        spec.vehicles = v;
    }
    if let Some(v) = a.budget {
        spec.budget = v;
    }
    if !(a.bound_factor > 0.0) {
        return Err(Error::validation("--bound-factor must be positive"));
    }
    let config = a.solver.config(a.timing.mode(a.seed)?);
    let dump_dir = a
        .dump_dir
        .clone()
        .or_else(|| a.out.as_ref().and_then(|p| p.parent()).map(Path::to_path_buf))
        .unwrap_or_else(|| PathBuf::from("."));
    let mut w = csv::Writer::from_writer(open_out(a.out.as_deref())?);
    let mut status = EXIT_OK;
    for trial in 0..a.trials {
        let seed = a.seed.wrapping_add(trial);
        let scenario = generate_synthetic(&GeneratorSpec { seed, ..spec.clone() })?;
        let row = oracle_trial(&scenario, &config, a.bound_factor, trial, seed)?;
        if !row.ok {
            let path = dump_dir.join(format!("oracle_violation_{trial}.json"));
            crate::scenario::save_scenario(&scenario, &path)?;
            eprintln!("trial {trial}: invariant violated; instance written to {}", path.display());
            status = EXIT_VIOLATION;
        }
        w.serialize(row)?;
    }
    w.flush().map_err(io_err(a.out.as_deref().unwrap_or(Path::new("<stdout>"))))?;
    Ok(status)
}
