//! Round latency and the probability that a vehicle's model reaches the
//! server before the deadline.
//!
//! A round for vehicle `v` on trajectory `m` stopping after `g` blocks costs
//! the remaining collection time (blocks `c+1..=g`), local computation, and
//! upload. The model counts as received when the sum fits in the deadline.

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from_seed, Rng};
use crate::scenario::{Scenario, TimingParams, Trajectory, VehicleProfile};

/// Monte Carlo samples are drawn in batches of this size; batch `i` of a
/// trajectory stream is seeded with `stream_seed ^ i`.
pub const MC_BATCH: usize = 1024;

pub const DEFAULT_MC_SAMPLES: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SojournKind {
    Deterministic,
    TruncatedGaussian,
}

/// Per-position sojourn times of one trajectory. Gaussian draws are
/// truncated to `[0, 2 * mean]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SojournModel {
    pub mean_s: Vec<f64>,
    pub std_s: Vec<f64>,
    pub dist: SojournKind,
}

impl SojournModel {
    pub fn deterministic(mean_s: Vec<f64>) -> Self {
        let std_s = vec![0.0; mean_s.len()];
        Self {
            mean_s,
            std_s,
            dist: SojournKind::Deterministic,
        }
    }

    pub fn truncated_gaussian(mean_s: Vec<f64>, std_s: Vec<f64>) -> Self {
        Self {
            mean_s,
            std_s,
            dist: SojournKind::TruncatedGaussian,
        }
    }

    pub(crate) fn validate(&self, len: usize) -> std::result::Result<(), String> {
        if self.mean_s.len() != len || self.std_s.len() != len {
            return Err(format!(
                "sojourn has {} means and {} stds for {} blocks",
                self.mean_s.len(),
                self.std_s.len(),
                len
            ));
        }
        for (mu, sd) in self.mean_s.iter().zip(&self.std_s) {
            if !(mu.is_finite() && *mu > 0.0) {
                return Err(format!("sojourn mean {mu} must be positive"));
            }
            if !(sd.is_finite() && *sd >= 0.0) {
                return Err(format!("sojourn std {sd} must be non-negative"));
            }
            if self.dist == SojournKind::Deterministic && *sd != 0.0 {
                return Err("deterministic sojourn requires std 0".into());
            }
        }
        Ok(())
    }

    /// One draw for trajectory position `pos` (0-based).
    pub fn sample(&self, pos: usize, rng: &mut Rng) -> f64 {
        let mu = self.mean_s[pos];
        let sd = self.std_s[pos];
        if self.dist == SojournKind::Deterministic || sd == 0.0 {
            return mu;
        }
        loop {
            let z: f64 = StandardNormal.sample(rng);
            let x = mu + sd * z;
            if (0.0..=2.0 * mu).contains(&x) {
                return x;
            }
        }
    }
}

/// How `q_rcv` is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimingMode {
    /// Indicator of the mean-sojourn total fitting the deadline.
    Deterministic,
    /// Fraction of sampled sojourn paths that fit the deadline.
    MonteCarlo { samples: usize, seed: u64 },
}

impl Default for TimingMode {
    fn default() -> Self {
        TimingMode::MonteCarlo {
            samples: DEFAULT_MC_SAMPLES,
            seed: 0,
        }
    }
}

/// Which sojourn values a collection-time evaluation uses.
#[derive(Debug, Clone, Copy)]
pub enum Sojourn<'a> {
    Means,
    /// One value per trajectory position.
    Samples(&'a [f64]),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatencyComponents {
    pub dct_s: f64,
    pub comp_s: f64,
    pub up_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReceptionEstimate {
    pub q_rcv: f64,
    pub mean_total_s: f64,
    pub components: LatencyComponents,
}

pub fn compute_time(timing: &TimingParams, vehicle: &VehicleProfile) -> f64 {
    timing.local_steps as f64 * vehicle.cycles_per_sample * timing.batch_size as f64 / vehicle.flops
}

pub fn upload_time(timing: &TimingParams, vehicle: &VehicleProfile) -> f64 {
    timing.model_bits / vehicle.min_rate_bps + timing.wired_delay_s
}

/// Collection time after selection: sojourn over positions `c+1..=g`.
pub fn data_collection_time(
    scenario: &Scenario,
    vehicle: u32,
    m: usize,
    g: usize,
    sojourn: Sojourn<'_>,
) -> Result<f64> {
    let traj = scenario.trajectory(vehicle, m)?;
    traj.check_stop(vehicle, m, g)?;
    let times = match sojourn {
        Sojourn::Means => &traj.sojourn.mean_s[..],
        Sojourn::Samples(s) => {
            if s.len() != traj.blocks.len() {
                return Err(Error::LengthMismatch {
                    left: s.len(),
                    right: traj.blocks.len(),
                });
            }
            s
        }
    };
    Ok(collection_time(times, traj.collected_count, g))
}

fn collection_time(times: &[f64], c: usize, g: usize) -> f64 {
    times[c..g].iter().sum()
}

pub fn reception_probability(
    scenario: &Scenario,
    vehicle: u32,
    m: usize,
    g: usize,
    mode: TimingMode,
) -> Result<ReceptionEstimate> {
    let profile = scenario.vehicle(vehicle)?;
    let traj = scenario.trajectory(vehicle, m)?;
    traj.check_stop(vehicle, m, g)?;
    let curve = reception_curve(&scenario.timing, profile, m, traj, mode);
    let components = LatencyComponents {
        dct_s: collection_time(&traj.sojourn.mean_s, traj.collected_count, g),
        comp_s: compute_time(&scenario.timing, profile),
        up_s: upload_time(&scenario.timing, profile),
    };
    Ok(ReceptionEstimate {
        q_rcv: curve[g - traj.collected_count],
        mean_total_s: components.dct_s + components.comp_s + components.up_s,
        components,
    })
}

/// `q_rcv` for every stop count `g = c..=N` of one trajectory.
///
/// Monte Carlo estimates for all `g` share the same sampled paths, so the
/// curve is non-increasing in `g` exactly, not just up to sampling noise.
pub fn reception_curve(
    timing: &TimingParams,
    vehicle: &VehicleProfile,
    m: usize,
    traj: &Trajectory,
    mode: TimingMode,
) -> Vec<f64> {
    let c = traj.collected_count;
    let n = traj.blocks.len();
    let fixed = compute_time(timing, vehicle) + upload_time(timing, vehicle);
    let budget = timing.deadline_s - fixed;
    match mode {
        TimingMode::Deterministic => {
            let mut out = Vec::with_capacity(n - c + 1);
            let mut dct = 0.0;
            out.push(indicator(dct <= budget));
            for pos in c..n {
                dct += traj.sojourn.mean_s[pos];
                out.push(indicator(dct <= budget));
            }
            out
        }
        TimingMode::MonteCarlo { samples, seed } => {
            let samples = samples.max(1);
            let stream_seed = derive_seed(seed, &[vehicle.id as u64, m as u64]);
            // hits[j] counts paths whose collection up to g = c + j fits.
            let mut hits = vec![0usize; n - c + 1];
            let batches = samples.div_ceil(MC_BATCH);
            for batch in 0..batches {
                let mut rng = rng_from_seed(stream_seed ^ batch as u64);
                let count = MC_BATCH.min(samples - batch * MC_BATCH);
                for _ in 0..count {
                    let mut dct = 0.0;
                    if dct > budget {
                        continue;
                    }
                    hits[0] += 1;
                    for pos in c..n {
                        dct += traj.sojourn.sample(pos, &mut rng);
                        if dct > budget {
                            break;
                        }
                        hits[pos - c + 1] += 1;
                    }
                }
            }
            hits.into_iter()
                .map(|h| h as f64 / samples as f64)
                .collect()
        }
    }
}

fn indicator(ok: bool) -> f64 {
    if ok {
        1.0
    } else {
        0.0
    }
}
