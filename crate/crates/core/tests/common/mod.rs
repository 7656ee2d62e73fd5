#![allow(dead_code)]

use crowdsense_fl::divergence::ClassDistribution;
use crowdsense_fl::objective::{scenario_delta, Decision};
use crowdsense_fl::rng::Rng;
use crowdsense_fl::scenario::{generate_synthetic, GeneratorSpec, Scenario};
use crowdsense_fl::timing::{reception_probability, TimingMode};
use rand::seq::index::sample;
use rand::Rng as _;

/// Small instance in the brute-force range: V=8, M<=2, N<=4, C=3, S in 1..=3.
pub fn small_instance(seed: u64) -> Scenario {
    generate_synthetic(&GeneratorSpec {
        seed,
        budget: 1 + (seed % 3) as usize,
        ..GeneratorSpec::default()
    })
    .unwrap()
}

pub fn random_simplex(rng: &mut Rng, n: usize) -> Vec<f64> {
    // Mix of sparse and dense points.
    let w: Vec<f64> = (0..n)
        .map(|_| {
            if rng.random_bool(0.2) {
                0.0
            } else {
                -rng.random::<f64>().max(1e-300).ln()
            }
        })
        .collect();
    let total: f64 = w.iter().sum();
    if total == 0.0 {
        let mut v = vec![0.0; n];
        v[rng.random_range(0..n)] = 1.0;
        return v;
    }
    w.iter().map(|x| x / total).collect()
}

pub fn dist(v: Vec<f64>) -> ClassDistribution {
    ClassDistribution::new(v).unwrap()
}

/// Random S-subset with uniformly drawn stops.
pub fn random_decision(s: &Scenario, rng: &mut Rng) -> Decision {
    let picked = sample(rng, s.vehicles.len(), s.budget()).into_vec();
    Decision::new(picked.into_iter().map(|ix| {
        let v = &s.vehicles[ix];
        let stops = v
            .trajectories
            .iter()
            .map(|t| rng.random_range(t.collected_count..=t.blocks.len()))
            .collect();
        (v.id, stops)
    }))
}

/// Total variation via the largest event-probability gap, times two.
/// Independent of the per-class absolute differences used by the library.
pub fn tv_by_events(p: &[f64], q: &[f64]) -> f64 {
    let n = p.len();
    assert!(n <= 16);
    let mut best: f64 = 0.0;
    for mask in 0u32..(1 << n) {
        let gap: f64 = (0..n)
            .filter(|i| mask & (1 << i) != 0)
            .map(|i| p[i] - q[i])
            .sum();
        best = best.max(gap.abs());
    }
    2.0 * best
}

/// Omega terms recomputed directly from scenario fields.
pub struct Naive {
    pub d_client: f64,
    pub weighted_client: f64,
    pub d_global: f64,
    pub omega: f64,
}

pub fn naive_omega(s: &Scenario, d: &Decision, mode: TimingMode) -> Option<Naive> {
    let classes = s.classes();
    let total_l: f64 = s.blocks.iter().map(|b| b.weight).sum();
    let mut target = vec![0.0; classes];
    for b in &s.blocks {
        for (t, p) in target.iter_mut().zip(b.class_dist.as_slice()) {
            *t += b.weight * p / total_l;
        }
    }
    let mut num_client = 0.0;
    let mut den = 0.0;
    let mut global = vec![0.0; classes];
    for id in &d.selected {
        let v = s.vehicle(*id).unwrap();
        let stops = &d.stops[id];
        let mut rho = 0.0;
        let mut raw = Vec::new();
        let mut mixes = Vec::new();
        for (m, t) in v.trajectories.iter().enumerate() {
            let g = stops[m];
            rho += t.prob * t.blocks[..g].iter().map(|b| s.block(*b).unwrap().weight).sum::<f64>();
            let q = reception_probability(s, *id, m, g, mode).unwrap().q_rcv;
            raw.push(t.prob * q);
            let mut mix = vec![0.0; classes];
            let mass: f64 = t.blocks[..g].iter().map(|b| s.block(*b).unwrap().avg_objects).sum();
            for b in &t.blocks[..g] {
                let blk = s.block(*b).unwrap();
                for (x, p) in mix.iter_mut().zip(blk.class_dist.as_slice()) {
                    *x += blk.avg_objects * p / mass;
                }
            }
            mixes.push(mix);
        }
        let z: f64 = raw.iter().sum();
        if z <= 0.0 || rho <= 0.0 {
            return None;
        }
        let mut d_tilde = 0.0;
        for (r, mix) in raw.iter().zip(&mixes) {
            let xi = r / z;
            d_tilde += xi * mix.iter().zip(&target).map(|(a, b)| (a - b).abs()).sum::<f64>();
            for (g, x) in global.iter_mut().zip(mix) {
                *g += rho * xi * x;
            }
        }
        num_client += rho * d_tilde;
        den += rho;
    }
    let delta = scenario_delta(s);
    let weighted_client = num_client / den;
    let d_global: f64 = global
        .iter()
        .zip(&target)
        .map(|(g, t)| (g / den - t).abs())
        .sum();
    Some(Naive {
        d_client: delta * weighted_client,
        weighted_client,
        d_global,
        omega: delta * weighted_client + d_global,
    })
}

pub fn fast_mc() -> TimingMode {
    TimingMode::MonteCarlo { samples: 2000, seed: 7 }
}
