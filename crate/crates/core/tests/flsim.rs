use crowdsense_fl::flsim::{
    aggregate, local_sgd, realize_round, run_training, Dataset, SimConfig, Simulation, Strategy, ToyModel,
};
use crowdsense_fl::objective::Objective;
use crowdsense_fl::optimizer::{solve, OptimizerConfig};
use crowdsense_fl::rng::{derive_seed, rng_from_seed};
use crowdsense_fl::scenario::{generate_synthetic, GeneratorSpec};
use rand::Rng as _;
use std::collections::BTreeMap;

fn random_model(rng: &mut crowdsense_fl::rng::Rng, classes: usize, dim: usize) -> ToyModel {
    let mut m = ToyModel::zeros(classes, dim);
    m.weights.iter_mut().for_each(|w| *w = rng.random_range(-2.0..2.0));
    m
}

#[test]
fn gradient_matches_central_differences() {
    let mut rng = rng_from_seed(17);
    for _ in 0..50 {
        let (classes, dim) = (rng.random_range(2..6), rng.random_range(1..8));
        let model = random_model(&mut rng, classes, dim);
        let mut data = Dataset::new(dim);
        for _ in 0..3 {
            let x: Vec<f64> = (0..dim).map(|_| rng.random_range(-3.0..3.0)).collect();
            data.push(&x, rng.random_range(0..classes));
        }
        let idx = [0, 1, 2];
        let (_, grad) = model.loss_and_gradient(&data, &idx);
        let h = 1e-5;
        for k in 0..grad.len() {
            let mut plus = model.clone();
            plus.weights[k] += h;
            let mut minus = model.clone();
            minus.weights[k] -= h;
            let fd = (plus.loss_and_gradient(&data, &idx).0 - minus.loss_and_gradient(&data, &idx).0) / (2.0 * h);
            assert!((fd - grad[k]).abs() <= 1e-6 * grad[k].abs().max(1e-3), "{fd} vs {}", grad[k]);
        }
    }
}

#[test]
fn sgd_step_follows_gradient() {
    let mut rng = rng_from_seed(3);
    let model = random_model(&mut rng, 3, 4);
    let mut data = Dataset::new(4);
    data.push(&[0.5, -1.0, 2.0, 0.0], 2);
    let (_, g) = model.loss_and_gradient(&data, &[0]);
    let stepped = local_sgd(&model, &data, 1, 0.3, 5, &mut rng).unwrap();
    for ((new, old), gk) in stepped.weights.iter().zip(&model.weights).zip(&g) {
        assert!((new - (old - 0.3 * gk)).abs() < 1e-12);
    }
}

#[test]
fn aggregation_is_a_normalized_average() {
    let mut rng = rng_from_seed(8);
    let models: Vec<(ToyModel, f64)> = (0..5)
        .map(|_| (random_model(&mut rng, 3, 2), rng.random_range(0.01..3.0)))
        .collect();
    let total: f64 = models.iter().map(|m| m.1).sum();
    let agg = aggregate(&models).unwrap();
    for k in 0..agg.weights.len() {
        let want: f64 = models.iter().map(|(m, w)| m.weights[k] * w / total).sum();
        assert!((agg.weights[k] - want).abs() < 1e-12);
    }
    // Same model everywhere: weights summing to one leave it unchanged.
    let same: Vec<(ToyModel, f64)> = models.iter().map(|(_, w)| (models[0].0.clone(), *w)).collect();
    let back = aggregate(&same).unwrap();
    for (a, b) in back.weights.iter().zip(&models[0].0.weights) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn realized_frequencies_follow_probabilities() {
    let s = generate_synthetic(&GeneratorSpec::desk()).unwrap();
    let cfg = OptimizerConfig::default();
    let obj = Objective::new(&s, cfg.timing);
    let decision = solve(&s, &cfg).unwrap().decision;
    let draws = 4000;
    let mut traj: BTreeMap<(u32, usize), usize> = BTreeMap::new();
    let mut up: BTreeMap<(u32, usize), usize> = BTreeMap::new();
    for i in 0..draws {
        for r in realize_round(&obj, &decision, derive_seed(99, &[i])).unwrap() {
            *traj.entry((r.vehicle, r.trajectory)).or_default() += 1;
            *up.entry((r.vehicle, r.trajectory)).or_default() += r.uploaded as usize;
        }
    }
    for id in &decision.selected {
        let ix = s.vehicle_index(*id).unwrap();
        for (m, t) in s.vehicle(*id).unwrap().trajectories.iter().enumerate() {
            let n = traj.get(&(*id, m)).copied().unwrap_or(0);
            let sd = (t.prob * (1.0 - t.prob) / draws as f64).sqrt();
            assert!((n as f64 / draws as f64 - t.prob).abs() <= 4.0 * sd + 1e-12);
            if n > 0 {
                let p = obj.q_rcv(ix, m, decision.stops[id][m]);
                let k = up.get(&(*id, m)).copied().unwrap_or(0);
                let sd = (p * (1.0 - p) / n as f64).sqrt();
                assert!((k as f64 / n as f64 - p).abs() <= 4.0 * sd + 1e-12);
            }
        }
    }
}

fn quick() -> SimConfig {
    SimConfig {
        rounds: 6,
        pool_size: 200,
        test_size: 300,
        ..SimConfig::default()
    }
}

#[test]
fn fixed_seeds_fix_the_log() {
    let s = generate_synthetic(&GeneratorSpec::desk()).unwrap();
    for st in Strategy::ALL {
        let a = run_training(&s, st, &quick(), 12).unwrap();
        let b = run_training(&s, st, &quick(), 12).unwrap();
        assert_eq!(format!("{a:?}"), format!("{b:?}"), "{st}");
        let c = run_training(&s, st, &quick(), 13).unwrap();
        assert_ne!(format!("{a:?}"), format!("{c:?}"), "{st}");
    }
}

#[test]
fn zero_rounds_give_empty_log() {
    let s = generate_synthetic(&GeneratorSpec::desk()).unwrap();
    let cfg = SimConfig { rounds: 0, ..quick() };
    assert!(run_training(&s, Strategy::Sense4fl, &cfg, 0).unwrap().is_empty());
}

#[test]
fn rounds_without_uploads_carry_the_model() {
    let mut s = generate_synthetic(&GeneratorSpec::desk()).unwrap();
    // Compute plus upload alone take 12.97 s, so every model arrives late.
    s.timing.deadline_s = 12.0;
    let s = s.validate().unwrap();
    let logs = run_training(&s, Strategy::Random, &quick(), 0).unwrap();
    let sim = Simulation::new(&s, quick(), 0).unwrap();
    let untrained = ToyModel::zeros(s.classes(), quick().feature_dim);
    let mut prev = (untrained.accuracy(&sim.data().test), untrained.loss(&sim.data().test));
    let mut idle = 0;
    for l in &logs {
        if l.uploads == 0 {
            idle += 1;
            assert_eq!((l.test_acc, l.test_loss), prev);
        }
        prev = (l.test_acc, l.test_loss);
    }
    assert_eq!(idle, logs.len());
    assert!(matches!(run_training(&s, Strategy::Sense4fl, &quick(), 0), Err(crowdsense_fl::Error::Infeasible(_))));
}

#[test]
fn churn_keeps_selection_within_available_set() {
    let s = generate_synthetic(&GeneratorSpec::desk()).unwrap();
    let cfg = SimConfig {
        available_per_round: Some(8),
        ..quick()
    };
    for st in [Strategy::Sense4fl, Strategy::Random, Strategy::GradientBased] {
        let logs = run_training(&s, st, &cfg, 5).unwrap();
        assert!(logs.iter().all(|l| l.vehicles.len() == s.budget()));
    }
    let bad = SimConfig {
        available_per_round: Some(2),
        ..quick()
    };
    assert!(run_training(&s, Strategy::Random, &bad, 0).is_err());
}

fn ranks(xs: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|a, b| xs[*a].total_cmp(&xs[*b]));
    let mut r = vec![0.0; xs.len()];
    for (rank, i) in idx.into_iter().enumerate() {
        r[i] = rank as f64;
    }
    r
}

#[test]
fn accuracy_falls_as_omega_rises() {
    let s = generate_synthetic(&GeneratorSpec::desk()).unwrap();
    let cfg = SimConfig::default();
    let strategies = [Strategy::Sense4fl, Strategy::Random, Strategy::UploadingCentric, Strategy::CoverageCentric];
    let mut acc = Vec::new();
    let mut om = Vec::new();
    for st in strategies {
        let (mut a, mut o) = (0.0, 0.0);
        for seed in 0..10 {
            let logs = run_training(&s, st, &cfg, seed).unwrap();
            a += logs.last().unwrap().test_acc;
            o += logs.iter().map(|l| l.omega).sum::<f64>() / logs.len() as f64;
        }
        acc.push(a / 10.0);
        om.push(o / 10.0);
    }
    let (ra, ro) = (ranks(&acc), ranks(&om));
    let n = acc.len() as f64;
    let d2: f64 = ra.iter().zip(&ro).map(|(a, b)| (a - b).powi(2)).sum();
    let spearman = 1.0 - 6.0 * d2 / (n * (n * n - 1.0));
    assert!(spearman < 0.0, "acc {acc:?} omega {om:?} rho {spearman}");
}
