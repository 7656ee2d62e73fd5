mod common;

use common::{fast_mc, naive_omega, random_decision, small_instance};
use crowdsense_fl::objective::{
    convergence_bound, delta, omega, BoundParams, BoundValue, Decision, Objective, VehicleTerms,
};
use crowdsense_fl::optimizer::{solve, OptimizerConfig};
use crowdsense_fl::rng::rng_from_seed;
use crowdsense_fl::scenario::{generate_synthetic, GeneratorSpec};
use crowdsense_fl::timing::TimingMode;
use crowdsense_fl::Error;
use proptest::prelude::*;

#[test]
fn delta_values() {
    assert_eq!(delta(1, 0.001, 0.01), 0.0);
    assert!((delta(2, 0.001, 0.01) - 1.00001).abs() < 1e-15);
    let d3 = delta(3, 0.1, 0.5);
    assert!((d3 - (1.05 + 1.05f64.powi(2))).abs() < 1e-15);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn matches_direct_computation(seed in 0u64..10_000, pick in any::<u64>()) {
        let s = small_instance(seed);
        let mode = fast_mc();
        let d = random_decision(&s, &mut rng_from_seed(pick));
        match (omega(&s, &d, mode), naive_omega(&s, &d, mode)) {
            (Ok(b), Some(n)) => {
                prop_assert!((b.omega - n.omega).abs() < 1e-12, "{} vs {}", b.omega, n.omega);
                prop_assert!((b.d_global - n.d_global).abs() < 1e-12);
                prop_assert!((b.d_client - n.d_client).abs() < 1e-12);
                prop_assert!(b.omega >= 0.0 && b.omega <= 2.0 * b.delta + 2.0 + 1e-12);
                prop_assert!(b.d_global <= 2.0 + 1e-12 && b.weighted_client <= 2.0 + 1e-12);
                for v in &b.per_vehicle {
                    prop_assert!((v.xi_bar.iter().sum::<f64>() - 1.0).abs() < 1e-12);
                    prop_assert!(v.d_tilde >= 0.0 && v.d_tilde <= 2.0 + 1e-12);
                }
            }
            // Some selected vehicle has no deliverable trajectory or no weight.
            (Err(_), None) => {}
            (lib, naive) => prop_assert!(false, "lib {:?} naive {}", lib.map(|b| b.omega), naive.is_some()),
        }
    }

    #[test]
    fn chain_inequality(seed in 0u64..10_000, pick in any::<u64>()) {
        let s = small_instance(seed);
        if let Ok(b) = omega(&s, &random_decision(&s, &mut rng_from_seed(pick)), TimingMode::Deterministic) {
            prop_assert!(b.d_global <= b.weighted_client + 1e-12);
            prop_assert!(b.d_global <= b.d_client / b.delta + 1e-12);
        }
    }

    #[test]
    fn invariant_under_rho_rescaling(seed in 0u64..10_000, pick in any::<u64>(), k in 1e-6f64..1e6) {
        let s = small_instance(seed);
        let obj = Objective::new(&s, TimingMode::Deterministic);
        let d = random_decision(&s, &mut rng_from_seed(pick));
        let terms: Option<Vec<(u32, VehicleTerms)>> = d
            .selected
            .iter()
            .map(|id| obj.vehicle_terms(*id, &d.stops[id]).ok().map(|t| (*id, t)))
            .collect();
        if let Some(terms) = terms {
            let scaled: Vec<(u32, VehicleTerms)> = terms
                .iter()
                .map(|(id, t)| (*id, VehicleTerms { rho: t.rho * k, ..t.clone() }))
                .collect();
            let a = obj.breakdown(&terms).omega;
            let b = obj.breakdown(&scaled).omega;
            prop_assert!((a - b).abs() <= 1e-12 * a.max(1.0), "{} vs {}", a, b);
        }
    }
}

#[test]
fn solver_omega_matches_recomputation() {
    let cfg = OptimizerConfig {
        timing: fast_mc(),
        ..OptimizerConfig::default()
    };
    for seed in 0..100 {
        let s = generate_synthetic(&GeneratorSpec { seed, ..GeneratorSpec::desk() }).unwrap();
        let sel = solve(&s, &cfg).unwrap();
        let direct = naive_omega(&s, &sel.decision, cfg.timing).unwrap().omega;
        assert!((sel.breakdown.omega - direct).abs() < 1e-12, "seed {seed}");
        if let Some(last) = sel.swap_log.last() {
            assert!((last.omega - direct).abs() < 1e-12, "seed {seed}");
        }
    }
}

#[test]
fn iid_blocks_give_zero_omega() {
    let mut s = generate_synthetic(&GeneratorSpec { seed: 3, ..GeneratorSpec::desk() }).unwrap();
    let p = s.blocks[0].class_dist.clone();
    s.blocks.iter_mut().for_each(|b| b.class_dist = p.clone());
    let s = s.validate().unwrap();
    let mut rng = rng_from_seed(1);
    for _ in 0..200 {
        if let Ok(b) = omega(&s, &random_decision(&s, &mut rng), TimingMode::Deterministic) {
            assert!(b.omega.abs() < 1e-12);
        }
    }
}

#[test]
fn empty_and_unknown_decisions() {
    let s = small_instance(0);
    // No selected weight: omega is defined as +inf.
    assert_eq!(omega(&s, &Decision::default(), TimingMode::Deterministic).unwrap().omega, f64::INFINITY);
    let bad = Decision::new([(999, vec![1, 1])]);
    assert!(matches!(omega(&s, &bad, TimingMode::Deterministic), Err(Error::UnknownVehicle(999)) | Err(Error::Validation(_))));
}

#[test]
fn bound_evaluator_reports_infeasible_denominator() {
    let s = small_instance(1);
    let params = BoundParams {
        smoothness: 1.0,
        loss_lipschitz: 1.0,
        loss_gap: 1.0,
        init_distance: 1.0,
        max_grad_norm: 1.0,
        rounds: 10.0,
    };
    // lr (phi K T (1 - beta lr / 2) - L U sum(omega) / eps^2) = 0.001 (20 * 0.9995 - 1).
    let ok = convergence_bound(&[0.1; 10], &params, &s.timing, &s.learning);
    let expected = 1.0 / (0.001 * (20.0 * 0.9995 - 1.0));
    assert!(matches!(ok.value, BoundValue::Bound { value } if (value - expected).abs() < 1e-9));
    assert!(ok.lr_within_smoothness);
    let huge = convergence_bound(&[1e9; 10], &params, &s.timing, &s.learning);
    assert!(matches!(huge.value, BoundValue::Infeasible { .. }));
}
