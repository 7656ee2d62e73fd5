mod common;

use common::{dist, random_simplex, tv_by_events};
use crowdsense_fl::divergence::{collected_distribution, emd, global_distribution, target_distribution, SIMPLEX_TOL};
use crowdsense_fl::rng::rng_from_seed;
use crowdsense_fl::scenario::{generate_synthetic, GeneratorSpec};
use crowdsense_fl::testkit;
use proptest::prelude::*;

fn is_simplex(p: &[f64]) -> bool {
    p.iter().all(|x| *x >= 0.0) && (p.iter().sum::<f64>() - 1.0).abs() <= SIMPLEX_TOL
}

proptest! {
    #[test]
    fn emd_metric_axioms(seed in any::<u64>(), n in 1usize..10) {
        let mut rng = rng_from_seed(seed);
        let p = dist(random_simplex(&mut rng, n));
        let q = dist(random_simplex(&mut rng, n));
        let r = dist(random_simplex(&mut rng, n));
        let pq = emd(&p, &q).unwrap();
        prop_assert!((0.0..=2.0 + 1e-12).contains(&pq));
        prop_assert_eq!(emd(&p, &p).unwrap(), 0.0);
        prop_assert_eq!(pq, emd(&q, &p).unwrap());
        prop_assert!(pq <= emd(&p, &r).unwrap() + emd(&r, &q).unwrap() + 1e-12);
        if pq == 0.0 {
            prop_assert_eq!(p.as_slice(), q.as_slice());
        }
    }

    #[test]
    fn emd_matches_event_form(seed in any::<u64>(), n in 1usize..9) {
        let mut rng = rng_from_seed(seed);
        let p = random_simplex(&mut rng, n);
        let q = random_simplex(&mut rng, n);
        let lib = emd(&dist(p.clone()), &dist(q.clone())).unwrap();
        let oracle = tv_by_events(dist(p).as_slice(), dist(q).as_slice());
        prop_assert!((lib - oracle).abs() < 1e-12, "{} vs {}", lib, oracle);
    }

    #[test]
    fn mixtures_are_distributions(seed in 0u64..500) {
        let s = generate_synthetic(&GeneratorSpec { seed, ..GeneratorSpec::default() }).unwrap();
        prop_assert!(is_simplex(global_distribution(&s).as_slice()));
        prop_assert!(is_simplex(target_distribution(&s).as_slice()));
        for v in &s.vehicles {
            for (m, t) in v.trajectories.iter().enumerate() {
                for g in t.stop_range() {
                    let d = collected_distribution(&s, v.id, m, g).unwrap();
                    prop_assert!(is_simplex(d.as_slice()));
                }
            }
        }
    }
}

#[test]
fn full_traversal_with_equal_mass_is_block_average() {
    let ps = [[0.7, 0.2, 0.1], [0.0, 0.5, 0.5], [0.3, 0.3, 0.4], [1.0, 0.0, 0.0]];
    let blocks = ps
        .iter()
        .enumerate()
        .map(|(i, p)| testkit::block(i as u32 + 1, 120.0, p, 0.25))
        .collect();
    let t = testkit::trajectory(&[3, 1, 4, 2], 1.0, 1, &[10.0; 4]);
    let s = testkit::scenario(blocks, vec![testkit::vehicle(1, vec![t])], 1);
    let got = collected_distribution(&s, 1, 0, 4).unwrap();
    for (i, x) in got.as_slice().iter().enumerate() {
        let avg = ps.iter().map(|p| p[i]).sum::<f64>() / 4.0;
        assert!((x - avg).abs() < 1e-15);
    }
}

#[test]
fn mass_weighting_of_collected_data() {
    let blocks = vec![
        testkit::block(1, 100.0, &[1.0, 0.0], 0.5),
        testkit::block(2, 300.0, &[0.0, 1.0], 0.5),
    ];
    let t = testkit::trajectory(&[1, 2], 1.0, 1, &[10.0, 10.0]);
    let s = testkit::scenario(blocks, vec![testkit::vehicle(1, vec![t])], 1);
    assert_eq!(collected_distribution(&s, 1, 0, 1).unwrap().as_slice(), &[1.0, 0.0]);
    assert_eq!(collected_distribution(&s, 1, 0, 2).unwrap().as_slice(), &[0.25, 0.75]);
    assert!(collected_distribution(&s, 1, 0, 3).is_err());
    assert!(collected_distribution(&s, 1, 0, 0).is_err());
}
