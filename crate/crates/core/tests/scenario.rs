use crowdsense_fl::scenario::{generate_synthetic, load_scenario, save_scenario, GeneratorSpec, Scenario};
use crowdsense_fl::Error;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn save_load_round_trip(seed in any::<u64>(), vehicles in 1usize..12, classes in 1usize..6) {
        let spec = GeneratorSpec { seed, vehicles, classes, budget: 1, ..GeneratorSpec::default() };
        let s = generate_synthetic(&spec).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.json");
        save_scenario(&s, &path).unwrap();
        prop_assert_eq!(load_scenario(&path).unwrap(), s);
    }

    #[test]
    fn generator_is_pure(seed in any::<u64>()) {
        let spec = GeneratorSpec { seed, ..GeneratorSpec::desk() };
        let a = generate_synthetic(&spec).unwrap();
        let b = generate_synthetic(&spec).unwrap();
        prop_assert_eq!(a.to_json_string().unwrap(), b.to_json_string().unwrap());
    }
}

#[test]
fn presets_have_expected_shape() {
    let r = generate_synthetic(&GeneratorSpec::reference()).unwrap();
    assert_eq!((r.blocks.len(), r.vehicles.len(), r.budget(), r.classes()), (36, 70, 10, 4));
    assert!(r.vehicles.iter().all(|v| v.trajectories.len() <= 2 && v.trajectories.iter().all(|t| t.len() <= 10)));
    let d = generate_synthetic(&GeneratorSpec::desk()).unwrap();
    assert_eq!((d.blocks.len(), d.vehicles.len(), d.budget(), d.classes()), (12, 20, 5, 4));
}

fn mutate(f: impl FnOnce(&mut serde_json::Value)) -> Result<Scenario, Error> {
    let s = generate_synthetic(&GeneratorSpec::default()).unwrap();
    let mut v: serde_json::Value = serde_json::from_str(&s.to_json_string().unwrap()).unwrap();
    f(&mut v);
    Scenario::from_json_str(&v.to_string())
}

#[test]
fn strict_loading_rejects_bad_files() {
    assert!(mutate(|_| {}).is_ok());
    assert!(matches!(mutate(|v| v["typo"] = 1.into()), Err(Error::Parse(_))));
    assert!(mutate(|v| v["schema_version"] = 2.into()).is_err());
    assert!(mutate(|v| v["budget_s"] = 0.into()).is_err());
    assert!(mutate(|v| v["blocks"][0]["weight"] = 5.0.into()).is_err());
    assert!(mutate(|v| v["vehicles"][0]["trajectories"][0]["prob"] = 7.0.into()).is_err());
    assert!(mutate(|v| v["vehicles"][0]["trajectories"][0]["collected_count"] = 0.into()).is_err());
    assert!(mutate(|v| v["vehicles"][0]["trajectories"][0]["blocks"][0] = 999.into()).is_err());
    assert!(mutate(|v| v["timing"]["deadline_s"] = (-1.0).into()).is_err());
}

#[test]
fn probabilities_within_tolerance_are_renormalized() {
    let s = mutate(|v| {
        let w = v["blocks"][0]["weight"].as_f64().unwrap();
        v["blocks"][0]["weight"] = (w + 5e-10).into();
    })
    .unwrap();
    let total: f64 = s.blocks.iter().map(|b| b.weight).sum();
    assert!((total - 1.0).abs() < 1e-15);
}
