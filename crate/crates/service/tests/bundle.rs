mod common;

use dfs_core::amortized::{DfsModel, GroupMatrix, Task};
use dfs_core::datasets::Standardization;
use dfs_core::observation::{Observation, Policy, Predictor};
use dfs_service::bundle::BundleError;
use dfs_service::ModelBundle;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_obs(rng: &mut ChaCha8Rng, groups: &GroupMatrix) -> Observation<f64> {
    let x: Vec<f64> = (0..groups.feature_count()).map(|_| rng.random_range(-2.0..3.0)).collect();
    let mask: Vec<bool> = (0..groups.group_count()).map(|_| rng.random_bool(0.5)).collect();
    Observation::from_mask(&x, &mask, groups).unwrap()
}

fn assert_same_behaviour(a: &ModelBundle, b: &ModelBundle, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let groups = a.model().groups().clone();
    for _ in 0..100 {
        let obs = random_obs(&mut rng, &groups);
        assert_eq!(a.model().predict(&obs).unwrap(), b.model().predict(&obs).unwrap());
        if obs.observed_count() < groups.group_count() {
            let mut r = ChaCha8Rng::seed_from_u64(0);
            assert_eq!(a.model().select(&obs, &mut r).unwrap(), b.model().select(&obs, &mut r).unwrap());
        }
    }
}

#[test]
fn save_load_reproduces_predictions() {
    let bundle = common::d2_bundle();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.dfs");
    bundle.save(&path).unwrap();
    let loaded = ModelBundle::load(&path).unwrap();
    assert_eq!(&loaded, bundle);
    assert_eq!(loaded.checksum(), bundle.checksum());
    assert_same_behaviour(bundle, &loaded, 3);
}

fn grouped_model(shared: bool, task: Task) -> ModelBundle {
    let groups = GroupMatrix::from_assignment(vec![0, 0, 1, 2, 2]).unwrap();
    let mut model = DfsModel::<f64>::init(groups, task, &[8, 6], 0.3, shared, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
    let std = Standardization { mean: vec![0.5, 1.0, -1.0, 0.0, 2.0], scale: vec![1.0, 2.0, 0.5, 1.0, 3.0] };
    model.set_standardization(Some(std)).unwrap();
    let names = |p: &str, n: usize| (0..n).map(|i| format!("{p}{i}")).collect::<Vec<_>>();
    let classes = match task {
        Task::Classification { classes } => names("c", classes),
        Task::Regression => Vec::new(),
    };
    ModelBundle::new(&model, names("f", 5), names("g", 3), classes, None).unwrap()
}

#[test]
fn grouped_shared_and_regression_models_round_trip() {
    for (shared, task) in [(true, Task::Classification { classes: 3 }), (false, Task::Regression)] {
        let bundle = grouped_model(shared, task);
        let loaded = ModelBundle::from_json(&bundle.to_json()).unwrap();
        assert_eq!(loaded, bundle);
        assert_same_behaviour(&bundle, &loaded, 4);
    }
}

#[test]
fn weights_are_stored_as_f32() {
    let bundle = grouped_model(false, Task::Classification { classes: 2 });
    for net in bundle.model().networks() {
        for layer in net.layers() {
            assert!(layer.weight.iter().all(|&w| (w as f32) as f64 == w));
        }
    }
}

#[test]
fn tampering_is_detected() {
    let bundle = grouped_model(false, Task::Classification { classes: 2 });
    let text = bundle.to_json();
    let tampered = text.replacen("\"f0\"", "\"zz\"", 1);
    assert!(matches!(ModelBundle::from_json(&tampered), Err(BundleError::Checksum { .. })));
    let mut doc: serde_json::Value = serde_json::from_str(&text).unwrap();
    doc["version"] = serde_json::json!(99);
    assert!(matches!(ModelBundle::from_json(&doc.to_string()), Err(BundleError::Version { version: 99, .. })));
    assert!(matches!(ModelBundle::from_json("{not json"), Err(BundleError::Json(_))));
}

#[test]
fn metadata_must_match_the_model() {
    let groups = GroupMatrix::identity(3);
    let model = DfsModel::<f64>::init(groups, Task::Classification { classes: 2 }, &[4], 0.0, false, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
    let names = vec!["a".to_string(), "b".into(), "c".into()];
    let err = ModelBundle::new(&model, names.clone(), names.clone(), vec!["only one".into()], None).unwrap_err();
    assert!(matches!(err, BundleError::Invalid(_)));
    assert!(ModelBundle::new(&model, names[..2].to_vec(), names.clone(), vec!["0".into(), "1".into()], None).is_err());
}

#[test]
fn checksum_is_stable_and_content_addressed() {
    let a = grouped_model(false, Task::Classification { classes: 2 });
    let b = grouped_model(false, Task::Classification { classes: 2 });
    assert_eq!(a.checksum(), b.checksum());
    assert!(a.checksum().starts_with("sha256:"));
    let c = grouped_model(true, Task::Classification { classes: 2 });
    assert_ne!(a.checksum(), c.checksum());
}

proptest::proptest! {
    #![proptest_config(proptest::prelude::ProptestConfig::with_cases(32))]
    #[test]
    fn arbitrary_standardization_survives_save_load(
        mean in proptest::collection::vec(-1e3f64..1e3, 3),
        scale in proptest::collection::vec(1e-6f64..1e3, 3),
    ) {
        let groups = GroupMatrix::identity(3);
        let mut model = DfsModel::<f64>::init(groups, Task::Classification { classes: 2 }, &[4], 0.0, false, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        model.set_standardization(Some(Standardization { mean, scale })).unwrap();
        let names = vec!["a".to_string(), "b".into(), "c".into()];
        let bundle = ModelBundle::new(&model, names.clone(), names, vec!["0".into(), "1".into()], None).unwrap();
        let loaded = ModelBundle::from_json(&bundle.to_json()).unwrap();
        proptest::prop_assert_eq!(loaded.checksum(), bundle.checksum());
        proptest::prop_assert_eq!(loaded, bundle);
    }
}
