use dfs_core::amortized::{
    fit, pretrain_predictor, rollout_selections, DfsModel, GroupMatrix, Targets, Task, TrainConfig, TrainingData,
};
use dfs_core::datasets::{generate_synthetic, split_standardize, Split, SyntheticSpec, DEFAULT_FRACTIONS};
use dfs_core::evaluation::{instance_rng, run_rollout};
use dfs_core::numerics::{cross_entropy, SimplexVector};
use dfs_core::observation::Observation;
use dfs_core::oracle::channel_table;
use ndarray::Array2;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_model(seed: u64, groups: GroupMatrix) -> DfsModel<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DfsModel::init(groups, Task::Classification { classes: 3 }, &[12, 8], 0.0, seed.is_multiple_of(2), &mut rng).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn policy_select_skips_acquired_groups(seed in any::<u64>(), bits in prop::collection::vec(any::<bool>(), 5)) {
        prop_assume!(bits.iter().any(|b| !b));
        let groups = GroupMatrix::from_assignment(vec![0, 1, 1, 2, 3, 4, 4]).unwrap();
        let model = random_model(seed, groups);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
        let x: Vec<f64> = (0..7).map(|_| rng.random_range(-3.0..3.0)).collect();
        let mask: Vec<f64> = bits.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
        let g = model.policy_select(&x, &mask).unwrap();
        prop_assert!(!bits[g]);
    }

    #[test]
    fn masks_grow_monotonically_to_the_budget(seed in any::<u64>(), k in 0usize..=5) {
        let groups = GroupMatrix::from_assignment(vec![0, 0, 1, 2, 3, 4]).unwrap();
        let model = random_model(seed, groups.clone());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<f64> = (0..6).map(|_| rng.random_range(-3.0..3.0)).collect();
        let picks = rollout_selections(&model, &x, k).unwrap();
        prop_assert_eq!(picks.len(), k);
        let mut obs = Observation::empty(6, 5);
        let mut previous = obs.mask();
        for (t, &g) in picks.iter().enumerate() {
            obs.reveal(&x, g, &groups).unwrap();
            let mask = obs.mask();
            prop_assert!(mask.iter().zip(&previous).all(|(now, before)| now >= before));
            prop_assert_eq!(obs.observed_count(), t + 1);
            previous = mask;
        }
    }
}

#[test]
fn all_selected_is_rejected() {
    let model = random_model(1, GroupMatrix::identity(3));
    assert!(model.policy_select(&[0.0; 3], &[1.0; 3]).is_err());
    assert_eq!(model.policy_select(&[0.0; 3], &[1.0, 0.0, 1.0]).unwrap(), 1);
}

fn d2_data(n: usize, seed: u64) -> (dfs_core::datasets::Dataset, TrainingData<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (ds, _) = generate_synthetic(SyntheticSpec::D2Channel, n, &mut rng).unwrap();
    let ds = split_standardize(&ds, DEFAULT_FRACTIONS, &mut rng).unwrap();
    let data = ds.training_data().unwrap();
    (ds, data)
}

#[test]
fn singleton_groups_match_the_identity_grouping() {
    let (_, data) = d2_data(3000, 4);
    let config = TrainConfig { budget: 2, hidden: vec![16, 16], max_epochs: 2, pretrain_epochs: 2, seed: 5, ..TrainConfig::default() };
    let singletons = GroupMatrix::from_members(vec![vec![0], vec![1], vec![2]], 3).unwrap();
    let (a, _) = fit(&data, GroupMatrix::identity(3), &config).unwrap();
    let (b, _) = fit(&data, singletons.clone(), &config).unwrap();
    for (i, row) in data.val_x.rows().into_iter().enumerate().take(200) {
        let x = row.to_vec();
        let ra = run_rollout(&a, &a, &x, a.groups(), 2, &mut instance_rng(0, i)).unwrap();
        let rb = run_rollout(&b, &b, &x, &singletons, 2, &mut instance_rng(0, i)).unwrap();
        assert_eq!(ra, rb);
    }
}

#[test]
fn pretrained_predictor_approaches_the_bayes_risk() {
    let (ds, data) = d2_data(50_000, 0);
    let config = TrainConfig::with_budget(2);
    let (model, log) = pretrain_predictor(&data, ds.groups.clone(), &config).unwrap();
    assert!(log.records.iter().all(|r| r.train_loss.is_finite()));
    let Targets::Classes { labels, .. } = &data.val_y else { unreachable!() };
    let n = data.val_x.nrows();

    let full = model.predict_classes_batch(data.val_x.view(), Array2::ones((n, 3)).view()).unwrap();
    let ce = full.iter().zip(labels).map(|(p, &y)| cross_entropy(p, y).unwrap()).sum::<f64>() / n as f64;
    let table = channel_table::<f64>();
    let bayes_risk: f64 = table
        .possible_evidence()
        .into_iter()
        .filter(|e| e.len() == 3)
        .map(|e| table.evidence_prob(&e).unwrap() * table.conditional_entropy(&e).unwrap())
        .sum();
    assert!((ce - bayes_risk).abs() <= 0.02, "validation CE {ce} vs H(y|x) {bayes_risk}");

    let Targets::Classes { labels: train_labels, .. } = ds.targets_of(Split::Train).unwrap() else { unreachable!() };
    let positive = train_labels.iter().filter(|&&y| y == 1).count() as f64 / train_labels.len() as f64;
    let prior = SimplexVector::new(vec![1.0 - positive, positive]).unwrap();
    let empty = model.predict_classes_batch(data.val_x.view(), Array2::zeros((n, 3)).view()).unwrap();
    assert!(empty[0].total_variation(&prior) <= 0.02, "{:?} vs {:?}", empty[0], prior);
}

#[test]
fn constant_labels_give_near_zero_loss() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut x = |n| Array2::from_shape_fn((n, 3), |_| rng.random_range(-1.0..1.0));
    let data = TrainingData {
        train_x: x(8000),
        train_y: Targets::Classes { labels: vec![1; 8000], classes: 2 },
        val_x: x(400),
        val_y: Targets::Classes { labels: vec![1; 400], classes: 2 },
    };
    let config = TrainConfig { budget: 1, hidden: vec![16], pretrain_epochs: 30, ..TrainConfig::default() };
    let (_, log) = pretrain_predictor(&data, GroupMatrix::identity(3), &config).unwrap();
    let best = log.records.iter().map(|r| r.val_loss).fold(f64::INFINITY, f64::min);
    assert!(best < 0.01, "{best}");
}
