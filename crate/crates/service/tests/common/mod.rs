#![allow(dead_code)]

use std::sync::OnceLock;

use dfs_core::amortized::{fit, TrainConfig};
use dfs_core::datasets::{generate_synthetic, split_standardize, SyntheticSpec, DEFAULT_FRACTIONS};
use dfs_service::ModelBundle;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn small_config(budget: usize, seed: u64) -> TrainConfig {
    TrainConfig {
        budget,
        hidden: vec![32, 32],
        max_epochs: 8,
        pretrain_epochs: 8,
        seed,
        ..TrainConfig::default()
    }
}

pub fn train_bundle(spec: SyntheticSpec, n: usize, config: &TrainConfig) -> ModelBundle {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let (ds, _) = generate_synthetic(spec, n, &mut rng).unwrap();
    let ds = split_standardize(&ds, DEFAULT_FRACTIONS, &mut rng).unwrap();
    let data = ds.training_data::<f64>().unwrap();
    let (mut model, _) = fit(&data, ds.groups.clone(), config).unwrap();
    model.set_standardization(ds.standardization.clone()).unwrap();
    ModelBundle::new(&model, ds.feature_names.clone(), ds.group_names.clone(), ds.class_names.clone(), Some(config.clone()))
        .unwrap()
}

/// A small D2 model shared by the tests of one binary.
pub fn d2_bundle() -> &'static ModelBundle {
    static BUNDLE: OnceLock<ModelBundle> = OnceLock::new();
    BUNDLE.get_or_init(|| train_bundle(SyntheticSpec::D2Channel, 8000, &small_config(2, 1)))
}
