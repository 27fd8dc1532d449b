//! Amortized greedy selection: a policy network trained jointly with a
//! predictor network so that one forward pass yields the next group to acquire.

mod config;
mod groups;
mod mask;
mod model;
mod subsets;
mod train;

pub use config::{StopMetric, SubsetSource, TrainConfig};
pub use groups::GroupMatrix;
pub use mask::{apply_mask, MaskedInstance};
pub use model::{DfsModel, Task};
pub use subsets::SubsetDistribution;
pub use train::{
    fit, pretrain_predictor, rollout_selections, train_joint, relaxed_loss, zero_temperature_loss, LogRecord, Phase, Targets,
    TrainingData, TrainingLog,
};
