//! Exact ground truth on small discrete distributions.
//!
//! Everything here is computed by enumerating the joint table, so it serves as
//! the reference for the estimator and the learned models.

mod evidence;
mod format;
mod synthetic;
mod table;

pub use evidence::Evidence;
pub use synthetic::{channel_table, random_table, regression_toy_table, switch_table};
pub use table::{
    InstanceSampler, JointTable, TableTarget, Target, CMI_TIE_TOLERANCE, MAX_CONFIGURATIONS, MAX_FEATURES,
};

#[cfg(test)]
mod tests;
