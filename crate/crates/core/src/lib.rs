//! Greedy dynamic feature selection.
//!
//! The crate implements the greedy conditional-mutual-information policy three
//! ways: exactly on enumerable discrete distributions ([`oracle`]), with a
//! sampling estimator ([`cmi_estimator`]), and as an amortized policy/predictor
//! network pair trained jointly ([`amortized`]). [`evaluation`] scores any
//! policy/predictor pair over feature budgets and [`datasets`] provides
//! synthetic distributions with known oracles plus CSV ingestion.
//!
//! Numeric code is generic over [`Real`] (`f32` or `f64`); the aliases below
//! fix the scalar to `f64`, which is what the CLI and tests use.

// `!(x > y)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod amortized;
pub mod cmi_estimator;
pub mod datasets;
pub mod error;
pub mod evaluation;
pub mod numerics;
pub mod observation;
pub mod oracle;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Simplex = numerics::SimplexVector<f64>;
pub type Network = numerics::NetworkParams<f64>;
pub type Optimizer = numerics::OptState<f64>;
pub type Table = oracle::JointTable<f64>;
pub type Model = amortized::DfsModel<f64>;
pub type Obs = observation::Observation<f64>;
