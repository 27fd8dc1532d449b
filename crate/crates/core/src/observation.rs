//! The policy/predictor contract shared by oracles, estimators and learned models.
//!
//! An [`Observation`] is what a policy sees mid-rollout: raw feature values for
//! the acquired groups (zero elsewhere) and a group-level acquisition mask.

use rand::RngCore;

use crate::amortized::GroupMatrix;
use crate::error::{Error, Result};
use crate::numerics::SimplexVector;
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct Observation<T> {
    values: Vec<T>,
    observed: Vec<bool>,
}

impl<T: Real> Observation<T> {
    pub fn empty(feature_count: usize, group_count: usize) -> Self {
        Observation {
            values: vec![T::zero(); feature_count],
            observed: vec![false; group_count],
        }
    }

    /// Observation of `x` with exactly the groups in `mask` acquired.
    pub fn from_mask(x: &[T], mask: &[bool], groups: &GroupMatrix) -> Result<Self> {
        let mut obs = Self::empty(groups.feature_count(), groups.group_count());
        if mask.len() != groups.group_count() {
            return Err(Error::DimensionMismatch {
                context: "observation mask",
                expected: groups.group_count(),
                actual: mask.len(),
            });
        }
        for (g, _) in mask.iter().enumerate().filter(|(_, m)| **m) {
            obs.reveal(x, g, groups)?;
        }
        Ok(obs)
    }

    /// Copies group `group`'s features from `x` and marks it acquired.
    pub fn reveal(&mut self, x: &[T], group: usize, groups: &GroupMatrix) -> Result<()> {
        if x.len() != self.values.len() {
            return Err(Error::DimensionMismatch {
                context: "instance features",
                expected: self.values.len(),
                actual: x.len(),
            });
        }
        self.reveal_values(group, &groups.members(group)?.iter().map(|&f| x[f]).collect::<Vec<_>>(), groups)
    }

    /// Marks `group` acquired with the given member values (in member order).
    pub fn reveal_values(&mut self, group: usize, values: &[T], groups: &GroupMatrix) -> Result<()> {
        let members = groups.members(group)?;
        if self.observed[group] {
            return Err(Error::AlreadyObserved(group));
        }
        if values.len() != members.len() {
            return Err(Error::DimensionMismatch {
                context: "group values",
                expected: members.len(),
                actual: values.len(),
            });
        }
        for (&f, &v) in members.iter().zip(values) {
            self.values[f] = v;
        }
        self.observed[group] = true;
        Ok(())
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn observed(&self) -> &[bool] {
        &self.observed
    }

    pub fn is_observed(&self, group: usize) -> bool {
        self.observed[group]
    }

    pub fn observed_count(&self) -> usize {
        self.observed.iter().filter(|&&o| o).count()
    }

    pub fn unobserved(&self) -> impl Iterator<Item = usize> + '_ {
        self.observed.iter().enumerate().filter(|(_, o)| !**o).map(|(g, _)| g)
    }

    pub fn group_count(&self) -> usize {
        self.observed.len()
    }

    pub fn feature_count(&self) -> usize {
        self.values.len()
    }

    /// The acquisition mask as reals (1 for acquired groups).
    pub fn mask(&self) -> Vec<T> {
        self.observed.iter().map(|&o| if o { T::one() } else { T::zero() }).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Prediction<T> {
    Classes(SimplexVector<T>),
    Value(T),
}

impl<T: Real> Prediction<T> {
    pub fn classes(&self) -> Result<&SimplexVector<T>> {
        match self {
            Prediction::Classes(p) => Ok(p),
            Prediction::Value(_) => Err(Error::TaskMismatch { expected: "classification" }),
        }
    }

    pub fn value(&self) -> Result<T> {
        match self {
            Prediction::Value(v) => Ok(*v),
            Prediction::Classes(_) => Err(Error::TaskMismatch { expected: "regression" }),
        }
    }
}

/// Chooses the next group to acquire. Must never return an acquired group.
pub trait Policy<T: Real> {
    fn select(&self, obs: &Observation<T>, rng: &mut dyn RngCore) -> Result<usize>;
}

pub trait Predictor<T: Real> {
    fn predict(&self, obs: &Observation<T>) -> Result<Prediction<T>>;
}

impl<T: Real, P: Policy<T> + ?Sized> Policy<T> for &P {
    fn select(&self, obs: &Observation<T>, rng: &mut dyn RngCore) -> Result<usize> {
        (**self).select(obs, rng)
    }
}

impl<T: Real, P: Predictor<T> + ?Sized> Predictor<T> for &P {
    fn predict(&self, obs: &Observation<T>) -> Result<Prediction<T>> {
        (**self).predict(obs)
    }
}

impl<T: Real, P: Policy<T> + ?Sized> Policy<T> for Box<P> {
    fn select(&self, obs: &Observation<T>, rng: &mut dyn RngCore) -> Result<usize> {
        (**self).select(obs, rng)
    }
}

impl<T: Real, P: Predictor<T> + ?Sized> Predictor<T> for Box<P> {
    fn predict(&self, obs: &Observation<T>) -> Result<Prediction<T>> {
        (**self).predict(obs)
    }
}
