//! A trained (or in-training) policy/predictor pair.

use ndarray::{Array2, ArrayView2, Axis};
use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::datasets::Standardization;
use crate::error::{Error, Result};
use crate::numerics::{argmax, tempered_softmax, NetworkParams, SimplexVector};
use crate::observation::{Observation, Policy, Prediction, Predictor};
use crate::scalar::Real;

use super::groups::GroupMatrix;
use super::mask::{apply_mask, masked_batch};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Classification { classes: usize },
    Regression,
}

impl Task {
    pub fn output_dim(&self) -> usize {
        match self {
            Task::Classification { classes } => *classes,
            Task::Regression => 1,
        }
    }
}

/// Which network and which output columns a role reads.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Head {
    pub net: usize,
    pub offset: usize,
    pub width: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DfsModel<T> {
    pub(crate) nets: Vec<NetworkParams<T>>,
    pub(crate) policy_head: Head,
    pub(crate) predictor_head: Head,
    groups: GroupMatrix,
    task: Task,
    standardization: Option<Standardization>,
}

impl<T: Real> DfsModel<T> {
    /// Freshly initialized networks. Inputs are `d + g` wide.
    pub fn init<R: Rng + ?Sized>(
        groups: GroupMatrix,
        task: Task,
        hidden: &[usize],
        dropout: f64,
        shared: bool,
        rng: &mut R,
    ) -> Result<Self> {
        let input = groups.feature_count() + groups.group_count();
        let g = groups.group_count();
        let out = task.output_dim();
        let widths = |o: usize| -> Vec<usize> {
            std::iter::once(input).chain(hidden.iter().copied()).chain(std::iter::once(o)).collect()
        };
        let dropout = T::lit(dropout);
        let nets = if shared {
            vec![NetworkParams::init(&widths(g + out), dropout, rng)?]
        } else {
            vec![
                NetworkParams::init(&widths(g), dropout, rng)?,
                NetworkParams::init(&widths(out), dropout, rng)?,
            ]
        };
        Self::from_networks(nets, groups, task, None)
    }

    /// Reassembles a model; one network means a shared backbone whose first
    /// `g` outputs are policy logits.
    pub fn from_networks(
        nets: Vec<NetworkParams<T>>,
        groups: GroupMatrix,
        task: Task,
        standardization: Option<Standardization>,
    ) -> Result<Self> {
        let g = groups.group_count();
        let out = task.output_dim();
        let input = groups.feature_count() + g;
        let (policy_head, predictor_head) = match nets.len() {
            1 => (Head { net: 0, offset: 0, width: g }, Head { net: 0, offset: g, width: out }),
            2 => (Head { net: 0, offset: 0, width: g }, Head { net: 1, offset: 0, width: out }),
            n => return Err(Error::Config(format!("expected 1 or 2 networks, got {n}"))),
        };
        for (net, head) in [(policy_head.net, policy_head), (predictor_head.net, predictor_head)] {
            if nets[net].input_dim() != input {
                return Err(Error::DimensionMismatch {
                    context: "model network input",
                    expected: input,
                    actual: nets[net].input_dim(),
                });
            }
            let needed = if nets.len() == 1 { g + out } else { head.offset + head.width };
            if nets[net].output_dim() != needed {
                return Err(Error::DimensionMismatch {
                    context: "model network output",
                    expected: needed,
                    actual: nets[net].output_dim(),
                });
            }
        }
        if let Some(s) = &standardization {
            if s.mean.len() != groups.feature_count() || s.scale.len() != groups.feature_count() {
                return Err(Error::DimensionMismatch {
                    context: "standardization record",
                    expected: groups.feature_count(),
                    actual: s.mean.len(),
                });
            }
        }
        Ok(DfsModel {
            nets,
            policy_head,
            predictor_head,
            groups,
            task,
            standardization,
        })
    }

    pub fn networks(&self) -> &[NetworkParams<T>] {
        &self.nets
    }

    pub fn is_shared(&self) -> bool {
        self.nets.len() == 1
    }

    pub fn groups(&self) -> &GroupMatrix {
        &self.groups
    }

    pub fn task(&self) -> Task {
        self.task
    }

    pub fn standardization(&self) -> Option<&Standardization> {
        self.standardization.as_ref()
    }

    pub fn set_standardization(&mut self, s: Option<Standardization>) -> Result<()> {
        *self = Self::from_networks(std::mem::take(&mut self.nets), self.groups.clone(), self.task, s)?;
        Ok(())
    }

    pub fn policy_network(&self) -> &NetworkParams<T> {
        &self.nets[self.policy_head.net]
    }

    pub fn predictor_network(&self) -> &NetworkParams<T> {
        &self.nets[self.predictor_head.net]
    }

    pub fn cast<U: Real>(&self) -> DfsModel<U> {
        DfsModel {
            nets: self.nets.iter().map(|n| n.cast()).collect(),
            policy_head: self.policy_head,
            predictor_head: self.predictor_head,
            groups: self.groups.clone(),
            task: self.task,
            standardization: self.standardization.clone(),
        }
    }

    pub(crate) fn head_columns(&self, head: Head, out: &Array2<T>) -> Array2<T> {
        out.slice(ndarray::s![.., head.offset..head.offset + head.width]).to_owned()
    }

    /// Raw policy logits for a batch of (standardized) features and masks; acquired
    /// groups are set to `-inf`.
    pub fn policy_logits_batch(&self, x: ArrayView2<T>, mask: ArrayView2<T>) -> Result<Array2<T>> {
        let input = masked_batch(x, mask, &self.groups);
        let out = self.nets[self.policy_head.net].predict_batch(input.view())?;
        let mut logits = self.head_columns(self.policy_head, &out);
        exclude_selected(&mut logits, mask);
        Ok(logits)
    }

    /// Predictor outputs (class logits or the regression value) for a batch.
    pub fn predictor_outputs_batch(&self, x: ArrayView2<T>, mask: ArrayView2<T>) -> Result<Array2<T>> {
        let input = masked_batch(x, mask, &self.groups);
        let out = self.nets[self.predictor_head.net].predict_batch(input.view())?;
        Ok(self.head_columns(self.predictor_head, &out))
    }

    /// Greedy decoding: the highest-logit group among those not yet acquired.
    ///
    /// `x` is already standardized; `mask` is the group-level hard mask.
    pub fn policy_select(&self, x: &[T], mask: &[T]) -> Result<usize> {
        let masked = apply_mask(x, mask, &self.groups)?;
        if mask.iter().all(|m| *m >= T::one()) {
            return Err(Error::AllSelected);
        }
        let out = self.nets[self.policy_head.net].predict(&masked.network_input())?;
        let mut logits = out[self.policy_head.offset..self.policy_head.offset + self.policy_head.width].to_vec();
        for (l, m) in logits.iter_mut().zip(mask) {
            if *m > T::zero() {
                *l = T::neg_infinity();
            }
        }
        argmax(&logits).filter(|&j| logits[j].is_finite()).ok_or(Error::AllSelected)
    }

    pub fn predict_standardized(&self, x: &[T], mask: &[T]) -> Result<Prediction<T>> {
        let masked = apply_mask(x, mask, &self.groups)?;
        let out = self.nets[self.predictor_head.net].predict(&masked.network_input())?;
        let head = &out[self.predictor_head.offset..self.predictor_head.offset + self.predictor_head.width];
        Ok(match self.task {
            Task::Classification { .. } => Prediction::Classes(tempered_softmax(head, T::one())?),
            Task::Regression => Prediction::Value(head[0]),
        })
    }

    /// Standardized feature vector for an observation (zeros where not acquired).
    pub fn standardize_observation(&self, obs: &Observation<T>) -> Result<Vec<T>> {
        if obs.feature_count() != self.groups.feature_count() || obs.group_count() != self.groups.group_count() {
            return Err(Error::DimensionMismatch {
                context: "observation shape",
                expected: self.groups.feature_count(),
                actual: obs.feature_count(),
            });
        }
        let mut x = obs.values().to_vec();
        if let Some(s) = &self.standardization {
            for (f, v) in x.iter_mut().enumerate() {
                if obs.is_observed(self.groups.group_of(f)) {
                    *v = T::lit((v.as_f64() - s.mean[f]) / s.scale[f]);
                } else {
                    *v = T::zero();
                }
            }
        }
        Ok(x)
    }

    /// Class probabilities for a batch, as simplex vectors.
    pub fn predict_classes_batch(&self, x: ArrayView2<T>, mask: ArrayView2<T>) -> Result<Vec<SimplexVector<T>>> {
        let out = self.predictor_outputs_batch(x, mask)?;
        out.axis_iter(Axis(0)).map(|row| tempered_softmax(row.as_slice().expect("contiguous row"), T::one())).collect()
    }
}

pub(crate) fn exclude_selected<T: Real>(logits: &mut Array2<T>, mask: ArrayView2<T>) {
    ndarray::Zip::from(logits).and(mask).for_each(|l, &m| {
        if m > T::zero() {
            *l = T::neg_infinity();
        }
    });
}

impl<T: Real> Policy<T> for DfsModel<T> {
    fn select(&self, obs: &Observation<T>, _rng: &mut dyn RngCore) -> Result<usize> {
        let x = self.standardize_observation(obs)?;
        self.policy_select(&x, &obs.mask())
    }
}

impl<T: Real> Predictor<T> for DfsModel<T> {
    fn predict(&self, obs: &Observation<T>) -> Result<Prediction<T>> {
        let x = self.standardize_observation(obs)?;
        self.predict_standardized(&x, &obs.mask())
    }
}
