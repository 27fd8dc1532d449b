//! Masked network inputs: `concat(x ⊙ (G m), m)`, features first, then the group mask.

use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};
use crate::scalar::Real;

use super::groups::GroupMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct MaskedInstance<T> {
    pub features: Vec<T>,
    pub mask: Vec<T>,
}

impl<T: Real> MaskedInstance<T> {
    /// The network input: masked features followed by the mask.
    pub fn network_input(&self) -> Vec<T> {
        self.features.iter().chain(&self.mask).copied().collect()
    }
}

pub fn apply_mask<T: Real>(x: &[T], mask: &[T], groups: &GroupMatrix) -> Result<MaskedInstance<T>> {
    if x.len() != groups.feature_count() {
        return Err(Error::DimensionMismatch {
            context: "apply_mask features",
            expected: groups.feature_count(),
            actual: x.len(),
        });
    }
    if let Some(v) = mask.iter().find(|v| !(**v >= T::zero() && **v <= T::one())) {
        return Err(Error::Config(format!("mask entry {v} outside [0, 1]")));
    }
    let expanded = groups.expand(mask)?;
    Ok(MaskedInstance {
        features: x.iter().zip(&expanded).map(|(a, b)| *a * *b).collect(),
        mask: mask.to_vec(),
    })
}

/// Row-wise [`apply_mask`] for a batch: `x` is `[B, d]`, `mask` is `[B, g]`.
pub(crate) fn masked_batch<T: Real>(x: ArrayView2<T>, mask: ArrayView2<T>, groups: &GroupMatrix) -> Array2<T> {
    let (b, d) = x.dim();
    let g = groups.group_count();
    let assignment = groups.assignment();
    let mut out = Array2::zeros((b, d + g));
    for ((mut row, xr), mr) in out.rows_mut().into_iter().zip(x.rows()).zip(mask.rows()) {
        for f in 0..d {
            row[f] = xr[f] * mr[assignment[f]];
        }
        for j in 0..g {
            row[d + j] = mr[j];
        }
    }
    out
}

/// Pulls `dL/d(input)` back to `dL/d(mask)` for a batch built by [`masked_batch`].
pub(crate) fn mask_gradient<T: Real>(x: ArrayView2<T>, input_grad: ArrayView2<T>, groups: &GroupMatrix) -> Array2<T> {
    let (b, d) = x.dim();
    let g = groups.group_count();
    let assignment = groups.assignment();
    let mut out = Array2::zeros((b, g));
    for ((mut row, xr), gr) in out.rows_mut().into_iter().zip(x.rows()).zip(input_grad.rows()) {
        for f in 0..d {
            row[assignment[f]] += xr[f] * gr[f];
        }
        for j in 0..g {
            row[j] += gr[d + j];
        }
    }
    out
}
