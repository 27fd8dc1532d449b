//! Monte-Carlo CMI estimates from a predictor and a feature sampler.
//!
//! For a candidate group `i` the estimator draws `n` values of `x_i`, asks the
//! predictor for `p_j = p(y | x_s, x_i = x_i^j)` and returns the mean KL
//! divergence of each `p_j` from their average. With the true conditional
//! sampler and the Bayes predictor this converges to `I(y; x_i | x_s)`.

use ndarray::Array2;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::amortized::GroupMatrix;
use crate::error::{Error, Result};
use crate::numerics::{kl_divergence, SimplexVector};
use crate::observation::{Observation, Policy, Prediction, Predictor};
use crate::oracle::{Evidence, JointTable};
use crate::scalar::Real;

/// Default number of draws per candidate for learned-model runs.
pub const DEFAULT_SAMPLES: usize = 128;

/// Rejected draws allowed per requested draw before giving up.
const REJECTION_FACTOR: usize = 100;

/// Training rows kept for marginal resampling.
#[derive(Debug, Clone)]
pub struct ColumnStore<T> {
    rows: Array2<T>,
    groups: GroupMatrix,
}

impl<T: Real> ColumnStore<T> {
    pub fn new(rows: Array2<T>, groups: GroupMatrix) -> Result<Self> {
        if rows.ncols() != groups.feature_count() {
            return Err(Error::DimensionMismatch {
                context: "column store",
                expected: groups.feature_count(),
                actual: rows.ncols(),
            });
        }
        if rows.nrows() == 0 {
            return Err(Error::InvalidDataset("column store needs at least one row".into()));
        }
        Ok(ColumnStore { rows, groups })
    }

    pub fn groups(&self) -> &GroupMatrix {
        &self.groups
    }

    pub fn len(&self) -> usize {
        self.rows.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.nrows() == 0
    }
}

#[derive(Debug, Clone, Copy)]
pub enum FeatureSampler<'a, T> {
    /// Exact `p(x_i | x_s)` from a joint table (one group per feature).
    OracleConditional(&'a JointTable<T>),
    /// A uniformly drawn training row's values for the group, ignoring evidence.
    MarginalEmpirical(&'a ColumnStore<T>),
}

impl<T: Real> FeatureSampler<'_, T> {
    pub fn groups(&self) -> GroupMatrix {
        match self {
            FeatureSampler::OracleConditional(t) => GroupMatrix::identity(t.feature_count()),
            FeatureSampler::MarginalEmpirical(s) => s.groups.clone(),
        }
    }

    /// Member values of `group` drawn for observation `obs`.
    pub fn draw<R: Rng + ?Sized>(&self, obs: &Observation<T>, group: usize, rng: &mut R) -> Result<Vec<T>> {
        match self {
            FeatureSampler::OracleConditional(table) => {
                let e = Evidence::from_observation(obs)?;
                let v = table.conditional_sampler(&e, group, rng)?;
                Ok(vec![T::lit(v as f64)])
            }
            FeatureSampler::MarginalEmpirical(store) => {
                let row = rng.random_range(0..store.rows.nrows());
                Ok(store.groups.members(group)?.iter().map(|&f| store.rows[[row, f]]).collect())
            }
        }
    }

    fn redraws_impossible(&self) -> bool {
        matches!(self, FeatureSampler::MarginalEmpirical(_))
    }
}

/// The Bayes posterior of a joint table as a predictor over category codes.
#[derive(Debug, Clone, Copy)]
pub struct TablePredictor<'a, T>(pub &'a JointTable<T>);

impl<T: Real> Predictor<T> for TablePredictor<'_, T> {
    fn predict(&self, obs: &Observation<T>) -> Result<Prediction<T>> {
        let e = Evidence::from_observation(obs)?;
        if self.0.is_regression() {
            Ok(Prediction::Value(self.0.regression_moments(&e)?.0))
        } else {
            Ok(Prediction::Classes(self.0.bayes_posterior(&e)?))
        }
    }
}

/// `(1/n) Σ_j KL(p_j ‖ p̄)` over `n` draws of group `group`.
pub fn estimate_cmi<T: Real, P: Predictor<T> + ?Sized, R: Rng + ?Sized>(
    sampler: &FeatureSampler<'_, T>,
    predictor: &P,
    obs: &Observation<T>,
    group: usize,
    n: usize,
    rng: &mut R,
) -> Result<T> {
    if n < 2 {
        return Err(Error::Config(format!("estimate_cmi needs n >= 2 draws, got {n}")));
    }
    if group >= obs.group_count() {
        return Err(Error::DimensionMismatch { context: "candidate group", expected: obs.group_count(), actual: group });
    }
    if obs.is_observed(group) {
        return Err(Error::AlreadyObserved(group));
    }
    let groups = sampler.groups();
    let mut preds: Vec<SimplexVector<T>> = Vec::with_capacity(n);
    let mut rejected = 0;
    while preds.len() < n {
        let values = sampler.draw(obs, group, rng)?;
        let mut augmented = obs.clone();
        augmented.reveal_values(group, &values, &groups)?;
        match predictor.predict(&augmented) {
            Ok(p) => preds.push(p.classes()?.clone()),
            Err(Error::ImpossibleEvidence) if sampler.redraws_impossible() => {
                rejected += 1;
                if rejected >= REJECTION_FACTOR * n {
                    return Err(Error::Sampling(format!(
                        "{rejected} draws of group {group} gave impossible evidence"
                    )));
                }
            }
            Err(e) => return Err(e),
        }
    }
    let k = preds[0].dim();
    let mut mean = vec![T::zero(); k];
    for p in &preds {
        if p.dim() != k {
            return Err(Error::DimensionMismatch { context: "predictor output", expected: k, actual: p.dim() });
        }
        for (m, &v) in mean.iter_mut().zip(p.as_slice()) {
            *m += v;
        }
    }
    let mean = SimplexVector::from_weights(mean)?;
    let mut total = T::zero();
    for p in &preds {
        total += kl_divergence(p, &mean)?;
    }
    Ok(total / T::lit(n as f64))
}

/// Independent stream for candidate `group` under `master_seed`.
pub fn feature_stream(master_seed: u64, group: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(group as u64);
    rng
}

/// Estimates for every unacquired group, each from its own stream.
pub fn estimate_all<T: Real, P: Predictor<T> + ?Sized>(
    sampler: &FeatureSampler<'_, T>,
    predictor: &P,
    obs: &Observation<T>,
    n: usize,
    master_seed: u64,
) -> Result<Vec<(usize, T)>> {
    obs.unobserved()
        .map(|g| {
            let mut rng = feature_stream(master_seed, g);
            estimate_cmi(sampler, predictor, obs, g, n, &mut rng).map(|v| (g, v))
        })
        .collect()
}

/// Highest estimated CMI among unacquired groups; ties go to the lowest index.
pub fn estimator_policy<T: Real, P: Predictor<T> + ?Sized>(
    sampler: &FeatureSampler<'_, T>,
    predictor: &P,
    obs: &Observation<T>,
    n: usize,
    master_seed: u64,
) -> Result<usize> {
    let mut open = obs.unobserved();
    let first = open.next().ok_or(Error::AllSelected)?;
    if open.next().is_none() {
        return Ok(first);
    }
    let scores = estimate_all(sampler, predictor, obs, n, master_seed)?;
    let mut best = scores[0];
    for &(g, v) in &scores[1..] {
        if v > best.1 {
            best = (g, v);
        }
    }
    Ok(best.0)
}

/// [`estimator_policy`] as a [`Policy`]; each call takes its master seed from the caller's rng.
pub struct EstimatorPolicy<'a, T, P> {
    pub sampler: FeatureSampler<'a, T>,
    pub predictor: P,
    pub samples: usize,
}

impl<T: Real, P: Predictor<T>> Policy<T> for EstimatorPolicy<'_, T, P> {
    fn select(&self, obs: &Observation<T>, rng: &mut dyn RngCore) -> Result<usize> {
        let seed = rng.next_u64();
        estimator_policy(&self.sampler, &self.predictor, obs, self.samples, seed)
    }
}
