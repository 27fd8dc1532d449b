use rand::{Rng, RngCore};

use crate::cmi_estimator::{EstimatorPolicy, FeatureSampler};
use crate::error::{Error, Result};
use crate::observation::{Observation, Policy, Predictor};
use crate::oracle::{Evidence, JointTable};
use crate::scalar::Real;

/// Uniform choice among unacquired groups.
#[derive(Debug, Clone, Copy, Default)]
pub struct RandomPolicy;

impl<T: Real> Policy<T> for RandomPolicy {
    fn select(&self, obs: &Observation<T>, rng: &mut dyn RngCore) -> Result<usize> {
        let open: Vec<usize> = obs.unobserved().collect();
        if open.is_empty() {
            return Err(Error::AllSelected);
        }
        Ok(open[rng.random_range(0..open.len())])
    }
}

/// The same order for every instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StaticRanked {
    ranking: Vec<usize>,
}

impl StaticRanked {
    /// `ranking` must be a permutation of `0..groups`.
    pub fn new(ranking: Vec<usize>, groups: usize) -> Result<Self> {
        let mut seen = vec![false; groups];
        for &g in &ranking {
            if g >= groups || seen[g] {
                return Err(Error::Config(format!("ranking {ranking:?} is not a permutation of 0..{groups}")));
            }
            seen[g] = true;
        }
        if ranking.len() != groups {
            return Err(Error::Config(format!("ranking {ranking:?} is not a permutation of 0..{groups}")));
        }
        Ok(StaticRanked { ranking })
    }

    /// Ranking that starts with `prefix` and continues with the remaining groups in index order.
    pub fn from_prefix(prefix: &[usize], groups: usize) -> Result<Self> {
        let mut ranking = prefix.to_vec();
        ranking.extend((0..groups).filter(|g| !prefix.contains(g)));
        Self::new(ranking, groups)
    }

    pub fn ranking(&self) -> &[usize] {
        &self.ranking
    }
}

impl<T: Real> Policy<T> for StaticRanked {
    fn select(&self, obs: &Observation<T>, _rng: &mut dyn RngCore) -> Result<usize> {
        if obs.group_count() != self.ranking.len() {
            return Err(Error::DimensionMismatch {
                context: "static ranking",
                expected: self.ranking.len(),
                actual: obs.group_count(),
            });
        }
        self.ranking.iter().copied().find(|&g| !obs.is_observed(g)).ok_or(Error::AllSelected)
    }
}

/// Exact greedy CMI policy on a joint table.
#[derive(Debug, Clone, Copy)]
pub struct OracleGreedy<'a, T>(pub &'a JointTable<T>);

impl<T: Real> Policy<T> for OracleGreedy<'_, T> {
    fn select(&self, obs: &Observation<T>, _rng: &mut dyn RngCore) -> Result<usize> {
        self.0.greedy_oracle_policy(&Evidence::from_observation(obs)?)
    }
}

/// Exhaustive non-myopic optimum for a fixed total budget.
#[derive(Debug, Clone, Copy)]
pub struct OracleLookahead<'a, T> {
    pub table: &'a JointTable<T>,
    pub budget: usize,
}

impl<T: Real> Policy<T> for OracleLookahead<'_, T> {
    fn select(&self, obs: &Observation<T>, _rng: &mut dyn RngCore) -> Result<usize> {
        let remaining = self.budget.saturating_sub(obs.observed_count()).max(1);
        let (_, pick) = self.table.lookahead_policy(&Evidence::from_observation(obs)?, remaining)?;
        pick.ok_or(Error::AllSelected)
    }
}

pub enum BaselineKind<'a, T> {
    Random,
    StaticRanked { ranking: Vec<usize>, groups: usize },
    OracleGreedy(&'a JointTable<T>),
    OracleLookahead { table: &'a JointTable<T>, budget: usize },
    Estimator { sampler: FeatureSampler<'a, T>, predictor: Box<dyn Predictor<T> + 'a>, samples: usize },
}

pub fn baseline_policy<'a, T: Real>(kind: BaselineKind<'a, T>) -> Result<Box<dyn Policy<T> + 'a>> {
    Ok(match kind {
        BaselineKind::Random => Box::new(RandomPolicy),
        BaselineKind::StaticRanked { ranking, groups } => Box::new(StaticRanked::new(ranking, groups)?),
        BaselineKind::OracleGreedy(table) => Box::new(OracleGreedy(table)),
        BaselineKind::OracleLookahead { table, budget } => Box::new(OracleLookahead { table, budget }),
        BaselineKind::Estimator { sampler, predictor, samples } => {
            if samples < 2 {
                return Err(Error::Config(format!("estimator needs at least 2 samples, got {samples}")));
            }
            Box::new(EstimatorPolicy { sampler, predictor, samples })
        }
    })
}
