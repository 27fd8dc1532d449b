//! Budget-sweep evaluation of any policy/predictor pair.
//!
//! Rollouts start from nothing acquired and alternate a policy selection with a
//! predictor call. Each instance gets its own rng stream (master seed, instance
//! index), so results do not depend on evaluation order.

mod baselines;
mod curve;
mod metrics;

use ndarray::{Array2, ArrayView2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::amortized::{GroupMatrix, Targets};
use crate::error::{Error, Result};
use crate::observation::{Observation, Policy, Prediction, Predictor};
use crate::oracle::{Evidence, JointTable};
use crate::scalar::Real;

pub use baselines::{baseline_policy, BaselineKind, OracleGreedy, OracleLookahead, RandomPolicy, StaticRanked};
pub use curve::{frequency_csv, BudgetCurve, Summary};
pub use metrics::{binary_auroc, compute_metric, macro_auroc, Metric};

#[derive(Debug, Clone, PartialEq)]
pub struct Rollout<T> {
    pub selections: Vec<usize>,
    /// Prediction after each selection.
    pub predictions: Vec<Prediction<T>>,
    /// Prediction at the end of the rollout (with nothing acquired when `k = 0`).
    pub final_prediction: Prediction<T>,
}

/// The rng stream used for instance `index` under `seed`.
pub fn instance_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

fn checked_select<T: Real, P: Policy<T> + ?Sized>(
    policy: &P,
    obs: &Observation<T>,
    rng: &mut ChaCha8Rng,
) -> Result<usize> {
    let g = policy.select(obs, rng)?;
    if g >= obs.group_count() {
        return Err(Error::PolicyContract(format!("selected group {g} of {}", obs.group_count())));
    }
    if obs.is_observed(g) {
        return Err(Error::PolicyContract(format!("selected group {g} twice")));
    }
    Ok(g)
}

fn check_budget(k: usize, groups: &GroupMatrix) -> Result<()> {
    if k > groups.group_count() {
        return Err(Error::Config(format!("budget {k} exceeds {} groups", groups.group_count())));
    }
    Ok(())
}

pub fn run_rollout<T: Real, P: Policy<T> + ?Sized, F: Predictor<T> + ?Sized>(
    policy: &P,
    predictor: &F,
    x: &[T],
    groups: &GroupMatrix,
    k: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Rollout<T>> {
    check_budget(k, groups)?;
    let mut obs = Observation::empty(groups.feature_count(), groups.group_count());
    let mut selections = Vec::with_capacity(k);
    let mut predictions = Vec::with_capacity(k);
    for _ in 0..k {
        let g = checked_select(policy, &obs, rng)?;
        obs.reveal(x, g, groups)?;
        selections.push(g);
        predictions.push(predictor.predict(&obs)?);
    }
    let final_prediction = match predictions.last() {
        Some(p) => p.clone(),
        None => predictor.predict(&obs)?,
    };
    Ok(Rollout { selections, predictions, final_prediction })
}

/// Selections only, for policies evaluated without a predictor.
pub fn run_selections<T: Real, P: Policy<T> + ?Sized>(
    policy: &P,
    x: &[T],
    groups: &GroupMatrix,
    k: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<usize>> {
    check_budget(k, groups)?;
    let mut obs = Observation::empty(groups.feature_count(), groups.group_count());
    let mut selections = Vec::with_capacity(k);
    for _ in 0..k {
        let g = checked_select(policy, &obs, rng)?;
        obs.reveal(x, g, groups)?;
        selections.push(g);
    }
    Ok(selections)
}

fn row<T: Real>(rows: ArrayView2<T>, i: usize) -> Vec<T> {
    rows.row(i).to_vec()
}

/// Mean metric over the rows at budget `k`.
#[allow(clippy::too_many_arguments)]
pub fn score_budget<T: Real, P: Policy<T> + ?Sized, F: Predictor<T> + ?Sized>(
    policy: &P,
    predictor: &F,
    rows: ArrayView2<T>,
    targets: &Targets<T>,
    groups: &GroupMatrix,
    k: usize,
    metric: Metric,
    seed: u64,
) -> Result<T> {
    let finals: Vec<Prediction<T>> = (0..rows.nrows())
        .map(|i| run_rollout(policy, predictor, &row(rows, i), groups, k, &mut instance_rng(seed, i)).map(|r| r.final_prediction))
        .collect::<Result<_>>()?;
    compute_metric(metric, &finals, targets)
}

/// Metric at every budget in `budgets` from one rollout per row, scoring prefixes.
///
/// Only valid for policies whose choice does not depend on the total budget.
#[allow(clippy::too_many_arguments)]
pub fn score_curve<T: Real, P: Policy<T> + ?Sized, F: Predictor<T> + ?Sized>(
    policy: &P,
    predictor: &F,
    rows: ArrayView2<T>,
    targets: &Targets<T>,
    groups: &GroupMatrix,
    budgets: &[usize],
    metric: Metric,
    seed: u64,
) -> Result<Vec<T>> {
    let max = budgets.iter().copied().max().unwrap_or(0);
    let mut per_budget: Vec<Vec<Prediction<T>>> = vec![Vec::with_capacity(rows.nrows()); budgets.len()];
    for i in 0..rows.nrows() {
        let r = run_rollout(policy, predictor, &row(rows, i), groups, max, &mut instance_rng(seed, i))?;
        for (b, &k) in budgets.iter().enumerate() {
            let p = if k == 0 {
                predictor.predict(&Observation::empty(groups.feature_count(), groups.group_count()))?
            } else {
                r.predictions[k - 1].clone()
            };
            per_budget[b].push(p);
        }
    }
    per_budget.iter().map(|preds| compute_metric(metric, preds, targets)).collect()
}

/// Entry `(b, j)`: fraction of rows whose first `budgets[b]` selections include group `j`.
pub fn selection_frequency<T: Real, P: Policy<T> + ?Sized>(
    policy: &P,
    rows: ArrayView2<T>,
    groups: &GroupMatrix,
    budgets: &[usize],
    seed: u64,
) -> Result<Array2<f64>> {
    let max = budgets.iter().copied().max().unwrap_or(0);
    let mut counts = Array2::<f64>::zeros((budgets.len(), groups.group_count()));
    for i in 0..rows.nrows() {
        let picks = run_selections(policy, &row(rows, i), groups, max, &mut instance_rng(seed, i))?;
        for (b, &k) in budgets.iter().enumerate() {
            for &g in &picks[..k] {
                counts[[b, g]] += 1.0;
            }
        }
    }
    if rows.nrows() > 0 {
        counts /= rows.nrows() as f64;
    }
    Ok(counts)
}

/// Exact expected cross-entropy of the Bayes predictor after `k` greedy oracle
/// selections, by enumerating every reachable evidence state.
pub fn exact_greedy_value<T: Real>(table: &JointTable<T>, k: usize) -> Result<T> {
    fn value<T: Real>(table: &JointTable<T>, e: &Evidence, remaining: usize) -> Result<T> {
        if remaining == 0 || e.len() == table.feature_count() {
            return table.conditional_entropy(e);
        }
        let i = table.greedy_oracle_policy(e)?;
        let cond = table.conditional_feature(e, i)?;
        let mut total = T::zero();
        for (v, &p) in cond.as_slice().iter().enumerate() {
            if p > T::zero() {
                total += p * value(table, &e.with(i, v)?, remaining - 1)?;
            }
        }
        Ok(total)
    }
    value(table, &Evidence::new(), k)
}
