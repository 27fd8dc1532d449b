//! Exact discrete joint distributions and every query computed on them by enumeration.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rand_distr::Normal;

use crate::error::{Error, Result};
use crate::numerics::{entropy, kl_divergence, SimplexVector};
use crate::scalar::Real;

use super::evidence::Evidence;

pub const MAX_FEATURES: usize = 16;
pub const MAX_CONFIGURATIONS: u128 = 1 << 20;
/// CMI values closer than this are treated as tied.
pub const CMI_TIE_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub enum TableTarget<T> {
    /// `prob[config * classes + y] = p(x = config, y)`.
    Classes { classes: usize, prob: Vec<T> },
    /// Per configuration: `p(x)`, `E[y | x]` and `Var(y | x)`.
    Regression { prob: Vec<T>, mean: Vec<T>, var: Vec<T> },
}

/// Target drawn alongside a sampled configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Target<T> {
    Class(usize),
    Real(T),
}

#[derive(Debug, Clone, PartialEq)]
pub struct JointTable<T> {
    cardinalities: Vec<usize>,
    strides: Vec<usize>,
    names: Vec<String>,
    target: TableTarget<T>,
}

fn default_names(d: usize) -> Vec<String> {
    (0..d).map(|i| format!("x{i}")).collect()
}

impl<T: Real> JointTable<T> {
    pub fn classification(
        cardinalities: Vec<usize>,
        classes: usize,
        prob: Vec<T>,
        names: Option<Vec<String>>,
    ) -> Result<Self> {
        if classes < 2 {
            return Err(Error::InvalidTable(format!("need at least 2 classes, got {classes}")));
        }
        let configs = check_cardinalities(&cardinalities)?;
        if prob.len() != configs * classes {
            return Err(Error::DimensionMismatch {
                context: "joint table cells",
                expected: configs * classes,
                actual: prob.len(),
            });
        }
        check_distribution(&prob)?;
        Self::assemble(cardinalities, names, TableTarget::Classes { classes, prob })
    }

    pub fn regression(
        cardinalities: Vec<usize>,
        prob: Vec<T>,
        mean: Vec<T>,
        var: Vec<T>,
        names: Option<Vec<String>>,
    ) -> Result<Self> {
        let configs = check_cardinalities(&cardinalities)?;
        for (what, v) in [("probabilities", &prob), ("means", &mean), ("variances", &var)] {
            if v.len() != configs {
                return Err(Error::InvalidTable(format!(
                    "{what}: expected {configs} entries, got {}",
                    v.len()
                )));
            }
        }
        check_distribution(&prob)?;
        if mean.iter().any(|m| !m.is_finite()) {
            return Err(Error::InvalidTable("non-finite mean".into()));
        }
        if var.iter().any(|v| !v.is_finite() || *v < T::zero()) {
            return Err(Error::InvalidTable("variances must be finite and >= 0".into()));
        }
        Self::assemble(cardinalities, names, TableTarget::Regression { prob, mean, var })
    }

    /// Builds a classification table from an unnormalized weight function.
    pub fn from_weights(
        cardinalities: Vec<usize>,
        classes: usize,
        names: Option<Vec<String>>,
        weight: impl Fn(&[usize], usize) -> T,
    ) -> Result<Self> {
        let configs = check_cardinalities(&cardinalities)?;
        let strides = strides_for(&cardinalities);
        let mut cats = vec![0; cardinalities.len()];
        let mut prob = Vec::with_capacity(configs * classes);
        for c in 0..configs {
            decode(c, &cardinalities, &strides, &mut cats);
            for y in 0..classes {
                prob.push(weight(&cats, y));
            }
        }
        let total: T = prob.iter().copied().sum();
        if !(total > T::zero()) {
            return Err(Error::InvalidTable("weights have zero total mass".into()));
        }
        prob.iter_mut().for_each(|p| *p /= total);
        Self::classification(cardinalities, classes, prob, names)
    }

    fn assemble(cardinalities: Vec<usize>, names: Option<Vec<String>>, target: TableTarget<T>) -> Result<Self> {
        let d = cardinalities.len();
        let names = names.unwrap_or_else(|| default_names(d));
        if names.len() != d {
            return Err(Error::InvalidTable(format!("expected {d} feature names, got {}", names.len())));
        }
        Ok(JointTable {
            strides: strides_for(&cardinalities),
            cardinalities,
            names,
            target,
        })
    }

    pub fn feature_count(&self) -> usize {
        self.cardinalities.len()
    }

    pub fn cardinalities(&self) -> &[usize] {
        &self.cardinalities
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn target(&self) -> &TableTarget<T> {
        &self.target
    }

    pub fn is_regression(&self) -> bool {
        matches!(self.target, TableTarget::Regression { .. })
    }

    /// Class count, or `None` for regression tables.
    pub fn classes(&self) -> Option<usize> {
        match self.target {
            TableTarget::Classes { classes, .. } => Some(classes),
            TableTarget::Regression { .. } => None,
        }
    }

    pub fn configuration_count(&self) -> usize {
        self.cardinalities.iter().product()
    }

    pub fn decode(&self, config: usize, out: &mut [usize]) {
        decode(config, &self.cardinalities, &self.strides, out);
    }

    pub fn encode(&self, cats: &[usize]) -> usize {
        cats.iter().zip(&self.strides).map(|(c, s)| c * s).sum()
    }

    /// Marginal probability of configuration `config`.
    pub fn config_prob(&self, config: usize) -> T {
        match &self.target {
            TableTarget::Classes { classes, prob } => {
                prob[config * classes..(config + 1) * classes].iter().copied().sum()
            }
            TableTarget::Regression { prob, .. } => prob[config],
        }
    }

    pub fn check_evidence(&self, e: &Evidence) -> Result<()> {
        for (i, v) in e.iter() {
            if i >= self.feature_count() {
                return Err(Error::InvalidEvidence(format!("feature {i} out of range")));
            }
            if v >= self.cardinalities[i] {
                return Err(Error::InvalidEvidence(format!(
                    "feature {i} value {v} exceeds cardinality {}",
                    self.cardinalities[i]
                )));
            }
        }
        Ok(())
    }

    fn check_unobserved(&self, e: &Evidence, i: usize) -> Result<()> {
        self.check_evidence(e)?;
        if i >= self.feature_count() {
            return Err(Error::InvalidEvidence(format!("feature {i} out of range")));
        }
        if e.contains(i) {
            return Err(Error::AlreadyObserved(i));
        }
        Ok(())
    }

    /// Calls `f(config, cats)` for every configuration consistent with `e`.
    pub fn for_each_consistent(&self, e: &Evidence, mut f: impl FnMut(usize, &[usize])) {
        let d = self.feature_count();
        let free: Vec<usize> = (0..d).filter(|i| !e.contains(*i)).collect();
        let mut cats = vec![0usize; d];
        for (i, v) in e.iter() {
            cats[i] = v;
        }
        // odometer over the unobserved features
        loop {
            f(self.encode(&cats), &cats);
            let mut pos = free.len();
            loop {
                if pos == 0 {
                    return;
                }
                pos -= 1;
                let fi = free[pos];
                cats[fi] += 1;
                if cats[fi] < self.cardinalities[fi] {
                    break;
                }
                cats[fi] = 0;
            }
        }
    }

    /// `P(x_s = e)`.
    pub fn evidence_prob(&self, e: &Evidence) -> Result<T> {
        self.check_evidence(e)?;
        let mut mass = T::zero();
        self.for_each_consistent(e, |c, _| mass += self.config_prob(c));
        Ok(mass)
    }

    fn classes_table(&self) -> Result<(usize, &[T])> {
        match &self.target {
            TableTarget::Classes { classes, prob } => Ok((*classes, prob)),
            TableTarget::Regression { .. } => Err(Error::TaskMismatch { expected: "classification" }),
        }
    }

    /// Unnormalized `p(y, x_s = e)`.
    fn class_mass(&self, e: &Evidence) -> Result<Vec<T>> {
        let (k, prob) = self.classes_table()?;
        self.check_evidence(e)?;
        let mut w = vec![T::zero(); k];
        self.for_each_consistent(e, |c, _| {
            for (y, wy) in w.iter_mut().enumerate() {
                *wy += prob[c * k + y];
            }
        });
        Ok(w)
    }

    /// Exact `p(y | x_s)`.
    pub fn bayes_posterior(&self, e: &Evidence) -> Result<SimplexVector<T>> {
        let w = self.class_mass(e)?;
        let total: T = w.iter().copied().sum();
        if !(total > T::zero()) {
            return Err(Error::ImpossibleEvidence);
        }
        SimplexVector::from_weights(w)
    }

    /// Exact `p(x_i | x_s)`.
    pub fn conditional_feature(&self, e: &Evidence, i: usize) -> Result<SimplexVector<T>> {
        self.check_unobserved(e, i)?;
        let mut w = vec![T::zero(); self.cardinalities[i]];
        self.for_each_consistent(e, |c, cats| w[cats[i]] += self.config_prob(c));
        if !(w.iter().copied().sum::<T>() > T::zero()) {
            return Err(Error::ImpossibleEvidence);
        }
        SimplexVector::from_weights(w)
    }

    /// Unnormalized `p(x_i = v, y, x_s = e)` as `[v][y]`.
    fn feature_class_mass(&self, e: &Evidence, i: usize) -> Result<Vec<Vec<T>>> {
        self.check_unobserved(e, i)?;
        let (k, prob) = self.classes_table()?;
        let mut w = vec![vec![T::zero(); k]; self.cardinalities[i]];
        self.for_each_consistent(e, |c, cats| {
            for y in 0..k {
                w[cats[i]][y] += prob[c * k + y];
            }
        });
        Ok(w)
    }

    /// `I(y; x_i | x_s)` in nats, as the expected KL between `p(y | x_s, x_i)` and `p(y | x_s)`.
    pub fn exact_cmi(&self, e: &Evidence, i: usize) -> Result<T> {
        let joint = self.feature_class_mass(e, i)?;
        let total: T = joint.iter().flatten().copied().sum();
        if !(total > T::zero()) {
            return Err(Error::ImpossibleEvidence);
        }
        let k = joint[0].len();
        let marginal: Vec<T> = (0..k).map(|y| joint.iter().map(|row| row[y]).sum::<T>() / total).collect();
        let marginal = SimplexVector::from_weights(marginal)?;
        let mut cmi = T::zero();
        for row in &joint {
            let pv: T = row.iter().copied().sum();
            if pv > T::zero() {
                let post = SimplexVector::from_weights(row.clone())?;
                cmi += pv / total * kl_divergence(&post, &marginal)?;
            }
        }
        Ok(cmi)
    }

    /// `H(y | x_s = e)` in nats.
    pub fn conditional_entropy(&self, e: &Evidence) -> Result<T> {
        Ok(entropy(self.bayes_posterior(e)?.as_slice()))
    }

    /// `E_{x_i | x_s}[H(y | x_i, x_s)]`.
    pub fn expected_conditional_entropy(&self, e: &Evidence, i: usize) -> Result<T> {
        let joint = self.feature_class_mass(e, i)?;
        let total: T = joint.iter().flatten().copied().sum();
        if !(total > T::zero()) {
            return Err(Error::ImpossibleEvidence);
        }
        let mut h = T::zero();
        for row in &joint {
            let pv: T = row.iter().copied().sum();
            if pv > T::zero() {
                let post: Vec<T> = row.iter().map(|w| *w / pv).collect();
                h += pv / total * entropy(&post);
            }
        }
        Ok(h)
    }

    fn unobserved(&self, e: &Evidence) -> Vec<usize> {
        (0..self.feature_count()).filter(|i| !e.contains(*i)).collect()
    }

    /// CMI of every unobserved feature, in index order.
    pub fn cmi_scores(&self, e: &Evidence) -> Result<Vec<(usize, T)>> {
        self.unobserved(e)
            .into_iter()
            .map(|i| Ok((i, self.exact_cmi(e, i)?)))
            .collect()
    }

    /// Every unobserved feature whose CMI is within [`CMI_TIE_TOLERANCE`] of the maximum.
    pub fn greedy_argmax_set(&self, e: &Evidence) -> Result<Vec<usize>> {
        let scores = self.cmi_scores(e)?;
        if scores.is_empty() {
            return Err(Error::AllSelected);
        }
        let best = scores.iter().map(|(_, s)| *s).fold(T::neg_infinity(), T::max);
        let tol = T::lit(CMI_TIE_TOLERANCE);
        Ok(scores.into_iter().filter(|(_, s)| *s >= best - tol).map(|(i, _)| i).collect())
    }

    /// The greedy CMI policy: argmax of [`Self::exact_cmi`], ties to the lowest index.
    pub fn greedy_oracle_policy(&self, e: &Evidence) -> Result<usize> {
        Ok(self.greedy_argmax_set(e)?[0])
    }

    /// `E_{y, x_i | x_s}[CE(f(x_s ∪ x_i), y)]` by enumeration over `x_i` and `y`.
    pub fn one_step_loss<F>(&self, e: &Evidence, i: usize, predictor: F) -> Result<T>
    where
        F: Fn(&Evidence) -> Result<SimplexVector<T>>,
    {
        let joint = self.feature_class_mass(e, i)?;
        let total: T = joint.iter().flatten().copied().sum();
        if !(total > T::zero()) {
            return Err(Error::ImpossibleEvidence);
        }
        let k = joint[0].len();
        let mut loss = T::zero();
        for (v, row) in joint.iter().enumerate() {
            if row.iter().copied().sum::<T>() > T::zero() {
                let pred = predictor(&e.with(i, v)?)?;
                let pred = SimplexVector::new(pred.into_vec())?;
                if pred.dim() != k {
                    return Err(Error::DimensionMismatch {
                        context: "predictor output",
                        expected: k,
                        actual: pred.dim(),
                    });
                }
                for (y, &w) in row.iter().enumerate() {
                    if w > T::zero() {
                        loss += w / total * crate::numerics::cross_entropy(&pred, y)?;
                    }
                }
            }
        }
        Ok(loss)
    }

    fn regression_table(&self) -> Result<(&[T], &[T], &[T])> {
        match &self.target {
            TableTarget::Regression { prob, mean, var } => Ok((prob, mean, var)),
            TableTarget::Classes { .. } => Err(Error::TaskMismatch { expected: "regression" }),
        }
    }

    /// `(E[y | x_s], Var(y | x_s))` by the law of total variance.
    pub fn regression_moments(&self, e: &Evidence) -> Result<(T, T)> {
        let (prob, mean, var) = self.regression_table()?;
        self.check_evidence(e)?;
        let (mut mass, mut m1, mut m2) = (T::zero(), T::zero(), T::zero());
        self.for_each_consistent(e, |c, _| {
            mass += prob[c];
            m1 += prob[c] * mean[c];
            m2 += prob[c] * (var[c] + mean[c] * mean[c]);
        });
        if !(mass > T::zero()) {
            return Err(Error::ImpossibleEvidence);
        }
        let mu = m1 / mass;
        Ok((mu, (m2 / mass - mu * mu).max(T::zero())))
    }

    /// `E_{x_i | x_s}[Var(y | x_i, x_s)]`.
    pub fn expected_conditional_variance(&self, e: &Evidence, i: usize) -> Result<T> {
        self.regression_table()?;
        self.check_unobserved(e, i)?;
        let cond = self.conditional_feature(e, i)?;
        let mut total = T::zero();
        for (v, &pv) in cond.as_slice().iter().enumerate() {
            if pv > T::zero() {
                total += pv * self.regression_moments(&e.with(i, v)?)?.1;
            }
        }
        Ok(total)
    }

    /// `E_{y, x_i | x_s}[(f(x_s ∪ x_i) - y)^2]`, enumerated over full configurations.
    pub fn one_step_squared_loss<F>(&self, e: &Evidence, i: usize, predictor: F) -> Result<T>
    where
        F: Fn(&Evidence) -> Result<T>,
    {
        let (prob, mean, var) = self.regression_table()?;
        self.check_unobserved(e, i)?;
        let mut preds: Vec<Option<T>> = vec![None; self.cardinalities[i]];
        let (mut mass, mut loss) = (T::zero(), T::zero());
        let mut err = None;
        self.for_each_consistent(e, |c, cats| {
            if prob[c] > T::zero() && err.is_none() {
                let v = cats[i];
                if preds[v].is_none() {
                    match e.with(i, v).and_then(|ev| predictor(&ev)) {
                        Ok(p) => preds[v] = Some(p),
                        Err(x) => {
                            err = Some(x);
                            return;
                        }
                    }
                }
                let f = preds[v].expect("filled above");
                mass += prob[c];
                loss += prob[c] * (var[c] + (mean[c] - f) * (mean[c] - f));
            }
        });
        if let Some(x) = err {
            return Err(x);
        }
        if !(mass > T::zero()) {
            return Err(Error::ImpossibleEvidence);
        }
        Ok(loss / mass)
    }

    /// Bayes accuracy `max_y p(y | x_s)` averaged over `x_s` for a fixed subset.
    pub fn static_subset_accuracy(&self, subset: &[usize]) -> Result<T> {
        let (k, prob) = self.classes_table()?;
        let mut acc = std::collections::HashMap::<Vec<usize>, Vec<T>>::new();
        let mut cats = vec![0; self.feature_count()];
        for c in 0..self.configuration_count() {
            self.decode(c, &mut cats);
            let key: Vec<usize> = subset.iter().map(|&i| cats[i]).collect();
            let entry = acc.entry(key).or_insert_with(|| vec![T::zero(); k]);
            for y in 0..k {
                entry[y] += prob[c * k + y];
            }
        }
        Ok(acc.values().map(|w| w.iter().copied().fold(T::zero(), T::max)).sum())
    }

    /// Best fixed subset of size `k` by exhaustive search (ties to the lexicographically first).
    pub fn best_static_subset(&self, k: usize) -> Result<(Vec<usize>, T)> {
        let d = self.feature_count();
        if k > d {
            return Err(Error::Config(format!("subset size {k} exceeds {d} features")));
        }
        let mut best: Option<(Vec<usize>, T)> = None;
        for bits in 0u32..(1 << d) {
            if bits.count_ones() as usize != k {
                continue;
            }
            let subset: Vec<usize> = (0..d).filter(|i| bits & (1 << i) != 0).collect();
            let a = self.static_subset_accuracy(&subset)?;
            let better = match &best {
                None => true,
                Some((s, b)) => a > *b + T::lit(1e-12) || ((a - *b).abs() <= T::lit(1e-12) && subset < *s),
            };
            if better {
                best = Some((subset, a));
            }
        }
        Ok(best.expect("at least one subset"))
    }

    /// Non-myopic optimum: the selection maximizing expected Bayes accuracy after
    /// `remaining` further acquisitions, found by exhaustive expectimax.
    ///
    /// Returns the achievable accuracy and the first selection (`None` when
    /// `remaining == 0` or nothing is left to select).
    pub fn lookahead_policy(&self, e: &Evidence, remaining: usize) -> Result<(T, Option<usize>)> {
        let post = self.bayes_posterior(e)?;
        let free = self.unobserved(e);
        if remaining == 0 || free.is_empty() {
            return Ok((post.as_slice().iter().copied().fold(T::zero(), T::max), None));
        }
        let mut best: Option<(T, usize)> = None;
        for i in free {
            let cond = self.conditional_feature(e, i)?;
            let mut value = T::zero();
            for (v, &pv) in cond.as_slice().iter().enumerate() {
                if pv > T::zero() {
                    value += pv * self.lookahead_policy(&e.with(i, v)?, remaining - 1)?.0;
                }
            }
            if best.is_none_or(|(b, _)| value > b + T::lit(1e-12)) {
                best = Some((value, i));
            }
        }
        let (v, i) = best.expect("non-empty candidate set");
        Ok((v, Some(i)))
    }

    /// Every partial assignment with positive probability, the empty one first.
    pub fn possible_evidence(&self) -> Vec<Evidence> {
        let d = self.feature_count();
        // state[i] == cardinality means "unobserved"
        let mut state: Vec<usize> = self.cardinalities.clone();
        let mut out = Vec::new();
        loop {
            let e = Evidence::from_pairs(
                state.iter().enumerate().filter(|(i, v)| **v < self.cardinalities[*i]).map(|(i, v)| (i, *v)),
            )
            .expect("distinct features");
            if self.evidence_prob(&e).is_ok_and(|p| p > T::zero()) {
                out.push(e);
            }
            let mut pos = d;
            loop {
                if pos == 0 {
                    out.sort_by_key(|e| e.len());
                    return out;
                }
                pos -= 1;
                state[pos] = if state[pos] == self.cardinalities[pos] { 0 } else { state[pos] + 1 };
                if state[pos] != self.cardinalities[pos] {
                    break;
                }
            }
        }
    }

    /// Draws a full configuration and its target.
    pub fn sample_instance<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<(Vec<usize>, Target<T>)> {
        self.instance_sampler()?.sample(rng)
    }

    /// Precomputed sampler for repeated draws.
    pub fn instance_sampler(&self) -> Result<InstanceSampler<'_, T>> {
        let weights: Vec<f64> = match &self.target {
            TableTarget::Classes { prob, .. } => prob.iter().map(|p| p.as_f64()).collect(),
            TableTarget::Regression { prob, .. } => prob.iter().map(|p| p.as_f64()).collect(),
        };
        let index = WeightedIndex::new(&weights).map_err(|e| Error::Sampling(e.to_string()))?;
        Ok(InstanceSampler { table: self, index })
    }

    /// Draws `x_i ~ p(x_i | x_s)`.
    pub fn conditional_sampler<R: Rng + ?Sized>(&self, e: &Evidence, i: usize, rng: &mut R) -> Result<usize> {
        let cond = self.conditional_feature(e, i)?;
        sample_simplex(&cond, rng)
    }
}

pub struct InstanceSampler<'a, T> {
    table: &'a JointTable<T>,
    index: WeightedIndex<f64>,
}

impl<T: Real> InstanceSampler<'_, T> {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<(Vec<usize>, Target<T>)> {
        let cell = self.index.sample(rng);
        let mut cats = vec![0; self.table.feature_count()];
        let target = match &self.table.target {
            TableTarget::Classes { classes, .. } => {
                self.table.decode(cell / classes, &mut cats);
                Target::Class(cell % classes)
            }
            TableTarget::Regression { mean, var, .. } => {
                self.table.decode(cell, &mut cats);
                let sd = var[cell].as_f64().sqrt();
                let y = if sd > 0.0 {
                    Normal::new(mean[cell].as_f64(), sd)
                        .map_err(|e| Error::Sampling(e.to_string()))?
                        .sample(rng)
                } else {
                    mean[cell].as_f64()
                };
                Target::Real(T::lit(y))
            }
        };
        Ok((cats, target))
    }
}

pub(crate) fn sample_simplex<T: Real, R: Rng + ?Sized>(p: &SimplexVector<T>, rng: &mut R) -> Result<usize> {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, &pi) in p.as_slice().iter().enumerate() {
        let pi = pi.as_f64();
        if pi > 0.0 {
            last_positive = i;
            acc += pi;
            if u < acc {
                return Ok(i);
            }
        }
    }
    Ok(last_positive)
}

fn check_cardinalities(cards: &[usize]) -> Result<usize> {
    if cards.is_empty() || cards.len() > MAX_FEATURES {
        return Err(Error::InvalidTable(format!(
            "feature count {} outside 1..={MAX_FEATURES}",
            cards.len()
        )));
    }
    if cards.contains(&0) {
        return Err(Error::InvalidTable("cardinalities must be positive".into()));
    }
    let configs: u128 = cards.iter().map(|&c| c as u128).product();
    if configs > MAX_CONFIGURATIONS {
        return Err(Error::EnumerationBound(configs));
    }
    Ok(configs as usize)
}

fn check_distribution<T: Real>(prob: &[T]) -> Result<()> {
    if let Some(p) = prob.iter().find(|p| !p.is_finite() || **p < T::zero()) {
        return Err(Error::InvalidTable(format!("invalid probability {p}")));
    }
    let total: T = crate::scalar::compensated_sum(prob.iter().copied());
    let tol = T::lit(1e-10).max(T::epsilon() * T::lit(prob.len() as f64));
    if (total - T::one()).abs() > tol {
        return Err(Error::InvalidTable(format!("probabilities sum to {total}")));
    }
    Ok(())
}

fn strides_for(cards: &[usize]) -> Vec<usize> {
    let mut strides = vec![1; cards.len()];
    for i in (0..cards.len().saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * cards[i + 1];
    }
    strides
}

fn decode(config: usize, cards: &[usize], strides: &[usize], out: &mut [usize]) {
    for i in 0..cards.len() {
        out[i] = (config / strides[i]) % cards[i];
    }
}
