//! Probability-simplex vectors, tempered softmax and Concrete (Gumbel-softmax) sampling.

use rand::Rng;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// A point in the probability simplex: nonnegative entries summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexVector<T>(Vec<T>);

impl<T: Real> SimplexVector<T> {
    /// Validates entries lie in `[0, 1]` and sum to one.
    pub fn new(entries: Vec<T>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidSimplex("empty vector".into()));
        }
        let tol = T::simplex_tolerance(entries.len());
        for (i, &p) in entries.iter().enumerate() {
            if !p.is_finite() || p < -tol || p > T::one() + tol {
                return Err(Error::InvalidSimplex(format!("entry {i} = {p} outside [0, 1]")));
            }
        }
        let sum: T = entries.iter().copied().sum();
        if (sum - T::one()).abs() > tol {
            return Err(Error::InvalidSimplex(format!("entries sum to {sum}")));
        }
        Ok(SimplexVector(entries))
    }

    /// Normalizes nonnegative weights. Fails when the total mass is zero.
    pub fn from_weights(weights: Vec<T>) -> Result<Self> {
        let total: T = weights.iter().copied().sum();
        if !(total > T::zero()) || !total.is_finite() {
            return Err(Error::InvalidSimplex(format!("weights have total mass {total}")));
        }
        if weights.iter().any(|&w| w < T::zero()) {
            return Err(Error::InvalidSimplex("negative weight".into()));
        }
        Ok(SimplexVector(weights.into_iter().map(|w| w / total).collect()))
    }

    pub fn uniform(dim: usize) -> Self {
        assert!(dim > 0, "simplex dimension must be positive");
        let p = T::one() / T::lit(dim as f64);
        SimplexVector(vec![p; dim])
    }

    pub fn one_hot(dim: usize, index: usize) -> Self {
        assert!(index < dim, "one-hot index out of range");
        let mut v = vec![T::zero(); dim];
        v[index] = T::one();
        SimplexVector(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<T> {
        self.0
    }

    /// Index of the largest entry; ties resolve to the lowest index.
    pub fn argmax(&self) -> usize {
        argmax(&self.0).expect("simplex vectors are non-empty")
    }

    pub fn total_variation(&self, other: &Self) -> T {
        let diff: T = self.0.iter().zip(&other.0).map(|(a, b)| (*a - *b).abs()).sum();
        diff / T::lit(2.0)
    }

    pub fn cast<U: Real>(&self) -> SimplexVector<U> {
        SimplexVector(self.0.iter().map(|p| U::lit(p.as_f64())).collect())
    }
}

impl<T> std::ops::Index<usize> for SimplexVector<T> {
    type Output = T;
    fn index(&self, i: usize) -> &T {
        &self.0[i]
    }
}

/// Lowest index of the maximum among entries that are not NaN.
pub fn argmax<T: Real>(values: &[T]) -> Option<usize> {
    let mut best: Option<(usize, T)> = None;
    for (i, &v) in values.iter().enumerate() {
        if v.is_nan() {
            continue;
        }
        match best {
            Some((_, b)) if v <= b => {}
            _ => best = Some((i, v)),
        }
    }
    best.map(|(i, _)| i)
}

/// `softmax(logits / temperature)`; at temperature zero the exact one-hot of the argmax.
///
/// Entries with `-inf` logits get exactly zero mass.
pub fn tempered_softmax<T: Real>(logits: &[T], temperature: T) -> Result<SimplexVector<T>> {
    if temperature.is_nan() || temperature < T::zero() {
        return Err(Error::InvalidTemperature(temperature.as_f64()));
    }
    if logits.iter().any(|l| l.is_nan() || *l == T::infinity()) {
        return Err(Error::NonFinite {
            context: "softmax logits".into(),
            detail: "NaN or +inf logit".into(),
        });
    }
    let max = logits
        .iter()
        .copied()
        .filter(|l| l.is_finite())
        .fold(None, |acc: Option<T>, l| Some(acc.map_or(l, |a| a.max(l))))
        .ok_or(Error::NoSelectableEntry)?;

    if temperature == T::zero() {
        let idx = argmax(logits).ok_or(Error::NoSelectableEntry)?;
        return Ok(SimplexVector::one_hot(logits.len(), idx));
    }

    let weights: Vec<T> = logits
        .iter()
        .map(|&l| {
            if l == T::neg_infinity() {
                T::zero()
            } else {
                ((l - max) / temperature).exp()
            }
        })
        .collect();
    let total: T = weights.iter().copied().sum();
    Ok(SimplexVector(weights.into_iter().map(|w| w / total).collect()))
}

/// Vector-Jacobian product of [`tempered_softmax`] with respect to its logits.
///
/// `probs` is the softmax output and `upstream` the gradient with respect to it.
pub fn tempered_softmax_backward<T: Real>(probs: &[T], upstream: &[T], temperature: T) -> Vec<T> {
    let inner: T = probs.iter().zip(upstream).map(|(p, g)| *p * *g).sum();
    probs
        .iter()
        .zip(upstream)
        .map(|(&p, &g)| p * (g - inner) / temperature)
        .collect()
}

/// Standard Gumbel draw `-ln(-ln U)` with `U` uniform on the open unit interval.
pub fn gumbel<T: Real, R: Rng + ?Sized>(rng: &mut R) -> T {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return T::lit(-(-u.ln()).ln());
        }
    }
}

/// A relaxed sample and its zero-temperature limit, built from one Gumbel draw.
#[derive(Debug, Clone)]
pub struct ConcreteSample<T> {
    pub relaxed: SimplexVector<T>,
    pub hard: SimplexVector<T>,
    pub index: usize,
}

/// Draws `G ~ Gumbel` per entry and returns `softmax(G + logits, tau)` alongside
/// `softmax(G + logits, 0)`.
pub fn concrete_sample<T: Real, R: Rng + ?Sized>(
    logits: &[T],
    temperature: T,
    rng: &mut R,
) -> Result<ConcreteSample<T>> {
    if !(temperature > T::zero()) {
        return Err(Error::InvalidTemperature(temperature.as_f64()));
    }
    if !logits.iter().any(|l| l.is_finite()) {
        return Err(Error::NoSelectableEntry);
    }
    // Draw for every entry so the stream position does not depend on the mask.
    let perturbed: Vec<T> = logits.iter().map(|&l| l + gumbel::<T, R>(rng)).collect();
    let relaxed = tempered_softmax(&perturbed, temperature)?;
    let index = argmax(&perturbed).ok_or(Error::NoSelectableEntry)?;
    Ok(ConcreteSample {
        relaxed,
        hard: SimplexVector::one_hot(logits.len(), index),
        index,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn equal_logits_give_uniform() {
        let p = tempered_softmax(&[0.7, 0.7, 0.7], 1.0).unwrap();
        for &x in p.as_slice() {
            assert_abs_diff_eq!(x, 1.0 / 3.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn zero_temperature_is_argmax_one_hot() {
        let p = tempered_softmax(&[2.0, 1.0, 0.0], 0.0).unwrap();
        assert_eq!(p.as_slice(), &[1.0, 0.0, 0.0]);
        let tie = tempered_softmax(&[1.0, 3.0, 3.0], 0.0).unwrap();
        assert_eq!(tie.as_slice(), &[0.0, 1.0, 0.0]);
    }

    #[test]
    fn half_temperature_matches_sigmoid() {
        let p = tempered_softmax(&[1.0_f64, 0.0], 0.5).unwrap();
        let s = 1.0 / (1.0 + (-2.0_f64).exp());
        assert_abs_diff_eq!(p[0], s, epsilon = 1e-15);
        assert_abs_diff_eq!(p[0], 0.8808, epsilon = 1e-4);
        assert_abs_diff_eq!(p[1], 0.1192, epsilon = 1e-4);
    }

    #[test]
    fn neg_inf_logits_get_zero_mass() {
        let p = tempered_softmax(&[f64::NEG_INFINITY, 0.0, 1.0], 2.0).unwrap();
        assert_eq!(p[0], 0.0);
        let hard = tempered_softmax(&[f64::NEG_INFINITY, f64::NEG_INFINITY, -5.0], 0.0).unwrap();
        assert_eq!(hard.as_slice(), &[0.0, 0.0, 1.0]);
        assert!(matches!(
            tempered_softmax(&[f64::NEG_INFINITY; 2], 1.0),
            Err(Error::NoSelectableEntry)
        ));
        assert!(matches!(
            tempered_softmax(&[f64::NEG_INFINITY; 2], 0.0),
            Err(Error::NoSelectableEntry)
        ));
    }

    #[test]
    fn concrete_rejects_nonpositive_temperature() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            concrete_sample(&[0.0, 1.0], 0.0, &mut rng),
            Err(Error::InvalidTemperature(_))
        ));
    }

    #[test]
    fn concrete_hard_is_one_hot_and_agrees_with_relaxed() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..500 {
            let s = concrete_sample(&[0.3, -1.0, 2.0, f64::NEG_INFINITY], 0.7, &mut rng).unwrap();
            assert_eq!(s.hard.as_slice().iter().filter(|&&x| x == 1.0).count(), 1);
            assert_eq!(s.hard.argmax(), s.relaxed.argmax());
            assert_ne!(s.index, 3);
        }
    }

    #[test]
    fn gumbel_max_reproduces_softmax_probability() {
        let logits = [3.0_f64.ln(), 0.0];
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 100_000;
        let hits = (0..n)
            .filter(|_| concrete_sample(&logits, 1.0, &mut rng).unwrap().index == 0)
            .count();
        let freq = hits as f64 / n as f64;
        assert!((freq - 0.75).abs() <= 0.01, "frequency {freq}");
    }

    #[test]
    fn marginal_frequencies_within_four_over_root_n() {
        let logits = [0.5, -0.2, 1.3, 0.0];
        let target = tempered_softmax(&logits, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 20_000;
        let mut counts = [0usize; 4];
        for _ in 0..n {
            counts[concrete_sample(&logits, 0.3, &mut rng).unwrap().index] += 1;
        }
        let bound = 4.0 / (n as f64).sqrt();
        for i in 0..4 {
            assert!((counts[i] as f64 / n as f64 - target[i]).abs() <= bound);
        }
    }

    #[test]
    fn backward_matches_finite_differences() {
        let logits = [0.2, -0.4, 1.1];
        let upstream = [0.3, -1.2, 0.7];
        let tau = 0.6;
        let probs = tempered_softmax(&logits, tau).unwrap();
        let grad = tempered_softmax_backward(probs.as_slice(), &upstream, tau);
        let h = 1e-6;
        for j in 0..3 {
            let mut plus = logits;
            let mut minus = logits;
            plus[j] += h;
            minus[j] -= h;
            let f = |l: &[f64]| -> f64 {
                let p = tempered_softmax(l, tau).unwrap();
                p.as_slice().iter().zip(&upstream).map(|(a, b)| a * b).sum()
            };
            let fd = (f(&plus) - f(&minus)) / (2.0 * h);
            assert_abs_diff_eq!(grad[j], fd, epsilon = 1e-8);
        }
    }

    proptest! {
        #[test]
        fn softmax_output_is_simplex(logits in proptest::collection::vec(-30.0f64..30.0, 1..12), tau in 0.0f64..5.0) {
            let p = tempered_softmax(&logits, tau).unwrap();
            prop_assert!(SimplexVector::new(p.into_vec()).is_ok());
        }

        #[test]
        fn small_temperature_approaches_hard_limit(
            base in proptest::collection::vec(-5.0f64..5.0, 2..8),
        ) {
            // spread logits so that the top-2 gap is at least 0.1
            let mut logits = base.clone();
            let top = argmax(&logits).unwrap();
            let max_other = logits.iter().enumerate().filter(|(i, _)| *i != top).map(|(_, v)| *v).fold(f64::MIN, f64::max);
            if logits[top] - max_other < 0.1 {
                logits[top] = max_other + 0.1;
            }
            let soft = tempered_softmax(&logits, 1e-6).unwrap();
            let hard = tempered_softmax(&logits, 0.0).unwrap();
            for (a, b) in soft.as_slice().iter().zip(hard.as_slice()) {
                prop_assert!((a - b).abs() <= 1e-3);
            }
        }
    }
}
