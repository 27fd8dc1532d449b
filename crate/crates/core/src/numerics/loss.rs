//! Losses and divergences. All logarithms are natural, so results are in nats.

use crate::error::{Error, Result};
use crate::scalar::{Real, LOG_FLOOR};

use super::simplex::SimplexVector;

/// `-ln pred[label]`, with the probability clamped below at `1e-12`.
pub fn cross_entropy<T: Real>(pred: &SimplexVector<T>, label: usize) -> Result<T> {
    let p = *pred.as_slice().get(label).ok_or(Error::LabelOutOfRange {
        label,
        classes: pred.dim(),
    })?;
    Ok(-p.max(T::lit(LOG_FLOOR)).ln())
}

pub fn squared_error<T: Real>(pred: T, target: T) -> T {
    (pred - target) * (pred - target)
}

/// `sum_i p_i ln(p_i / q_i)` with `0 ln 0 = 0` and `q` clamped below at `1e-12`.
pub fn kl_divergence<T: Real>(p: &SimplexVector<T>, q: &SimplexVector<T>) -> Result<T> {
    if p.dim() != q.dim() {
        return Err(Error::DimensionMismatch {
            context: "kl_divergence",
            expected: p.dim(),
            actual: q.dim(),
        });
    }
    let floor = T::lit(LOG_FLOOR);
    let kl: T = p
        .as_slice()
        .iter()
        .zip(q.as_slice())
        .filter(|(pi, _)| **pi > T::zero())
        .map(|(&pi, &qi)| pi * (pi.ln() - qi.max(floor).ln()))
        .sum();
    // Rounding can leave a tiny negative value when p == q.
    Ok(kl.max(T::zero()))
}

/// Shannon entropy in nats.
pub fn entropy<T: Real>(p: &[T]) -> T {
    p.iter()
        .filter(|&&x| x > T::zero())
        .map(|&x| -x * x.ln())
        .sum()
}

/// Softmax of raw network outputs, then cross-entropy, returning the loss and
/// the gradient with respect to the logits (`softmax - onehot`).
pub fn softmax_cross_entropy<T: Real>(logits: &[T], label: usize) -> Result<(T, Vec<T>)> {
    if label >= logits.len() {
        return Err(Error::LabelOutOfRange {
            label,
            classes: logits.len(),
        });
    }
    let probs = super::simplex::tempered_softmax(logits, T::one())?;
    let loss = cross_entropy(&probs, label)?;
    let mut grad = probs.into_vec();
    grad[label] -= T::one();
    Ok((loss, grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn sv(v: &[f64]) -> SimplexVector<f64> {
        SimplexVector::new(v.to_vec()).unwrap()
    }

    #[test]
    #[allow(clippy::approx_constant)]
    fn cross_entropy_cases() {
        assert_eq!(cross_entropy(&sv(&[0.0, 1.0]), 1).unwrap(), 0.0);
        assert_abs_diff_eq!(cross_entropy(&sv(&[0.5, 0.5]), 0).unwrap(), 2f64.ln(), epsilon = 1e-15);
        assert_abs_diff_eq!(cross_entropy(&sv(&[0.5, 0.5]), 0).unwrap(), 0.6931, epsilon = 1e-4);
        // clamped rather than infinite
        assert_abs_diff_eq!(cross_entropy(&sv(&[1.0, 0.0]), 1).unwrap(), -(1e-12f64).ln(), epsilon = 1e-9);
        assert!(matches!(
            cross_entropy(&sv(&[0.5, 0.5]), 2),
            Err(Error::LabelOutOfRange { label: 2, classes: 2 })
        ));
    }

    #[test]
    fn squared_error_cases() {
        assert_eq!(squared_error(3.0, 3.0), 0.0);
        assert_eq!(squared_error(1.0, 3.0), 4.0);
    }

    #[test]
    fn kl_cases() {
        let p = sv(&[0.2, 0.3, 0.5]);
        assert_eq!(kl_divergence(&p, &p).unwrap(), 0.0);
        // 0.9 ln 1.8 + 0.1 ln 0.2
        let expected = 0.9 * 1.8f64.ln() + 0.1 * 0.2f64.ln();
        let kl = kl_divergence(&sv(&[0.9, 0.1]), &sv(&[0.5, 0.5])).unwrap();
        assert_abs_diff_eq!(kl, expected, epsilon = 1e-15);
        assert_abs_diff_eq!(kl, 0.36807, epsilon = 1e-5);
        assert_abs_diff_eq!(kl_divergence(&sv(&[1.0, 0.0]), &sv(&[0.5, 0.5])).unwrap(), 2f64.ln(), epsilon = 1e-15);
        assert!(matches!(
            kl_divergence(&sv(&[1.0, 0.0]), &sv(&[1.0])),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn softmax_cross_entropy_gradient() {
        let (loss, grad) = softmax_cross_entropy(&[0.0, 0.0], 1).unwrap();
        assert_abs_diff_eq!(loss, 2f64.ln(), epsilon = 1e-15);
        assert_eq!(grad, vec![0.5, -0.5]);
    }

    fn simplex_strategy(dim: usize) -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(0.0f64..1.0, dim).prop_filter_map("nonzero mass", |w| {
            let s: f64 = w.iter().sum();
            (s > 1e-6).then(|| w.iter().map(|x| x / s).collect())
        })
    }

    proptest! {
        #[test]
        fn kl_nonnegative_and_zero_iff_equal(p in simplex_strategy(4), q in simplex_strategy(4)) {
            let p = sv(&p);
            let q = sv(&q);
            let kl = kl_divergence(&p, &q).unwrap();
            prop_assert!(kl >= 0.0);
            prop_assert!(kl_divergence(&p, &p).unwrap() <= 1e-12);
            let tv = p.total_variation(&q);
            if tv > 1e-3 {
                // Pinsker: KL >= 2 TV^2, so distinct distributions have positive KL
                prop_assert!(kl >= 2.0 * tv * tv - 1e-9);
                prop_assert!(kl > 0.0);
            }
        }
    }
}
