//! Reference distributions with known information structure.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::scalar::Real;

use super::table::JointTable;

fn names(list: &[&str]) -> Option<Vec<String>> {
    Some(list.iter().map(|s| s.to_string()).collect())
}

/// `y ~ Bern(0.5)`; `x1` is `y` flipped w.p. 0.1, `x2` is `y` flipped w.p. 0.3,
/// `x3 ~ Bern(0.5)` independent.
pub fn channel_table<T: Real>() -> JointTable<T> {
    let flip = [0.1, 0.3];
    JointTable::from_weights(vec![2, 2, 2], 2, names(&["x1", "x2", "x3"]), |x, y| {
        let mut w = 0.5 * 0.5;
        for (j, f) in flip.iter().enumerate() {
            w *= if x[j] == y { 1.0 - f } else { *f };
        }
        T::lit(w)
    })
    .expect("channel table is valid")
}

/// Fair coins `x0, x1, x2`; `y = x1` when `x0 = 0`, otherwise `y = x2`.
pub fn switch_table<T: Real>() -> JointTable<T> {
    JointTable::from_weights(vec![2, 2, 2], 2, names(&["x0", "x1", "x2"]), |x, y| {
        let label = if x[0] == 0 { x[1] } else { x[2] };
        T::lit(if label == y { 0.125 } else { 0.0 })
    })
    .expect("switch table is valid")
}

/// Fair coins `x1, x2`; `y = x1 + eps` with `Var(eps) = 0.04`.
pub fn regression_toy_table<T: Real>() -> JointTable<T> {
    JointTable::regression(
        vec![2, 2],
        vec![T::lit(0.25); 4],
        // configurations in (x1, x2) order: 00, 01, 10, 11
        vec![T::zero(), T::zero(), T::one(), T::one()],
        vec![T::lit(0.04); 4],
        names(&["x1", "x2"]),
    )
    .expect("regression toy table is valid")
}

/// A seeded random classification table. Cell weights are `exp(2 z)` for
/// standard normal `z`, which gives peaked, informative distributions.
pub fn random_table<T: Real>(seed: u64, features: usize, cardinality: usize, classes: usize) -> Result<JointTable<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cards = vec![cardinality; features];
    let cells: usize = cards.iter().product::<usize>() * classes;
    let weights: Vec<f64> = (0..cells)
        .map(|_| {
            let z: f64 = rng.sample(rand_distr::StandardNormal);
            (2.0 * z).exp()
        })
        .collect();
    let table_strides = classes;
    JointTable::from_weights(cards.clone(), classes, None, |x, y| {
        let mut config = 0;
        for (i, &c) in x.iter().enumerate() {
            config = config * cards[i] + c;
        }
        T::lit(weights[config * table_strides + y])
    })
}
