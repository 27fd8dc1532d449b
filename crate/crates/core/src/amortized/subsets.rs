use rand::seq::index::sample;
use rand::Rng;

/// Random group subsets: cardinality uniform on `0..=max_cardinality`, then a
/// uniform subset of that size. Every subset within the cardinality range has
/// positive probability.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SubsetDistribution {
    pub max_cardinality: usize,
}

impl SubsetDistribution {
    /// Subsets of size `< budget`, the states a budget-`budget` rollout can be in.
    pub fn below_budget(budget: usize) -> Self {
        SubsetDistribution { max_cardinality: budget.saturating_sub(1) }
    }

    /// Every subset of `groups`, including the full set.
    pub fn all(groups: usize) -> Self {
        SubsetDistribution { max_cardinality: groups }
    }

    pub fn sample<R: Rng + ?Sized>(&self, groups: usize, rng: &mut R) -> Vec<bool> {
        let max = self.max_cardinality.min(groups);
        let size = rng.random_range(0..=max);
        let mut mask = vec![false; groups];
        for j in sample(rng, groups, size) {
            mask[j] = true;
        }
        mask
    }
}
