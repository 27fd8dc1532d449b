use crate::error::{Error, Result};
use crate::scalar::Real;

/// Binary `[features x groups]` matrix with exactly one 1 per row, stored as
/// the feature-to-group assignment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupMatrix {
    assignment: Vec<usize>,
    members: Vec<Vec<usize>>,
}

impl GroupMatrix {
    pub fn identity(features: usize) -> Self {
        GroupMatrix {
            assignment: (0..features).collect(),
            members: (0..features).map(|f| vec![f]).collect(),
        }
    }

    /// `assignment[f]` is the group of feature `f`; groups must be `0..g` with none empty.
    pub fn from_assignment(assignment: Vec<usize>) -> Result<Self> {
        if assignment.is_empty() {
            return Err(Error::InvalidGroups("no features".into()));
        }
        let g = assignment.iter().max().map_or(0, |m| m + 1);
        let mut members = vec![Vec::new(); g];
        for (f, &grp) in assignment.iter().enumerate() {
            members[grp].push(f);
        }
        if let Some(empty) = members.iter().position(|m| m.is_empty()) {
            return Err(Error::InvalidGroups(format!("group {empty} has no features")));
        }
        Ok(GroupMatrix { assignment, members })
    }

    /// Groups listed as member features; they must partition `0..features`.
    pub fn from_members(members: Vec<Vec<usize>>, features: usize) -> Result<Self> {
        let mut assignment = vec![usize::MAX; features];
        for (g, list) in members.iter().enumerate() {
            if list.is_empty() {
                return Err(Error::InvalidGroups(format!("group {g} has no features")));
            }
            for &f in list {
                if f >= features {
                    return Err(Error::InvalidGroups(format!("feature {f} out of range")));
                }
                if assignment[f] != usize::MAX {
                    return Err(Error::InvalidGroups(format!("feature {f} is in more than one group")));
                }
                assignment[f] = g;
            }
        }
        if let Some(f) = assignment.iter().position(|&g| g == usize::MAX) {
            return Err(Error::InvalidGroups(format!("feature {f} is not in any group")));
        }
        Self::from_assignment(assignment)
    }

    pub fn feature_count(&self) -> usize {
        self.assignment.len()
    }

    pub fn group_count(&self) -> usize {
        self.members.len()
    }

    pub fn group_of(&self, feature: usize) -> usize {
        self.assignment[feature]
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn members(&self, group: usize) -> Result<&[usize]> {
        self.members
            .get(group)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::InvalidGroups(format!("group {group} out of range (g = {})", self.group_count())))
    }

    pub fn is_identity(&self) -> bool {
        self.assignment.iter().enumerate().all(|(f, &g)| f == g)
    }

    /// `G m`: the group mask projected onto features.
    pub fn expand<T: Real>(&self, mask: &[T]) -> Result<Vec<T>> {
        if mask.len() != self.group_count() {
            return Err(Error::DimensionMismatch {
                context: "group mask",
                expected: self.group_count(),
                actual: mask.len(),
            });
        }
        Ok(self.assignment.iter().map(|&g| mask[g]).collect())
    }

    /// Dense 0/1 form, row per feature.
    pub fn to_dense(&self) -> Vec<Vec<u8>> {
        self.assignment
            .iter()
            .map(|&g| (0..self.group_count()).map(|j| u8::from(j == g)).collect())
            .collect()
    }
}
