use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::amortized::GroupMatrix;
use crate::observation::Observation;
use crate::scalar::Real;

/// Observed categories for a subset of features; the key set is `s`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Evidence(BTreeMap<usize, usize>);

impl Evidence {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut e = Evidence::new();
        for (i, v) in pairs {
            if e.0.insert(i, v).is_some() {
                return Err(Error::InvalidEvidence(format!("feature {i} assigned twice")));
            }
        }
        Ok(e)
    }

    /// A copy with `feature = value` added.
    pub fn with(&self, feature: usize, value: usize) -> Result<Self> {
        let mut e = self.clone();
        if e.0.insert(feature, value).is_some() {
            return Err(Error::AlreadyObserved(feature));
        }
        Ok(e)
    }

    pub fn get(&self, feature: usize) -> Option<usize> {
        self.0.get(&feature).copied()
    }

    pub fn contains(&self, feature: usize) -> bool {
        self.0.contains_key(&feature)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.0.iter().map(|(&k, &v)| (k, v))
    }

    pub fn features(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.keys().copied()
    }

    /// Observation over `feature_count` single-feature groups holding these category codes.
    pub fn to_observation<T: Real>(&self, feature_count: usize) -> Result<Observation<T>> {
        let groups = GroupMatrix::identity(feature_count);
        let mut obs = Observation::empty(feature_count, feature_count);
        for (&f, &v) in &self.0 {
            if f >= feature_count {
                return Err(Error::InvalidEvidence(format!("feature {f} out of range for {feature_count} features")));
            }
            obs.reveal_values(f, &[T::lit(v as f64)], &groups)?;
        }
        Ok(obs)
    }

    /// Reads categories off an observation whose groups are single features
    /// carrying integral category codes.
    pub fn from_observation<T: Real>(obs: &Observation<T>) -> Result<Self> {
        if obs.group_count() != obs.feature_count() {
            return Err(Error::InvalidEvidence(
                "table evidence needs one group per feature".into(),
            ));
        }
        let mut e = Evidence::new();
        for (i, _) in obs.observed().iter().enumerate().filter(|(_, o)| **o) {
            let v = obs.values()[i].as_f64();
            if v < 0.0 || v.fract() != 0.0 {
                return Err(Error::InvalidEvidence(format!(
                    "feature {i} value {v} is not a category code"
                )));
            }
            e.0.insert(i, v as usize);
        }
        Ok(e)
    }
}

impl fmt::Display for Evidence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.iter().map(|(i, v)| format!("{i}={v}")).collect();
        write!(f, "{}", parts.join(","))
    }
}

/// Parses `"0=1,2=0"`; the empty string is empty evidence.
impl FromStr for Evidence {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() {
            return Ok(Evidence::new());
        }
        let pairs = s
            .split(',')
            .map(|part| {
                let (k, v) = part
                    .split_once('=')
                    .ok_or_else(|| Error::InvalidEvidence(format!("expected i=v, got '{part}'")))?;
                let parse = |t: &str| {
                    t.trim()
                        .parse::<usize>()
                        .map_err(|_| Error::InvalidEvidence(format!("bad integer '{t}'")))
                };
                Ok((parse(k)?, parse(v)?))
            })
            .collect::<Result<Vec<_>>>()?;
        Evidence::from_pairs(pairs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_display_round_trip() {
        let e: Evidence = "2=0, 0=1".parse().unwrap();
        assert_eq!(e.to_string(), "0=1,2=0");
        assert_eq!("".parse::<Evidence>().unwrap(), Evidence::new());
        assert!("0=1,0=2".parse::<Evidence>().is_err());
        assert!("x".parse::<Evidence>().is_err());
    }

    #[test]
    fn with_rejects_duplicate() {
        let e = Evidence::new().with(1, 0).unwrap();
        assert!(matches!(e.with(1, 1), Err(Error::AlreadyObserved(1))));
    }
}
