use std::fmt;
use std::str::FromStr;

use ndarray::Array2;
use rand::Rng;

use crate::amortized::Targets;
use crate::error::{Error, Result};
use crate::oracle::{channel_table, random_table, regression_toy_table, switch_table, JointTable, Target};

use super::Dataset;

/// A named synthetic distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SyntheticSpec {
    D2Channel,
    D3Switch,
    R1Regression,
    RandomTable { seed: u64, features: usize, cardinality: usize, classes: usize },
}

impl SyntheticSpec {
    pub fn table(&self) -> Result<JointTable<f64>> {
        match *self {
            SyntheticSpec::D2Channel => Ok(channel_table()),
            SyntheticSpec::D3Switch => Ok(switch_table()),
            SyntheticSpec::R1Regression => Ok(regression_toy_table()),
            SyntheticSpec::RandomTable { seed, features, cardinality, classes } => {
                random_table(seed, features, cardinality, classes)
            }
        }
    }
}

impl fmt::Display for SyntheticSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SyntheticSpec::D2Channel => f.write_str("d2_channel"),
            SyntheticSpec::D3Switch => f.write_str("d3_switch"),
            SyntheticSpec::R1Regression => f.write_str("r1_regression"),
            SyntheticSpec::RandomTable { seed, features, cardinality, classes } => {
                write!(f, "random_table({seed},{features},{cardinality},{classes})")
            }
        }
    }
}

/// Accepts `d2_channel`, `d3_switch`, `r1_regression` and `random_table(seed,d,card,K)`.
impl FromStr for SyntheticSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "d2_channel" => return Ok(SyntheticSpec::D2Channel),
            "d3_switch" => return Ok(SyntheticSpec::D3Switch),
            "r1_regression" => return Ok(SyntheticSpec::R1Regression),
            _ => {}
        }
        let args = s
            .strip_prefix("random_table(")
            .and_then(|r| r.strip_suffix(')'))
            .ok_or_else(|| Error::UnknownDistribution(s.to_string()))?;
        let nums: Vec<u64> = args
            .split(',')
            .map(|a| a.trim().parse::<u64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::UnknownDistribution(s.to_string()))?;
        match nums[..] {
            [seed, d, card, k] => Ok(SyntheticSpec::RandomTable {
                seed,
                features: d as usize,
                cardinality: card as usize,
                classes: k as usize,
            }),
            _ => Err(Error::UnknownDistribution(s.to_string())),
        }
    }
}

/// `n` i.i.d. draws from the named table, together with the table.
pub fn generate_synthetic<R: Rng + ?Sized>(spec: SyntheticSpec, n: usize, rng: &mut R) -> Result<(Dataset, JointTable<f64>)> {
    if n == 0 {
        return Err(Error::InvalidDataset("sample count must be at least 1".into()));
    }
    let table = spec.table()?;
    let d = table.feature_count();
    let sampler = table.instance_sampler()?;
    let mut rows = Array2::zeros((n, d));
    let mut labels = Vec::with_capacity(n);
    let mut values = Vec::new();
    for mut row in rows.rows_mut() {
        let (cats, y) = sampler.sample(rng)?;
        for (r, c) in row.iter_mut().zip(cats) {
            *r = c as f64;
        }
        match y {
            Target::Class(c) => labels.push(c),
            Target::Real(v) => values.push(v),
        }
    }
    let targets = match table.classes() {
        Some(classes) => Targets::Classes { labels, classes },
        None => Targets::Real(values),
    };
    let ds = Dataset::new(rows, targets, table.names().to_vec())?;
    Ok((ds, table))
}
