use rand::seq::SliceRandom;
use rand::Rng;

use crate::amortized::Targets;
use crate::error::{Error, Result};

use super::{Dataset, Split, Standardization};

pub const DEFAULT_FRACTIONS: [f64; 3] = [0.7, 0.15, 0.15];

/// Tags rows train/val/test and fits standardization on the train rows.
///
/// Classification splits are stratified: rows are shuffled within each class and
/// interleaved by within-class rank, so every contiguous block of the ordering
/// carries the class proportions. Split sizes are `round(f·n)` for train and val
/// with the remainder going to test.
pub fn split_standardize<R: Rng + ?Sized>(dataset: &Dataset, fractions: [f64; 3], rng: &mut R) -> Result<Dataset> {
    if fractions.iter().any(|f| !(*f > 0.0)) || (fractions.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::Config(format!("split fractions {fractions:?} must be positive and sum to 1")));
    }
    let n = dataset.len();
    let n_train = (fractions[0] * n as f64).round() as usize;
    let n_val = (fractions[1] * n as f64).round() as usize;
    if n_train == 0 || n_val == 0 || n_train + n_val >= n {
        return Err(Error::InvalidDataset(format!("{n} rows are too few for a three-way split")));
    }

    let order: Vec<usize> = match &dataset.targets {
        Targets::Real(_) => {
            let mut idx: Vec<usize> = (0..n).collect();
            idx.shuffle(rng);
            idx
        }
        Targets::Classes { labels, classes } => {
            let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); *classes];
            for (i, &l) in labels.iter().enumerate() {
                by_class[l].push(i);
            }
            let mut keyed: Vec<(f64, usize)> = Vec::with_capacity(n);
            for rows in &mut by_class {
                rows.shuffle(rng);
                let m = rows.len() as f64;
                let jitter: f64 = rng.random();
                keyed.extend(rows.iter().enumerate().map(|(r, &i)| ((r as f64 + jitter) / m, i)));
            }
            keyed.sort_by(|a, b| a.0.total_cmp(&b.0));
            keyed.into_iter().map(|(_, i)| i).collect()
        }
    };

    let mut tags = vec![Split::Test; n];
    for (pos, &i) in order.iter().enumerate() {
        tags[i] = if pos < n_train {
            Split::Train
        } else if pos < n_train + n_val {
            Split::Val
        } else {
            Split::Test
        };
    }
    if let Targets::Classes { labels, classes } = &dataset.targets {
        for c in 0..*classes {
            if !labels.iter().zip(&tags).any(|(&l, &t)| l == c && t == Split::Train) {
                return Err(Error::InvalidDataset(format!("class {c} has no training rows; dataset too small")));
            }
        }
    }

    let mut out = dataset.clone();
    out.splits = Some(tags);
    out.standardization = Some(Standardization::fit(&out.rows_of(Split::Train)?)?);
    Ok(out)
}
