//! Tabular datasets: synthetic draws from known tables, CSV ingestion, and
//! stratified splitting with train-only standardization.
//!
//! Rows are stored raw. Standardization is kept as a record and applied on the
//! way into a network, so oracles and learned models read the same rows.

mod csv_io;
mod split;
mod synthetic;

use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::amortized::{GroupMatrix, Targets, TrainingData};
use crate::cmi_estimator::ColumnStore;
use crate::error::{Error, Result};
use crate::scalar::Real;

pub use csv_io::{load_csv, parse_group_spec, read_csv, LabelKind};
pub use split::{split_standardize, DEFAULT_FRACTIONS};
pub use synthetic::{generate_synthetic, SyntheticSpec};

/// Per-feature z-score parameters fitted on training rows only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardization {
    /// Population mean and standard deviation of each column; constant columns get scale 1.
    pub fn fit(rows: &Array2<f64>) -> Result<Self> {
        if rows.nrows() == 0 {
            return Err(Error::InvalidDataset("cannot standardize zero rows".into()));
        }
        let n = rows.nrows() as f64;
        let mut mean = Vec::with_capacity(rows.ncols());
        let mut scale = Vec::with_capacity(rows.ncols());
        for col in rows.axis_iter(Axis(1)) {
            let m = col.sum() / n;
            let var = col.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n;
            mean.push(m);
            scale.push(if var.sqrt() > 1e-12 { var.sqrt() } else { 1.0 });
        }
        Ok(Standardization { mean, scale })
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.mean).zip(&self.scale).map(|((v, m), s)| (v - m) / s).collect()
    }

    pub fn apply_rows(&self, rows: &Array2<f64>) -> Array2<f64> {
        let mut out = rows.clone();
        for mut row in out.rows_mut() {
            for ((v, m), s) in row.iter_mut().zip(&self.mean).zip(&self.scale) {
                *v = (*v - m) / s;
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Val,
    Test,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub rows: Array2<f64>,
    pub targets: Targets<f64>,
    pub feature_names: Vec<String>,
    pub class_names: Vec<String>,
    pub groups: GroupMatrix,
    pub group_names: Vec<String>,
    /// One tag per row once split.
    pub splits: Option<Vec<Split>>,
    pub standardization: Option<Standardization>,
}

impl Dataset {
    /// Validates shapes and finiteness; groups default to one per feature.
    pub fn new(rows: Array2<f64>, targets: Targets<f64>, feature_names: Vec<String>) -> Result<Self> {
        let d = rows.ncols();
        let class_names = match &targets {
            Targets::Classes { classes, .. } => (0..*classes).map(|c| c.to_string()).collect(),
            Targets::Real(_) => Vec::new(),
        };
        let ds = Dataset {
            groups: GroupMatrix::identity(d),
            group_names: feature_names.clone(),
            rows,
            targets,
            feature_names,
            class_names,
            splits: None,
            standardization: None,
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn with_groups(mut self, groups: GroupMatrix, names: Vec<String>) -> Result<Self> {
        self.groups = groups;
        self.group_names = names;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let (n, d) = self.rows.dim();
        if n == 0 {
            return Err(Error::InvalidDataset("dataset has no rows".into()));
        }
        if self.targets.len() != n {
            return Err(Error::InvalidDataset(format!("{n} rows but {} targets", self.targets.len())));
        }
        if self.feature_names.len() != d {
            return Err(Error::InvalidDataset(format!("{d} columns but {} names", self.feature_names.len())));
        }
        if self.groups.feature_count() != d || self.group_names.len() != self.groups.group_count() {
            return Err(Error::InvalidGroups("group matrix does not match the feature columns".into()));
        }
        if let Some((r, c)) = self.rows.indexed_iter().find(|(_, v)| !v.is_finite()).map(|(i, _)| i) {
            return Err(Error::InvalidDataset(format!("non-finite value at row {r}, column {c}")));
        }
        match &self.targets {
            Targets::Classes { labels, classes } => {
                if let Some(&l) = labels.iter().find(|&&l| l >= *classes) {
                    return Err(Error::LabelOutOfRange { label: l, classes: *classes });
                }
            }
            Targets::Real(v) => {
                if v.iter().any(|y| !y.is_finite()) {
                    return Err(Error::InvalidDataset("non-finite regression target".into()));
                }
            }
        }
        if let Some(tags) = &self.splits {
            if tags.len() != n {
                return Err(Error::InvalidDataset("split tags do not cover every row".into()));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.rows.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.nrows() == 0
    }

    pub fn feature_count(&self) -> usize {
        self.rows.ncols()
    }

    pub fn classes(&self) -> Option<usize> {
        match self.targets {
            Targets::Classes { classes, .. } => Some(classes),
            Targets::Real(_) => None,
        }
    }

    /// Row indices tagged `split`, in row order.
    pub fn indices(&self, split: Split) -> Result<Vec<usize>> {
        let tags = self.splits.as_ref().ok_or_else(|| Error::InvalidDataset("dataset has not been split".into()))?;
        Ok(tags.iter().enumerate().filter(|(_, t)| **t == split).map(|(i, _)| i).collect())
    }

    pub fn rows_of(&self, split: Split) -> Result<Array2<f64>> {
        Ok(self.rows.select(Axis(0), &self.indices(split)?))
    }

    pub fn targets_of(&self, split: Split) -> Result<Targets<f64>> {
        let idx = self.indices(split)?;
        Ok(match &self.targets {
            Targets::Classes { labels, classes } => {
                Targets::Classes { labels: idx.iter().map(|&i| labels[i]).collect(), classes: *classes }
            }
            Targets::Real(v) => Targets::Real(idx.iter().map(|&i| v[i]).collect()),
        })
    }

    /// Standardized train and validation matrices for network training.
    pub fn training_data<T: Real>(&self) -> Result<TrainingData<T>> {
        let std = self
            .standardization
            .as_ref()
            .ok_or_else(|| Error::InvalidDataset("dataset has not been standardized".into()))?;
        let prep = |split| -> Result<(Array2<T>, Targets<T>)> {
            let x = std.apply_rows(&self.rows_of(split)?).mapv(T::lit);
            let y = match self.targets_of(split)? {
                Targets::Classes { labels, classes } => Targets::Classes { labels, classes },
                Targets::Real(v) => Targets::Real(v.into_iter().map(T::lit).collect()),
            };
            Ok((x, y))
        };
        let (train_x, train_y) = prep(Split::Train)?;
        let (val_x, val_y) = prep(Split::Val)?;
        Ok(TrainingData { train_x, train_y, val_x, val_y })
    }

    /// Raw training rows for the marginal resampler.
    pub fn train_column_store<T: Real>(&self) -> Result<ColumnStore<T>> {
        ColumnStore::new(self.rows_of(Split::Train)?.mapv(T::lit), self.groups.clone())
    }
}
