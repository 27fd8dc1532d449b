use std::fs;
use std::io::Read;
use std::path::Path;

use ndarray::Array2;

use crate::amortized::{GroupMatrix, Targets};
use crate::error::{Error, Result};

use super::Dataset;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelKind {
    /// Integer labels in `0..classes`.
    Classes(usize),
    Regression,
}

/// Reads a headed numeric CSV file, optionally grouping columns with a group spec file.
pub fn load_csv(path: &Path, label: &str, kind: LabelKind, group_spec: Option<&Path>) -> Result<Dataset> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let ds = read_csv(file, label, kind)?;
    match group_spec {
        None => Ok(ds),
        Some(spec) => {
            let text = fs::read_to_string(spec).map_err(|e| Error::io(spec, e))?;
            let (groups, names) = parse_group_spec(&text, &ds.feature_names)?;
            ds.with_groups(groups, names)
        }
    }
}

/// Row numbers in errors are file line numbers (the header is line 1).
pub fn read_csv<R: Read>(reader: R, label: &str, kind: LabelKind) -> Result<Dataset> {
    if let LabelKind::Classes(k) = kind {
        if k < 2 {
            return Err(Error::Config(format!("classification needs at least 2 classes, got {k}")));
        }
    }
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let label_col = header
        .iter()
        .position(|h| h == label)
        .ok_or_else(|| Error::InvalidDataset(format!("label column '{label}' not in header")))?;
    let feature_names: Vec<String> =
        header.iter().enumerate().filter(|(i, _)| *i != label_col).map(|(_, h)| h.clone()).collect();
    if feature_names.is_empty() {
        return Err(Error::InvalidDataset("no feature columns".into()));
    }

    let mut values = Vec::new();
    let mut labels = Vec::new();
    let mut reals = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let row = record.position().map_or(0, |p| p.line() as usize);
        for (c, cell) in record.iter().enumerate() {
            let column = header[c].clone();
            let v: f64 = cell.parse().map_err(|_| Error::CsvCell {
                row,
                column: column.clone(),
                message: if cell.is_empty() { "missing value".into() } else { format!("'{cell}' is not a number") },
            })?;
            if !v.is_finite() {
                return Err(Error::CsvCell { row, column, message: format!("'{cell}' is not finite") });
            }
            if c != label_col {
                values.push(v);
                continue;
            }
            match kind {
                LabelKind::Regression => reals.push(v),
                LabelKind::Classes(k) => {
                    if v.fract() != 0.0 || v < 0.0 || v >= k as f64 {
                        return Err(Error::CsvCell {
                            row,
                            column,
                            message: format!("label '{cell}' is not a class index below {k}"),
                        });
                    }
                    labels.push(v as usize);
                }
            }
        }
    }
    let n = values.len() / feature_names.len();
    let rows = Array2::from_shape_vec((n, feature_names.len()), values)
        .map_err(|e| Error::InvalidDataset(e.to_string()))?;
    let targets = match kind {
        LabelKind::Classes(classes) => Targets::Classes { labels, classes },
        LabelKind::Regression => Targets::Real(reals),
    };
    Dataset::new(rows, targets, feature_names)
}

/// Lines of `group_name: col_a, col_b, ...`; blank lines and `#` comments are skipped.
/// Every feature column must appear in exactly one group.
pub fn parse_group_spec(text: &str, feature_names: &[String]) -> Result<(GroupMatrix, Vec<String>)> {
    let mut names = Vec::new();
    let mut members = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (name, cols) = line
            .split_once(':')
            .ok_or_else(|| Error::InvalidGroups(format!("line {}: expected 'name: columns'", lineno + 1)))?;
        let name = name.trim();
        if name.is_empty() || names.iter().any(|n| n == name) {
            return Err(Error::InvalidGroups(format!("line {}: empty or duplicate group name '{name}'", lineno + 1)));
        }
        let mut group = Vec::new();
        for col in cols.split(',').map(str::trim).filter(|c| !c.is_empty()) {
            let f = feature_names
                .iter()
                .position(|n| n == col)
                .ok_or_else(|| Error::InvalidGroups(format!("line {}: unknown column '{col}'", lineno + 1)))?;
            group.push(f);
        }
        if group.is_empty() {
            return Err(Error::InvalidGroups(format!("line {}: group '{name}' has no columns", lineno + 1)));
        }
        names.push(name.to_string());
        members.push(group);
    }
    let groups = GroupMatrix::from_members(members, feature_names.len())?;
    Ok((groups, names))
}
