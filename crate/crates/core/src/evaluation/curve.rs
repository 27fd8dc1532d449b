use std::fmt::Write;

use serde::Serialize;

use crate::error::{Error, Result};

/// z-value of the two-sided 95% normal interval.
const Z95: f64 = 1.96;

/// Metric values per budget for each repeated run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BudgetCurve {
    pub metric: String,
    pub budgets: Vec<usize>,
    /// `runs[r][b]` is run `r` at `budgets[b]`.
    pub runs: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Summary {
    pub mean: f64,
    /// Half-width of the 95% interval; 0 for a single run.
    pub half_width: f64,
}

impl BudgetCurve {
    pub fn new(metric: &str, budgets: Vec<usize>) -> Result<Self> {
        if budgets.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config(format!("budgets {budgets:?} must be increasing")));
        }
        Ok(BudgetCurve { metric: metric.to_string(), budgets, runs: Vec::new() })
    }

    pub fn push_run(&mut self, values: Vec<f64>) -> Result<()> {
        if values.len() != self.budgets.len() {
            return Err(Error::DimensionMismatch {
                context: "budget curve run",
                expected: self.budgets.len(),
                actual: values.len(),
            });
        }
        self.runs.push(values);
        Ok(())
    }

    pub fn summary(&self) -> Vec<Summary> {
        let n = self.runs.len() as f64;
        (0..self.budgets.len())
            .map(|b| {
                let vals: Vec<f64> = self.runs.iter().map(|r| r[b]).collect();
                let mean = vals.iter().sum::<f64>() / n;
                let half_width = if vals.len() > 1 {
                    let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
                    Z95 * var.sqrt() / n.sqrt()
                } else {
                    0.0
                };
                Summary { mean, half_width }
            })
            .collect()
    }

    /// Unweighted mean over budgets of the per-budget means.
    pub fn mean_over_budgets(&self) -> f64 {
        let s = self.summary();
        s.iter().map(|x| x.mean).sum::<f64>() / s.len() as f64
    }

    /// `budget,mean,lower,upper,run_0,...`
    pub fn to_csv(&self) -> String {
        let mut out = String::from("budget,mean,lower,upper");
        for r in 0..self.runs.len() {
            let _ = write!(out, ",run_{r}");
        }
        out.push('\n');
        for (b, s) in self.budgets.iter().zip(self.summary()) {
            let _ = write!(out, "{b},{},{},{}", s.mean, s.mean - s.half_width, s.mean + s.half_width);
            for run in &self.runs {
                let idx = self.budgets.iter().position(|x| x == b).expect("own budget");
                let _ = write!(out, ",{}", run[idx]);
            }
            out.push('\n');
        }
        out
    }

    /// Line-chart description for an external plotting tool.
    pub fn plot_spec(&self, title: &str) -> String {
        let points: Vec<serde_json::Value> = self
            .budgets
            .iter()
            .zip(self.summary())
            .map(|(b, s)| serde_json::json!({"budget": b, "mean": s.mean, "lower": s.mean - s.half_width, "upper": s.mean + s.half_width}))
            .collect();
        let spec = serde_json::json!({
            "title": title,
            "mark": "line",
            "x": {"field": "budget", "label": "number of features"},
            "y": {"field": "mean", "label": self.metric, "band": ["lower", "upper"]},
            "points": points,
        });
        serde_json::to_string_pretty(&spec).expect("json values serialize")
    }
}

/// Selection-frequency matrix as CSV with one row per budget.
pub fn frequency_csv(budgets: &[usize], group_names: &[String], freq: &ndarray::Array2<f64>) -> String {
    let mut out = String::from("budget");
    for n in group_names {
        let _ = write!(out, ",{n}");
    }
    out.push('\n');
    for (b, row) in budgets.iter().zip(freq.rows()) {
        let _ = write!(out, "{b}");
        for v in row {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    out
}
