use serde::{Deserialize, Serialize};

use crate::amortized::Targets;
use crate::error::{Error, Result};
use crate::numerics::{cross_entropy, squared_error};
use crate::observation::Prediction;
use crate::scalar::{compensated_sum, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    CrossEntropy,
    Accuracy,
    Auroc,
    SquaredError,
}

impl Metric {
    pub fn name(&self) -> &'static str {
        match self {
            Metric::CrossEntropy => "cross_entropy",
            Metric::Accuracy => "accuracy",
            Metric::Auroc => "auroc",
            Metric::SquaredError => "squared_error",
        }
    }

    pub fn is_loss(&self) -> bool {
        matches!(self, Metric::CrossEntropy | Metric::SquaredError)
    }
}

impl std::str::FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cross_entropy" => Ok(Metric::CrossEntropy),
            "accuracy" => Ok(Metric::Accuracy),
            "auroc" => Ok(Metric::Auroc),
            "squared_error" => Ok(Metric::SquaredError),
            other => Err(Error::Config(format!("unknown metric '{other}'"))),
        }
    }
}

/// Scores aligned predictions against targets.
pub fn compute_metric<T: Real>(metric: Metric, predictions: &[Prediction<T>], targets: &Targets<T>) -> Result<T> {
    if predictions.len() != targets.len() {
        return Err(Error::DimensionMismatch {
            context: "predictions vs targets",
            expected: targets.len(),
            actual: predictions.len(),
        });
    }
    if predictions.is_empty() {
        return Err(Error::MetricUndefined("no instances to score".into()));
    }
    let n = T::lit(predictions.len() as f64);
    match (metric, targets) {
        (Metric::CrossEntropy, Targets::Classes { labels, .. }) => {
            let losses: Vec<T> = predictions
                .iter()
                .zip(labels)
                .map(|(p, &y)| cross_entropy(p.classes()?, y))
                .collect::<Result<_>>()?;
            Ok(compensated_sum(losses) / n)
        }
        (Metric::Accuracy, Targets::Classes { labels, .. }) => {
            let mut hits = 0usize;
            for (p, &y) in predictions.iter().zip(labels) {
                hits += usize::from(p.classes()?.argmax() == y);
            }
            Ok(T::lit(hits as f64) / n)
        }
        (Metric::Auroc, Targets::Classes { labels, classes }) => {
            let probs: Vec<&[T]> = predictions.iter().map(|p| p.classes().map(|s| s.as_slice())).collect::<Result<_>>()?;
            macro_auroc(&probs, labels, *classes)
        }
        (Metric::SquaredError, Targets::Real(values)) => {
            let losses: Vec<T> = predictions
                .iter()
                .zip(values)
                .map(|(p, &y)| Ok(squared_error(p.value()?, y)))
                .collect::<Result<_>>()?;
            Ok(compensated_sum(losses) / n)
        }
        (m, _) => Err(Error::TaskMismatch {
            expected: if m == Metric::SquaredError { "regression targets" } else { "class targets" },
        }),
    }
}

/// Mann-Whitney AUROC with ties counted 1/2; `positive[i]` marks the positive class.
pub fn binary_auroc<T: Real>(scores: &[T], positive: &[bool]) -> Result<T> {
    if scores.len() != positive.len() {
        return Err(Error::DimensionMismatch { context: "auroc", expected: positive.len(), actual: scores.len() });
    }
    let n_pos = positive.iter().filter(|&&p| p).count();
    let n_neg = positive.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::MetricUndefined(format!(
            "AUROC needs both classes; split has {n_pos} positive and {n_neg} negative instances"
        )));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::MetricUndefined("NaN score".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).expect("no NaN"));
    // midranks over tied blocks
    let mut rank_sum_pos = 0.0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && scores[order[end]] == scores[order[start]] {
            end += 1;
        }
        let midrank = (start + end + 1) as f64 / 2.0;
        rank_sum_pos += midrank * order[start..end].iter().filter(|&&i| positive[i]).count() as f64;
        start = end;
    }
    let u = rank_sum_pos - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Ok(T::lit(u / (n_pos as f64 * n_neg as f64)))
}

/// Binary AUROC on the positive-class probability, or the unweighted mean of
/// one-vs-rest AUROCs for more than two classes.
pub fn macro_auroc<T: Real>(probs: &[&[T]], labels: &[usize], classes: usize) -> Result<T> {
    let one_vs_rest = |c: usize| -> Result<T> {
        let scores: Vec<T> = probs.iter().map(|p| p[c]).collect();
        let positive: Vec<bool> = labels.iter().map(|&y| y == c).collect();
        binary_auroc(&scores, &positive).map_err(|e| match e {
            Error::MetricUndefined(msg) => Error::MetricUndefined(format!("class {c}: {msg}")),
            other => other,
        })
    };
    if classes == 2 {
        return one_vs_rest(1);
    }
    let per_class: Vec<T> = (0..classes).map(one_vs_rest).collect::<Result<_>>()?;
    Ok(compensated_sum(per_class) / T::lit(classes as f64))
}
