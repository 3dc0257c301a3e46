use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::components::argmax;
use crate::dataset::TaskKind;

/// Lower clip applied to the true-class probability in [`log_loss`].
pub const LOG_LOSS_EPS: f64 = 1e-15;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("AUROC needs both classes, got only class {0}")]
    SingleClass(usize),
    #[error("AUROC needs binary labels, got label {0}")]
    NotBinary(usize),
    #[error("length mismatch: {0} labels vs {1} predictions")]
    LengthMismatch(usize, usize),
    #[error("label {label} has no probability column (width {width})")]
    MissingColumn { label: usize, width: usize },
    #[error("metric {metric} is not defined for {task:?} tasks")]
    Incompatible { metric: Metric, task: TaskKind },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Auroc,
    LogLoss,
    ErrorRate,
}

impl std::fmt::Display for Metric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Metric::Auroc => "auroc",
            Metric::LogLoss => "log_loss",
            Metric::ErrorRate => "error_rate",
        })
    }
}

impl std::str::FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "auroc" => Ok(Metric::Auroc),
            "logloss" | "log_loss" => Ok(Metric::LogLoss),
            "error" | "error_rate" => Ok(Metric::ErrorRate),
            other => Err(format!("unknown metric `{other}` (expected auroc, logloss or error)")),
        }
    }
}

impl Metric {
    pub fn maximize(self) -> bool {
        matches!(self, Metric::Auroc)
    }

    /// Maps a raw value to "higher is better".
    pub fn orient(self, raw: f64) -> f64 {
        if self.maximize() {
            raw
        } else {
            -raw
        }
    }

    /// Inverse of [`Metric::orient`].
    pub fn raw(self, oriented: f64) -> f64 {
        self.orient(oriented)
    }

    pub fn check_task(self, task: TaskKind) -> Result<(), MetricError> {
        if self == Metric::Auroc && task != TaskKind::Binary {
            return Err(MetricError::Incompatible { metric: self, task });
        }
        Ok(())
    }

    /// Raw metric value of a probability matrix against labels. AUROC uses the
    /// class-1 column as the positive score.
    pub fn score(self, labels: &[usize], probs: ArrayView2<f64>) -> Result<f64, MetricError> {
        if labels.len() != probs.nrows() {
            return Err(MetricError::LengthMismatch(labels.len(), probs.nrows()));
        }
        match self {
            Metric::Auroc => {
                if probs.ncols() < 2 {
                    return Err(MetricError::MissingColumn {
                        label: 1,
                        width: probs.ncols(),
                    });
                }
                let scores: Vec<f64> = probs.column(1).to_vec();
                auroc(labels, &scores)
            }
            Metric::LogLoss => log_loss(labels, probs),
            Metric::ErrorRate => error_rate(labels, probs),
        }
    }
}

/// Area under the ROC curve: the fraction of (positive, negative) pairs in
/// which the positive scores higher, counting ties as one half.
///
/// Computed from average ranks in O(n log n).
pub fn auroc(labels: &[usize], scores: &[f64]) -> Result<f64, MetricError> {
    if labels.len() != scores.len() {
        return Err(MetricError::LengthMismatch(labels.len(), scores.len()));
    }
    if let Some(&l) = labels.iter().find(|&&l| l > 1) {
        return Err(MetricError::NotBinary(l));
    }
    let positives = labels.iter().filter(|&&l| l == 1).count();
    let negatives = labels.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(MetricError::SingleClass(labels.first().copied().unwrap_or(0)));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // ranks are 1-based; tied block i..=j shares the average rank
        let avg = (i + j) as f64 / 2.0 + 1.0;
        let pos_in_block = order[i..=j].iter().filter(|&&k| labels[k] == 1).count();
        rank_sum_pos += avg * pos_in_block as f64;
        i = j + 1;
    }
    let p = positives as f64;
    let n = negatives as f64;
    Ok((rank_sum_pos - p * (p + 1.0) / 2.0) / (p * n))
}

/// Mean negative log of the true-class probability, clipped below at 1e-15.
pub fn log_loss(labels: &[usize], probs: ArrayView2<f64>) -> Result<f64, MetricError> {
    if labels.len() != probs.nrows() {
        return Err(MetricError::LengthMismatch(labels.len(), probs.nrows()));
    }
    let mut total = 0.0;
    for (row, &l) in probs.rows().into_iter().zip(labels) {
        let p = *row.get(l).ok_or(MetricError::MissingColumn {
            label: l,
            width: probs.ncols(),
        })?;
        total -= p.clamp(LOG_LOSS_EPS, 1.0).ln();
    }
    Ok(total / labels.len().max(1) as f64)
}

/// Fraction of rows whose most probable class (lowest index on ties) is wrong.
pub fn error_rate(labels: &[usize], probs: ArrayView2<f64>) -> Result<f64, MetricError> {
    if labels.len() != probs.nrows() {
        return Err(MetricError::LengthMismatch(labels.len(), probs.nrows()));
    }
    let wrong = probs
        .rows()
        .into_iter()
        .zip(labels)
        .filter(|(row, &l)| argmax(&row.to_vec()) != l)
        .count();
    Ok(wrong as f64 / labels.len().max(1) as f64)
}
