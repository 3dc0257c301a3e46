use ndarray::{Array2, ArrayView2};

use super::{finalize_row, ComponentError};

fn class_counts(y: &[usize], class_count: usize) -> Vec<usize> {
    let mut c = vec![0; class_count];
    for &l in y {
        c[l] += 1;
    }
    c
}

/// Turns per-class joint log-likelihoods into a probability row. Classes with
/// `-inf` (absent at fit time) get probability zero before flooring.
fn softmax_row(log_joint: &[f64]) -> Vec<f64> {
    let max = log_joint.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut p: Vec<f64> = log_joint
        .iter()
        .map(|&l| if l == f64::NEG_INFINITY { 0.0 } else { (l - max).exp() })
        .collect();
    let sum: f64 = p.iter().sum();
    for v in p.iter_mut() {
        *v /= sum;
    }
    finalize_row(&mut p);
    p
}

/// Predicts the training class frequencies for every row.
#[derive(Debug, Clone)]
pub struct Majority {
    probs: Vec<f64>,
}

impl Majority {
    pub fn fit(y: &[usize], class_count: usize) -> Self {
        let n = y.len().max(1) as f64;
        let mut probs: Vec<f64> = class_counts(y, class_count)
            .into_iter()
            .map(|c| c as f64 / n)
            .collect();
        finalize_row(&mut probs);
        Majority { probs }
    }

    pub fn predict_proba(&self, x: ArrayView2<f64>) -> Array2<f64> {
        Array2::from_shape_fn((x.nrows(), self.probs.len()), |(_, c)| self.probs[c])
    }
}

/// Gaussian naive Bayes. Per-class variances are inflated by
/// `var_smoothing × (largest feature variance)`.
#[derive(Debug, Clone)]
pub struct GaussianNb {
    log_prior: Vec<f64>,
    mean: Array2<f64>,
    var: Array2<f64>,
}

impl GaussianNb {
    pub fn fit(x: ArrayView2<f64>, y: &[usize], class_count: usize, var_smoothing: f64) -> Self {
        let (n, d) = x.dim();
        let counts = class_counts(y, class_count);
        let mut mean = Array2::<f64>::zeros((class_count, d));
        let mut var = Array2::<f64>::zeros((class_count, d));
        for (row, &l) in x.rows().into_iter().zip(y) {
            for j in 0..d {
                mean[[l, j]] += row[j];
            }
        }
        for c in 0..class_count {
            if counts[c] > 0 {
                for j in 0..d {
                    mean[[c, j]] /= counts[c] as f64;
                }
            }
        }
        for (row, &l) in x.rows().into_iter().zip(y) {
            for j in 0..d {
                var[[l, j]] += (row[j] - mean[[l, j]]).powi(2);
            }
        }
        let mut max_var: f64 = 0.0;
        for j in 0..d {
            let col = x.column(j);
            let m = col.sum() / n.max(1) as f64;
            let v = col.iter().map(|a| (a - m).powi(2)).sum::<f64>() / n.max(1) as f64;
            max_var = max_var.max(v);
        }
        let epsilon = (var_smoothing * max_var).max(1e-12);
        for c in 0..class_count {
            for j in 0..d {
                var[[c, j]] = var[[c, j]] / counts[c].max(1) as f64 + epsilon;
            }
        }
        let log_prior = counts
            .iter()
            .map(|&c| {
                if c == 0 {
                    f64::NEG_INFINITY
                } else {
                    (c as f64 / n as f64).ln()
                }
            })
            .collect();
        GaussianNb {
            log_prior,
            mean,
            var,
        }
    }

    pub fn predict_proba(&self, x: ArrayView2<f64>) -> Array2<f64> {
        let classes = self.log_prior.len();
        let mut out = Array2::zeros((x.nrows(), classes));
        for (i, row) in x.rows().into_iter().enumerate() {
            let joint: Vec<f64> = (0..classes)
                .map(|c| {
                    if self.log_prior[c] == f64::NEG_INFINITY {
                        return f64::NEG_INFINITY;
                    }
                    let mut ll = self.log_prior[c];
                    for (j, &v) in row.iter().enumerate() {
                        let var = self.var[[c, j]];
                        ll -= 0.5 * (2.0 * std::f64::consts::PI * var).ln();
                        ll -= (v - self.mean[[c, j]]).powi(2) / (2.0 * var);
                    }
                    ll
                })
                .collect();
            out.row_mut(i)
                .assign(&ndarray::ArrayView1::from(&softmax_row(&joint)));
        }
        out
    }
}

/// Bernoulli naive Bayes over binarized features (`x > binarize`).
///
/// Training inputs must lie in [0, 1]; anything else is reported as an
/// incompatibility so that an upstream pre-processor can be removed.
#[derive(Debug, Clone)]
pub struct BernoulliNb {
    log_prior: Vec<f64>,
    log_p: Array2<f64>,
    log_not_p: Array2<f64>,
    binarize: f64,
}

impl BernoulliNb {
    pub fn fit(
        id: &str,
        x: ArrayView2<f64>,
        y: &[usize],
        class_count: usize,
        alpha: f64,
        binarize: f64,
    ) -> Result<Self, ComponentError> {
        if let Some(((r, c), v)) = x.indexed_iter().find(|(_, v)| !(0.0..=1.0).contains(*v)) {
            return Err(ComponentError::Incompatible {
                component: id.to_string(),
                reason: format!("input value {v} at ({r}, {c}) outside [0, 1]"),
            });
        }
        let (n, d) = x.dim();
        let counts = class_counts(y, class_count);
        let mut ones = Array2::<f64>::zeros((class_count, d));
        for (row, &l) in x.rows().into_iter().zip(y) {
            for j in 0..d {
                if row[j] > binarize {
                    ones[[l, j]] += 1.0;
                }
            }
        }
        let mut log_p = Array2::zeros((class_count, d));
        let mut log_not_p = Array2::zeros((class_count, d));
        for c in 0..class_count {
            for j in 0..d {
                let p = (ones[[c, j]] + alpha) / (counts[c] as f64 + 2.0 * alpha);
                log_p[[c, j]] = p.ln();
                log_not_p[[c, j]] = (1.0 - p).ln();
            }
        }
        let log_prior = counts
            .iter()
            .map(|&c| {
                if c == 0 {
                    f64::NEG_INFINITY
                } else {
                    (c as f64 / n as f64).ln()
                }
            })
            .collect();
        Ok(BernoulliNb {
            log_prior,
            log_p,
            log_not_p,
            binarize,
        })
    }

    pub fn predict_proba(&self, x: ArrayView2<f64>) -> Array2<f64> {
        let classes = self.log_prior.len();
        let mut out = Array2::zeros((x.nrows(), classes));
        for (i, row) in x.rows().into_iter().enumerate() {
            let joint: Vec<f64> = (0..classes)
                .map(|c| {
                    if self.log_prior[c] == f64::NEG_INFINITY {
                        return f64::NEG_INFINITY;
                    }
                    self.log_prior[c]
                        + row
                            .iter()
                            .enumerate()
                            .map(|(j, &v)| {
                                if v > self.binarize {
                                    self.log_p[[c, j]]
                                } else {
                                    self.log_not_p[[c, j]]
                                }
                            })
                            .sum::<f64>()
                })
                .collect();
            out.row_mut(i)
                .assign(&ndarray::ArrayView1::from(&softmax_row(&joint)));
        }
        out
    }
}
