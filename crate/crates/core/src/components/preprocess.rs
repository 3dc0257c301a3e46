use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::{Array1, Array2, ArrayView2, Axis};

use super::ComponentError;

fn column_stats(x: ArrayView2<f64>) -> (Array1<f64>, Array1<f64>) {
    let n = x.nrows().max(1) as f64;
    let mean = x.sum_axis(Axis(0)) / n;
    let mut var = Array1::zeros(x.ncols());
    for row in x.rows() {
        for (j, v) in row.iter().enumerate() {
            let d = v - mean[j];
            var[j] += d * d;
        }
    }
    (mean, var / n)
}

/// Maps each column to [0, 1] on the training range. Constant columns map to 0.
#[derive(Debug, Clone)]
pub struct MinMaxScaler {
    pub(crate) min: Array1<f64>,
    range: Array1<f64>,
}

impl MinMaxScaler {
    pub fn fit(x: ArrayView2<f64>) -> Self {
        let min = x.fold_axis(Axis(0), f64::INFINITY, |a, &b| a.min(b));
        let max = x.fold_axis(Axis(0), f64::NEG_INFINITY, |a, &b| a.max(b));
        let range = (&max - &min).mapv(|r| if r > 0.0 { r } else { 1.0 });
        MinMaxScaler { min, range }
    }

    pub fn transform(&self, x: ArrayView2<f64>) -> Array2<f64> {
        (&x - &self.min) / &self.range
    }
}

/// Centers to zero mean and scales to unit (population) variance.
/// Constant columns are only centered.
#[derive(Debug, Clone)]
pub struct StandardScaler {
    pub(crate) mean: Array1<f64>,
    scale: Array1<f64>,
}

impl StandardScaler {
    pub fn fit(x: ArrayView2<f64>) -> Self {
        let (mean, var) = column_stats(x);
        let scale = var.mapv(|v| if v > 0.0 { v.sqrt() } else { 1.0 });
        StandardScaler { mean, scale }
    }

    pub fn transform(&self, x: ArrayView2<f64>) -> Array2<f64> {
        (&x - &self.mean) / &self.scale
    }
}

/// Drops columns whose training variance is at most the threshold.
#[derive(Debug, Clone)]
pub struct VarianceThreshold {
    pub(crate) input_width: usize,
    pub keep: Vec<usize>,
}

impl VarianceThreshold {
    pub fn fit(id: &str, x: ArrayView2<f64>, threshold: f64) -> Result<Self, ComponentError> {
        let (_, var) = column_stats(x);
        let keep: Vec<usize> = (0..x.ncols()).filter(|&j| var[j] > threshold).collect();
        if keep.is_empty() {
            return Err(ComponentError::Degenerate {
                component: id.to_string(),
                reason: format!("no column has variance above {threshold}"),
            });
        }
        Ok(VarianceThreshold {
            input_width: x.ncols(),
            keep,
        })
    }

    pub fn transform(&self, x: ArrayView2<f64>) -> Array2<f64> {
        x.select(Axis(1), &self.keep)
    }
}

/// Projection onto the leading principal axes of the centered training data.
/// The output width is `min(n_components, rank)`.
#[derive(Debug, Clone)]
pub struct Pca {
    pub(crate) mean: Array1<f64>,
    /// Columns are the principal axes (input width × kept components).
    pub components: Array2<f64>,
    pub explained_variance: Vec<f64>,
}

impl Pca {
    pub fn fit(id: &str, x: ArrayView2<f64>, n_components: usize) -> Result<Self, ComponentError> {
        let (n, d) = x.dim();
        let (mean, _) = column_stats(x);
        let centered = &x - &mean;
        let cov = centered.t().dot(&centered) / n.max(1) as f64;
        let eig = SymmetricEigen::new(DMatrix::from_fn(d, d, |i, j| cov[[i, j]]));
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&a, &b| {
            eig.eigenvalues[b]
                .total_cmp(&eig.eigenvalues[a])
                .then(a.cmp(&b))
        });
        let top = order.first().map_or(0.0, |&i| eig.eigenvalues[i]);
        let tol = top * 1e-10 * d as f64;
        let rank = order
            .iter()
            .filter(|&&i| eig.eigenvalues[i] > tol && eig.eigenvalues[i] > 1e-300)
            .count();
        if rank == 0 {
            return Err(ComponentError::Degenerate {
                component: id.to_string(),
                reason: "training data has zero variance".to_string(),
            });
        }
        let m = n_components.min(rank);
        let mut components = Array2::zeros((d, m));
        for (k, &i) in order.iter().take(m).enumerate() {
            let v = eig.eigenvectors.column(i);
            // sign convention: largest-magnitude entry positive
            let pivot = (0..d)
                .max_by(|&a, &b| v[a].abs().total_cmp(&v[b].abs()).then(b.cmp(&a)))
                .unwrap_or(0);
            let sign = if v[pivot] < 0.0 { -1.0 } else { 1.0 };
            for r in 0..d {
                components[[r, k]] = sign * v[r];
            }
        }
        let explained_variance = order.iter().take(m).map(|&i| eig.eigenvalues[i]).collect();
        Ok(Pca {
            mean,
            components,
            explained_variance,
        })
    }

    pub fn transform(&self, x: ArrayView2<f64>) -> Array2<f64> {
        (&x - &self.mean).dot(&self.components)
    }
}

/// Keeps the top `percentile`% of columns by one-way ANOVA F statistic.
///
/// The kept count is `ceil(percentile · width / 100)` clamped to `[1, width]`;
/// ties are broken by lower column index and kept columns retain input order.
#[derive(Debug, Clone)]
pub struct SelectPercentile {
    pub(crate) input_width: usize,
    pub scores: Vec<f64>,
    pub keep: Vec<usize>,
}

/// One-way ANOVA F score of every column against the class labels.
/// Columns without within-class variance score +inf when the class means
/// differ and 0 otherwise.
pub fn f_scores(x: ArrayView2<f64>, y: &[usize]) -> Vec<f64> {
    let (n, d) = x.dim();
    let classes = y.iter().copied().max().map_or(0, |m| m + 1);
    let mut counts = vec![0usize; classes];
    for &l in y {
        counts[l] += 1;
    }
    let present = counts.iter().filter(|&&c| c > 0).count();
    (0..d)
        .map(|j| {
            let col = x.column(j);
            let grand = col.sum() / n as f64;
            let mut sums = vec![0.0; classes];
            for (v, &l) in col.iter().zip(y) {
                sums[l] += v;
            }
            let means: Vec<f64> = sums
                .iter()
                .zip(&counts)
                .map(|(s, &c)| if c > 0 { s / c as f64 } else { 0.0 })
                .collect();
            let between: f64 = means
                .iter()
                .zip(&counts)
                .map(|(m, &c)| c as f64 * (m - grand).powi(2))
                .sum();
            let within: f64 = col.iter().zip(y).map(|(v, &l)| (v - means[l]).powi(2)).sum();
            if present < 2 || n <= present {
                return 0.0;
            }
            let df_between = (present - 1) as f64;
            let df_within = (n - present) as f64;
            let scale = between.abs().max(within.abs()).max(1.0);
            if within <= 1e-12 * scale {
                if between > 1e-12 * scale {
                    f64::INFINITY
                } else {
                    0.0
                }
            } else {
                (between / df_between) / (within / df_within)
            }
        })
        .collect()
}

impl SelectPercentile {
    pub fn fit(x: ArrayView2<f64>, y: &[usize], percentile: f64) -> Self {
        let d = x.ncols();
        let scores = f_scores(x, y);
        let k = ((percentile.clamp(0.0, 100.0) * d as f64 / 100.0).ceil() as usize).clamp(1, d.max(1));
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
        let mut keep: Vec<usize> = order.into_iter().take(k.min(d)).collect();
        keep.sort_unstable();
        SelectPercentile {
            input_width: d,
            scores,
            keep,
        }
    }

    pub fn transform(&self, x: ArrayView2<f64>) -> Array2<f64> {
        x.select(Axis(1), &self.keep)
    }
}
