use ndarray::{Array2, ArrayView2};

use super::{finalize_row, int_param, Resolved};

#[derive(Debug, Clone, Copy)]
pub(crate) struct TreeParams {
    max_depth: usize,
    min_samples_split: usize,
    min_samples_leaf: usize,
}

impl TreeParams {
    pub(crate) fn from_resolved(params: &Resolved) -> Self {
        TreeParams {
            max_depth: int_param(params, "max_depth", i64::MAX).max(1) as usize,
            min_samples_split: int_param(params, "min_samples_split", 2).max(2) as usize,
            min_samples_leaf: int_param(params, "min_samples_leaf", 1).max(1) as usize,
        }
    }
}

#[derive(Debug, Clone)]
enum Node {
    Leaf(Vec<f64>),
    Split {
        feature: usize,
        threshold: f64,
        left: Box<Node>,
        right: Box<Node>,
    },
}

/// CART classification tree with Gini impurity.
///
/// Splits are taken at midpoints between consecutive distinct values; a row
/// goes left when its value is `<= threshold`. Among equally good splits the
/// lowest feature index, then the lowest threshold, wins. A split is allowed
/// whenever the node is impure, even if it does not lower the impurity.
#[derive(Debug, Clone)]
pub struct DecisionTree {
    root: Node,
    class_count: usize,
    depth: usize,
}

fn gini(counts: &[usize], total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let t = total as f64;
    1.0 - counts.iter().map(|&c| (c as f64 / t).powi(2)).sum::<f64>()
}

struct Builder<'a> {
    x: ArrayView2<'a, f64>,
    y: &'a [usize],
    classes: usize,
    params: TreeParams,
    depth: usize,
}

impl Builder<'_> {
    fn counts(&self, rows: &[usize]) -> Vec<usize> {
        let mut c = vec![0; self.classes];
        for &r in rows {
            c[self.y[r]] += 1;
        }
        c
    }

    fn leaf(&self, counts: &[usize], total: usize) -> Node {
        Node::Leaf(counts.iter().map(|&c| c as f64 / total as f64).collect())
    }

    fn build(&mut self, rows: &mut [usize], depth: usize) -> Node {
        self.depth = self.depth.max(depth);
        let counts = self.counts(rows);
        let n = rows.len();
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        if pure || depth >= self.params.max_depth || n < self.params.min_samples_split {
            return self.leaf(&counts, n);
        }
        let Some((feature, threshold)) = self.best_split(rows) else {
            return self.leaf(&counts, n);
        };
        let split = stable_partition(rows, |&r| self.x[[r, feature]] <= threshold);
        let (l, r) = rows.split_at_mut(split);
        let left = self.build(l, depth + 1);
        let right = self.build(r, depth + 1);
        Node::Split {
            feature,
            threshold,
            left: Box::new(left),
            right: Box::new(right),
        }
    }

    fn best_split(&self, rows: &[usize]) -> Option<(usize, f64)> {
        let n = rows.len();
        let total = self.counts(rows);
        let min_leaf = self.params.min_samples_leaf;
        let mut best: Option<(f64, usize, f64)> = None;
        let mut sorted = rows.to_vec();
        for f in 0..self.x.ncols() {
            sorted.sort_by(|&a, &b| self.x[[a, f]].total_cmp(&self.x[[b, f]]).then(a.cmp(&b)));
            let mut left = vec![0usize; self.classes];
            for i in 0..n - 1 {
                left[self.y[sorted[i]]] += 1;
                let (a, b) = (self.x[[sorted[i], f]], self.x[[sorted[i + 1], f]]);
                if a >= b {
                    continue;
                }
                let nl = i + 1;
                let nr = n - nl;
                if nl < min_leaf || nr < min_leaf {
                    continue;
                }
                let right: Vec<usize> = total.iter().zip(&left).map(|(t, l)| t - l).collect();
                let impurity = (nl as f64 * gini(&left, nl) + nr as f64 * gini(&right, nr)) / n as f64;
                if best.is_none_or(|(b, _, _)| impurity < b) {
                    let mut threshold = a + (b - a) / 2.0;
                    if threshold >= b {
                        threshold = a;
                    }
                    best = Some((impurity, f, threshold));
                }
            }
        }
        best.map(|(_, f, t)| (f, t))
    }
}

/// Stable in-place partition; returns the number of rows satisfying `pred`.
fn stable_partition(rows: &mut [usize], pred: impl Fn(&usize) -> bool) -> usize {
    let (yes, no): (Vec<usize>, Vec<usize>) = rows.iter().partition(|r| pred(r));
    let k = yes.len();
    for (slot, v) in rows.iter_mut().zip(yes.into_iter().chain(no)) {
        *slot = v;
    }
    k
}

impl DecisionTree {
    pub(crate) fn fit(x: ArrayView2<f64>, y: &[usize], class_count: usize, params: TreeParams) -> Self {
        let mut builder = Builder {
            x,
            y,
            classes: class_count,
            params,
            depth: 0,
        };
        let mut rows: Vec<usize> = (0..x.nrows()).collect();
        let root = builder.build(&mut rows, 0);
        DecisionTree {
            root,
            class_count,
            depth: builder.depth,
        }
    }

    /// Depth of the deepest leaf (0 for a single leaf).
    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn predict_proba(&self, x: ArrayView2<f64>) -> Array2<f64> {
        let mut out = Array2::zeros((x.nrows(), self.class_count));
        for (i, row) in x.rows().into_iter().enumerate() {
            let mut node = &self.root;
            let probs = loop {
                match node {
                    Node::Leaf(p) => break p,
                    Node::Split {
                        feature,
                        threshold,
                        left,
                        right,
                    } => {
                        node = if row[*feature] <= *threshold { left } else { right };
                    }
                }
            };
            let mut p = probs.clone();
            finalize_row(&mut p);
            out.row_mut(i).assign(&ndarray::ArrayView1::from(&p));
        }
        out
    }
}
