use ndarray::{Array2, ArrayView2};

use super::finalize_row;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KnnWeights {
    Uniform,
    Distance,
}

/// k-nearest-neighbors vote under Euclidean distance. Distance ties are
/// broken by lower training-row index.
#[derive(Debug, Clone)]
pub struct Knn {
    x: Array2<f64>,
    y: Vec<usize>,
    class_count: usize,
    k: usize,
    weights: KnnWeights,
}

impl Knn {
    pub fn fit(
        x: ArrayView2<f64>,
        y: &[usize],
        class_count: usize,
        k: usize,
        weights: KnnWeights,
    ) -> Self {
        Knn {
            x: x.to_owned(),
            y: y.to_vec(),
            class_count,
            k: k.max(1),
            weights,
        }
    }

    pub fn predict_proba(&self, x: ArrayView2<f64>) -> Array2<f64> {
        let k = self.k.min(self.x.nrows());
        let mut out = Array2::zeros((x.nrows(), self.class_count));
        let mut dist: Vec<(f64, usize)> = Vec::with_capacity(self.x.nrows());
        for (i, q) in x.rows().into_iter().enumerate() {
            dist.clear();
            for (j, t) in self.x.rows().into_iter().enumerate() {
                let d2: f64 = q.iter().zip(t.iter()).map(|(a, b)| (a - b) * (a - b)).sum();
                dist.push((d2, j));
            }
            let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
            if k < dist.len() {
                dist.select_nth_unstable_by(k - 1, cmp);
            }
            let nearest = &mut dist[..k];
            nearest.sort_by(cmp);
            let mut votes = vec![0.0; self.class_count];
            match self.weights {
                KnnWeights::Uniform => {
                    for &(_, j) in nearest.iter() {
                        votes[self.y[j]] += 1.0;
                    }
                }
                KnnWeights::Distance => {
                    if nearest.iter().any(|&(d, _)| d == 0.0) {
                        for &(d, j) in nearest.iter() {
                            if d == 0.0 {
                                votes[self.y[j]] += 1.0;
                            }
                        }
                    } else {
                        for &(d, j) in nearest.iter() {
                            votes[self.y[j]] += 1.0 / d.sqrt();
                        }
                    }
                }
            }
            let total: f64 = votes.iter().sum();
            for v in votes.iter_mut() {
                *v /= total;
            }
            finalize_row(&mut votes);
            out.row_mut(i).assign(&ndarray::ArrayView1::from(&votes));
        }
        out
    }
}
