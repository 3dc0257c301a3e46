//! Anytime analyses over oriented (higher is better) scores.

use std::collections::BTreeMap;

use serde::Serialize;

/// A point of an anytime trace: seconds since start and the best score so far.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TracePoint {
    pub elapsed: f64,
    pub score: f64,
}

impl TracePoint {
    pub fn new(elapsed: f64, score: f64) -> Self {
        TracePoint { elapsed, score }
    }
}

/// Best score among points with `elapsed <= t`.
pub fn best_so_far(trace: &[TracePoint], t: f64) -> Option<f64> {
    trace
        .iter()
        .filter(|p| p.elapsed <= t)
        .map(|p| p.score)
        .fold(None, |acc: Option<f64>, s| Some(acc.map_or(s, |a| a.max(s))))
}

/// Gap of every optimizer to the best score any optimizer reached by `t`.
/// Optimizers without a candidate yet get `None`, as do all of them when no
/// optimizer has one.
pub fn empirical_gap(traces: &BTreeMap<String, Vec<TracePoint>>, t: f64) -> BTreeMap<String, Option<f64>> {
    let best: BTreeMap<&String, Option<f64>> = traces.iter().map(|(k, v)| (k, best_so_far(v, t))).collect();
    let reference = best.values().flatten().copied().fold(None, |acc: Option<f64>, s| Some(acc.map_or(s, |a| a.max(s))));
    best.into_iter()
        .map(|(k, b)| (k.clone(), reference.zip(b).map(|(r, b)| r - b)))
        .collect()
}

/// Mean after dropping the `ceil(fraction * n)` largest and smallest values.
pub fn trimmed_mean(values: &[f64], fraction: f64) -> Option<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let cut = (fraction * v.len() as f64).ceil() as usize;
    let kept = v.get(cut..v.len().saturating_sub(cut)).filter(|k| !k.is_empty())?;
    Some(kept.iter().sum::<f64>() / kept.len() as f64)
}

/// Quantile `q` of `values` with linear interpolation between order statistics.
pub fn quantile(values: &[f64], q: f64) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let h = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    Some(v[lo] + (h - lo as f64) * (v[hi] - v[lo]))
}

pub fn median(values: &[f64]) -> Option<f64> {
    quantile(values, 0.5)
}

/// Ranks with 1 for the highest score; tied scores share the average of their
/// ranks. Missing scores rank below every present one.
pub fn average_ranks(scores: &[Option<f64>]) -> Vec<f64> {
    let key = |s: Option<f64>| s.unwrap_or(f64::NEG_INFINITY);
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| key(scores[b]).total_cmp(&key(scores[a])));
    let mut ranks = vec![0.0; scores.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && key(scores[order[j + 1]]) == key(scores[order[i]]) {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = rank;
        }
        i = j + 1;
    }
    ranks
}

/// Per-dataset traces of each optimizer: dataset -> optimizer -> trace.
pub type TracesByDataset = BTreeMap<String, BTreeMap<String, Vec<TracePoint>>>;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankSeries {
    pub optimizers: Vec<String>,
    pub grid: Vec<f64>,
    /// dataset -> grid point -> rank per optimizer.
    pub per_dataset: BTreeMap<String, Vec<Vec<f64>>>,
    /// grid point -> statistic per optimizer, across datasets.
    pub median: Vec<Vec<f64>>,
    pub q25: Vec<Vec<f64>>,
    pub q75: Vec<Vec<f64>>,
}

fn optimizer_names(traces: &TracesByDataset) -> Vec<String> {
    let mut names: Vec<String> = traces.values().flat_map(|m| m.keys().cloned()).collect();
    names.sort();
    names.dedup();
    names
}

/// Ranks of the optimizers by best score so far at every grid point and
/// dataset, summarized by median and quartiles across datasets.
pub fn rank_over_time(traces: &TracesByDataset, grid: &[f64]) -> RankSeries {
    let optimizers = optimizer_names(traces);
    let per_dataset: BTreeMap<String, Vec<Vec<f64>>> = traces
        .iter()
        .map(|(dataset, by_opt)| {
            let series = grid
                .iter()
                .map(|&t| {
                    let scores: Vec<Option<f64>> = optimizers
                        .iter()
                        .map(|o| by_opt.get(o).and_then(|tr| best_so_far(tr, t)))
                        .collect();
                    average_ranks(&scores)
                })
                .collect();
            (dataset.clone(), series)
        })
        .collect();
    let stat = |q: f64| -> Vec<Vec<f64>> {
        (0..grid.len())
            .map(|g| {
                (0..optimizers.len())
                    .map(|o| {
                        let ranks: Vec<f64> = per_dataset.values().map(|s| s[g][o]).collect();
                        quantile(&ranks, q).unwrap_or(f64::NAN)
                    })
                    .collect()
            })
            .collect()
    };
    RankSeries {
        median: stat(0.5),
        q25: stat(0.25),
        q75: stat(0.75),
        optimizers,
        grid: grid.to_vec(),
        per_dataset,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct WinCount {
    pub wins_a: usize,
    pub wins_b: usize,
    pub ties: usize,
}

/// Per grid point, the number of datasets on which A's best score so far is
/// higher than, lower than or equal to B's. A missing score loses to any
/// present one.
pub fn win_counts(pairs: &[(Vec<TracePoint>, Vec<TracePoint>)], grid: &[f64]) -> Vec<WinCount> {
    grid.iter()
        .map(|&t| {
            let mut c = WinCount::default();
            for (a, b) in pairs {
                let (sa, sb) = (best_so_far(a, t), best_so_far(b, t));
                let key = |s: Option<f64>| s.unwrap_or(f64::NEG_INFINITY);
                match key(sa).total_cmp(&key(sb)) {
                    std::cmp::Ordering::Greater => c.wins_a += 1,
                    std::cmp::Ordering::Less => c.wins_b += 1,
                    std::cmp::Ordering::Equal => c.ties += 1,
                }
            }
            c
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FinalGaps {
    /// (dataset, median final score, gap) per dataset.
    pub per_dataset: Vec<(String, f64, f64)>,
    pub median: f64,
    pub q90: f64,
    pub max: f64,
}

/// Final scores grouped as dataset -> optimizer -> scores over seeds.
pub type FinalScores = BTreeMap<String, BTreeMap<String, Vec<f64>>>;

/// Per dataset, each optimizer's median final score across seeds and its gap
/// to the best median; then median, 90% quantile and maximum of the gaps per
/// optimizer across datasets.
pub fn final_gap_distribution(scores: &FinalScores) -> BTreeMap<String, FinalGaps> {
    let mut gaps: BTreeMap<String, Vec<(String, f64, f64)>> = BTreeMap::new();
    for (dataset, by_opt) in scores {
        let medians: Vec<(&String, f64)> = by_opt
            .iter()
            .filter_map(|(o, s)| median(s).map(|m| (o, m)))
            .collect();
        let Some(best) = medians.iter().map(|(_, m)| *m).reduce(f64::max) else {
            continue;
        };
        for (o, m) in medians {
            gaps.entry(o.clone()).or_default().push((dataset.clone(), m, best - m));
        }
    }
    gaps.into_iter()
        .map(|(o, per_dataset)| {
            let g: Vec<f64> = per_dataset.iter().map(|x| x.2).collect();
            let summary = FinalGaps {
                median: quantile(&g, 0.5).unwrap_or(f64::NAN),
                q90: quantile(&g, 0.9).unwrap_or(f64::NAN),
                max: g.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                per_dataset,
            };
            (o, summary)
        })
        .collect()
}

/// Per run: gap between the best final test score among optimizers on the
/// same (dataset, seed) and the run's own. Input maps (dataset, seed) ->
/// optimizer -> final test score.
pub fn per_run_test_gaps(
    scores: &BTreeMap<(String, u64), BTreeMap<String, f64>>,
) -> BTreeMap<(String, u64), BTreeMap<String, f64>> {
    scores
        .iter()
        .map(|(key, by_opt)| {
            let best = by_opt.values().copied().fold(f64::NEG_INFINITY, f64::max);
            (key.clone(), by_opt.iter().map(|(o, &s)| (o.clone(), best - s)).collect())
        })
        .collect()
}

/// `n` logarithmically spaced points from `lo` to `hi` (both positive).
pub fn log_time_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 0 || !(lo > 0.0 && hi >= lo) {
        return Vec::new();
    }
    if n == 1 || hi == lo {
        return vec![hi];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| match i {
            0 => lo,
            i if i == n - 1 => hi,
            i => (a + (b - a) * i as f64 / (n - 1) as f64).exp(),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn trace(points: &[(f64, f64)]) -> Vec<TracePoint> {
        points.iter().map(|&(t, s)| TracePoint::new(t, s)).collect()
    }

    #[test]
    fn best_so_far_steps() {
        let tr = trace(&[(1.0, 0.5), (2.0, 0.7), (4.0, 0.8)]);
        assert_eq!(best_so_far(&tr, 0.5), None);
        assert_eq!(best_so_far(&tr, 10.0), Some(0.8));
        assert_eq!(best_so_far(&tr, 3.0), Some(0.7));
    }

    #[test]
    fn gap_examples() {
        let single = BTreeMap::from([("a".to_string(), trace(&[(1.0, 0.3)]))]);
        assert_eq!(empirical_gap(&single, 2.0)["a"], Some(0.0));
        let two = BTreeMap::from([
            ("a".to_string(), trace(&[(1.0, 0.9)])),
            ("b".to_string(), trace(&[(1.0, 0.84)])),
            ("c".to_string(), trace(&[(5.0, 0.95)])),
        ]);
        let g = empirical_gap(&two, 2.0);
        assert_eq!(g["a"], Some(0.0));
        assert!((g["b"].unwrap() - 0.06).abs() < 1e-12);
        assert_eq!(g["c"], None);
    }

    #[test]
    fn rank_ties() {
        assert_eq!(average_ranks(&[Some(0.9), Some(0.8)]), vec![1.0, 2.0]);
        assert_eq!(average_ranks(&[Some(0.9), Some(0.9)]), vec![1.5, 1.5]);
        assert_eq!(average_ranks(&[Some(0.9), Some(0.9), Some(0.7)]), vec![1.5, 1.5, 3.0]);
        assert_eq!(average_ranks(&[None, Some(0.1), None]), vec![2.5, 1.0, 2.5]);
    }

    #[test]
    fn quantiles_interpolate() {
        assert_eq!(quantile(&[3.0], 0.9), Some(3.0));
        assert_eq!(quantile(&[1.0, 2.0, 3.0, 4.0], 0.5), Some(2.5));
        assert_eq!(quantile(&[0.0, 10.0], 0.9), Some(9.0));
        assert_eq!(quantile(&[], 0.5), None);
    }

    #[test]
    fn trimmed_mean_drops_tails() {
        let v: Vec<f64> = (1..=10).map(f64::from).collect();
        assert_eq!(trimmed_mean(&v, 0.1), Some(5.5));
        assert_eq!(trimmed_mean(&[1.0, 2.0, 100.0], 0.1), Some(2.0));
        assert_eq!(trimmed_mean(&[1.0], 0.1), None);
    }

    #[test]
    fn final_gaps_example() {
        let scores = FinalScores::from([(
            "d".to_string(),
            BTreeMap::from([
                ("a".to_string(), vec![0.90]),
                ("b".to_string(), vec![0.88]),
                ("c".to_string(), vec![0.90]),
            ]),
        )]);
        let g = final_gap_distribution(&scores);
        assert_eq!(g["a"].per_dataset[0].2, 0.0);
        assert!((g["b"].per_dataset[0].2 - 0.02).abs() < 1e-12);
        assert_eq!(g["c"].per_dataset[0].2, 0.0);
    }

    #[test]
    fn grid_endpoints() {
        let g = log_time_grid(0.1, 100.0, 4);
        assert_eq!(g.len(), 4);
        assert_eq!((g[0], g[3]), (0.1, 100.0));
        assert!((g[1] - 1.0).abs() < 1e-12 && (g[2] - 10.0).abs() < 1e-9);
    }

    fn arb_trace() -> impl Strategy<Value = Vec<TracePoint>> {
        proptest::collection::vec((0.0f64..10.0, -1.0f64..1.0), 0..6)
            .prop_map(|v| v.into_iter().map(|(t, s)| TracePoint::new(t, s)).collect())
    }

    proptest! {
        #[test]
        fn gaps_nonnegative_with_a_zero(traces in proptest::collection::vec(arb_trace(), 1..5), t in 0.0f64..12.0) {
            let m: BTreeMap<String, Vec<TracePoint>> =
                traces.into_iter().enumerate().map(|(i, tr)| (format!("o{i}"), tr)).collect();
            let g = empirical_gap(&m, t);
            let present: Vec<f64> = g.values().flatten().copied().collect();
            prop_assert!(present.iter().all(|&x| x >= 0.0));
            if !present.is_empty() {
                prop_assert!(present.contains(&0.0));
            }
        }

        #[test]
        fn ranks_sum_to_triangle(scores in proptest::collection::vec(proptest::option::of(prop_oneof![Just(0.5), Just(0.7), -1.0f64..1.0]), 1..8)) {
            let n = scores.len() as f64;
            let sum: f64 = average_ranks(&scores).iter().sum();
            prop_assert!((sum - n * (n + 1.0) / 2.0).abs() < 1e-9);
        }

        #[test]
        fn win_counts_cover_all_datasets(pairs in proptest::collection::vec((arb_trace(), arb_trace()), 0..6)) {
            let grid = log_time_grid(0.01, 10.0, 20);
            for c in win_counts(&pairs, &grid) {
                prop_assert_eq!(c.wins_a + c.wins_b + c.ties, pairs.len());
            }
        }
    }
}
