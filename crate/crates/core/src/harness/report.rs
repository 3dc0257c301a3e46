use std::collections::BTreeMap;
use std::path::Path;

use super::analysis::{
    average_ranks, best_so_far, empirical_gap, final_gap_distribution, log_time_grid, median, per_run_test_gaps,
    quantile, trimmed_mean, win_counts, FinalScores, TracePoint,
};
use super::{HarnessError, RunRecord};

const GRID_POINTS: usize = 200;
const TRIM: f64 = 0.1;

/// Plot-ready csv reports over a directory of run records.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Report {
    /// Mean, trimmed mean and median validation gap per optimizer over time.
    Gaps,
    /// Median and quartiles of per-dataset ranks over time.
    Ranks,
    /// Pairwise dataset win counts over time.
    Wins,
    /// Final test-score gaps of per-dataset medians.
    Final,
    /// Final test-score gap of every run to the best run on its (dataset, seed).
    TestGaps,
}

impl std::str::FromStr for Report {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "gaps" => Ok(Report::Gaps),
            "ranks" => Ok(Report::Ranks),
            "wins" => Ok(Report::Wins),
            "final" => Ok(Report::Final),
            "test-gaps" => Ok(Report::TestGaps),
            other => Err(format!("unknown report `{other}` (expected gaps, ranks, wins, final or test-gaps)")),
        }
    }
}

/// Reads every `runs/*.json` record below `dir`, sorted by run id.
pub fn load_records(dir: &Path) -> Result<Vec<RunRecord>, HarnessError> {
    let runs = dir.join("runs");
    let entries = std::fs::read_dir(&runs).map_err(HarnessError::io(&runs))?;
    let mut records = Vec::new();
    for entry in entries {
        let path = entry.map_err(HarnessError::io(&runs))?.path();
        if path.extension().is_some_and(|e| e == "json") {
            let text = std::fs::read_to_string(&path).map_err(HarnessError::io(&path))?;
            let record: RunRecord = serde_json::from_str(&text).map_err(|e| HarnessError::Parse {
                path: path.clone(),
                message: e.to_string(),
            })?;
            records.push(record);
        }
    }
    records.sort_by(|a, b| a.run_id.cmp(&b.run_id));
    Ok(records)
}

fn points(record: &RunRecord) -> Vec<TracePoint> {
    record
        .events
        .iter()
        .map(|e| TracePoint::new(e.elapsed.as_secs_f64(), e.oriented_score))
        .collect()
}

fn grid(records: &[RunRecord]) -> Vec<f64> {
    let times: Vec<f64> = records.iter().flat_map(points).map(|p| p.elapsed).collect();
    let hi = times.iter().copied().fold(0.0, f64::max);
    match times.iter().copied().filter(|&t| t > 0.0).reduce(f64::min) {
        Some(lo) => log_time_grid(lo, hi, GRID_POINTS),
        None if times.is_empty() => Vec::new(),
        None => vec![0.0],
    }
}

/// Median over seeds of the best score so far, as a step function over the
/// union of event times. Seeds without a candidate count as lowest.
fn median_trace(traces: &[Vec<TracePoint>]) -> Vec<TracePoint> {
    let mut times: Vec<f64> = traces.iter().flatten().map(|p| p.elapsed).collect();
    times.sort_by(f64::total_cmp);
    times.dedup();
    times
        .into_iter()
        .filter_map(|t| {
            let mut v: Vec<f64> = traces
                .iter()
                .map(|tr| best_so_far(tr, t).unwrap_or(f64::NEG_INFINITY))
                .collect();
            v.sort_by(f64::total_cmp);
            let n = v.len();
            let m = if n % 2 == 1 { v[n / 2] } else { (v[n / 2 - 1] + v[n / 2]) / 2.0 };
            m.is_finite().then_some(TracePoint::new(t, m))
        })
        .collect()
}

/// dataset -> optimizer -> median-over-seeds trace.
fn dataset_traces(records: &[RunRecord]) -> BTreeMap<String, BTreeMap<String, Vec<TracePoint>>> {
    let mut grouped: BTreeMap<String, BTreeMap<String, Vec<Vec<TracePoint>>>> = BTreeMap::new();
    for r in records {
        grouped
            .entry(r.dataset.clone())
            .or_default()
            .entry(r.optimizer.to_string())
            .or_default()
            .push(points(r));
    }
    grouped
        .into_iter()
        .map(|(d, by_opt)| (d, by_opt.into_iter().map(|(o, tr)| (o, median_trace(&tr))).collect()))
        .collect()
}

fn optimizers(records: &[RunRecord]) -> Vec<String> {
    let mut names: Vec<String> = records.iter().map(|r| r.optimizer.to_string()).collect();
    names.sort();
    names.dedup();
    names
}

fn csv_text(header: &[&str], rows: Vec<Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(&row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv")
}

fn num(x: f64) -> String {
    if x.is_finite() {
        x.to_string()
    } else {
        String::new()
    }
}

fn opt_num(x: Option<f64>) -> String {
    x.map_or_else(String::new, num)
}

/// Renders `report` as csv text.
pub fn render_report(records: &[RunRecord], report: Report) -> String {
    match report {
        Report::Gaps => gaps(records),
        Report::Ranks => ranks(records),
        Report::Wins => wins(records),
        Report::Final => final_gaps(records),
        Report::TestGaps => test_gaps(records),
    }
}

fn gaps(records: &[RunRecord]) -> String {
    let mut groups: BTreeMap<(&str, u64), BTreeMap<String, Vec<TracePoint>>> = BTreeMap::new();
    for r in records {
        groups.entry((&r.dataset, r.seed)).or_default().insert(r.optimizer.to_string(), points(r));
    }
    let names = optimizers(records);
    let mut rows = Vec::new();
    for t in grid(records) {
        let mut per_opt: BTreeMap<&str, (Vec<f64>, usize)> = BTreeMap::new();
        for traces in groups.values() {
            let g = empirical_gap(traces, t);
            for name in &names {
                let entry = per_opt.entry(name).or_default();
                match g.get(name).copied().flatten() {
                    Some(x) => entry.0.push(x),
                    None => entry.1 += 1,
                }
            }
        }
        for (name, (values, missing)) in per_opt {
            let mean = (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64);
            rows.push(vec![
                num(t),
                name.to_string(),
                values.len().to_string(),
                missing.to_string(),
                opt_num(mean),
                opt_num(trimmed_mean(&values, TRIM)),
                opt_num(median(&values)),
            ]);
        }
    }
    csv_text(
        &["time_s", "optimizer", "runs", "no_candidate", "mean_gap", "trimmed_mean_gap", "median_gap"],
        rows,
    )
}

fn ranks(records: &[RunRecord]) -> String {
    let traces = dataset_traces(records);
    let names = optimizers(records);
    let mut rows = Vec::new();
    for t in grid(records) {
        let per_dataset: Vec<Vec<f64>> = traces
            .values()
            .map(|by_opt| {
                let scores: Vec<Option<f64>> =
                    names.iter().map(|o| by_opt.get(o).and_then(|tr| best_so_far(tr, t))).collect();
                average_ranks(&scores)
            })
            .collect();
        for (i, name) in names.iter().enumerate() {
            let r: Vec<f64> = per_dataset.iter().map(|v| v[i]).collect();
            rows.push(vec![
                num(t),
                name.clone(),
                opt_num(quantile(&r, 0.5)),
                opt_num(quantile(&r, 0.25)),
                opt_num(quantile(&r, 0.75)),
            ]);
        }
    }
    csv_text(&["time_s", "optimizer", "median_rank", "q25_rank", "q75_rank"], rows)
}

fn wins(records: &[RunRecord]) -> String {
    let traces = dataset_traces(records);
    let names = optimizers(records);
    let grid = grid(records);
    let mut rows = Vec::new();
    for (i, a) in names.iter().enumerate() {
        for b in &names[i + 1..] {
            let pairs: Vec<(Vec<TracePoint>, Vec<TracePoint>)> = traces
                .values()
                .filter(|m| m.contains_key(a) && m.contains_key(b))
                .map(|m| (m[a].clone(), m[b].clone()))
                .collect();
            for (t, c) in grid.iter().zip(win_counts(&pairs, &grid)) {
                rows.push(vec![
                    num(*t),
                    a.clone(),
                    b.clone(),
                    c.wins_a.to_string(),
                    c.wins_b.to_string(),
                    c.ties.to_string(),
                ]);
            }
        }
    }
    csv_text(&["time_s", "optimizer_a", "optimizer_b", "wins_a", "wins_b", "ties"], rows)
}

fn final_gaps(records: &[RunRecord]) -> String {
    let mut scores = FinalScores::new();
    for r in records {
        if let Some(s) = r.final_test_score {
            scores
                .entry(r.dataset.clone())
                .or_default()
                .entry(r.optimizer.to_string())
                .or_default()
                .push(s);
        }
    }
    let mut rows = Vec::new();
    for (optimizer, g) in final_gap_distribution(&scores) {
        for (dataset, median_score, gap) in &g.per_dataset {
            rows.push(vec![
                optimizer.clone(),
                dataset.clone(),
                num(*median_score),
                num(*gap),
                num(g.median),
                num(g.q90),
                num(g.max),
            ]);
        }
    }
    csv_text(
        &["optimizer", "dataset", "median_test_score", "gap", "gap_median", "gap_q90", "gap_max"],
        rows,
    )
}

fn test_gaps(records: &[RunRecord]) -> String {
    let mut scores: BTreeMap<(String, u64), BTreeMap<String, f64>> = BTreeMap::new();
    for r in records {
        if let Some(s) = r.final_test_score {
            scores.entry((r.dataset.clone(), r.seed)).or_default().insert(r.optimizer.to_string(), s);
        }
    }
    let gaps = per_run_test_gaps(&scores);
    let mut rows = Vec::new();
    for ((dataset, seed), by_opt) in &gaps {
        for (optimizer, gap) in by_opt {
            rows.push(vec![
                dataset.clone(),
                seed.to_string(),
                optimizer.clone(),
                num(scores[&(dataset.clone(), *seed)][optimizer]),
                num(*gap),
            ]);
        }
    }
    csv_text(&["dataset", "seed", "optimizer", "test_score", "gap"], rows)
}
