//! Acceptance suite: one PASS/FAIL line per criterion.

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use naiveml::components::{builtin_catalog, BERNOULLI_NB, STANDARD_SCALER};
use naiveml::evaluation::{
    auroc, kfold_splits, log_loss, DatasetEvaluator, EvalResult, EvalStatus, Evaluator, Metric, StepClock,
    SystemClock, ValidationSpec,
};
use naiveml::harness::analysis::{
    average_ranks, empirical_gap, final_gap_distribution, rank_over_time, win_counts, FinalScores, TracePoint,
    TracesByDataset,
};
use naiveml::harness::{
    load_csv, outer_split, read_trace, run_benchmark, BenchmarkConfig, Problem, RunRecord,
};
use naiveml::optimizers::{
    brute_force, default_permutation, fit_probe, naivety_violation, repair, Budget, BruteForceOptions, Optimizer,
    OptimizerKind, RandomSearch, RepairError, SlotwiseSearch, TraceEvent,
};
use naiveml::space::{Catalog, Params, Pipeline, SlotAssignment};
use naiveml::surrogate::{make_surface, worked_fixture, SurfaceConfig, SurrogateSurface};
use naiveml::{Dataset, SlotRole};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(ok: bool, message: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(message())
    }
}

fn ids(p: &Pipeline) -> Vec<Option<String>> {
    p.ids().into_iter().map(|i| i.map(str::to_string)).collect()
}

fn bundled(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/data").join(name)
}

fn drain<O: Optimizer>(mut o: O) -> (Vec<TraceEvent>, O) {
    let events: Vec<_> = o.by_ref().collect();
    (events, o)
}

fn strictly_increasing(events: &[TraceEvent]) -> bool {
    events.windows(2).all(|w| w[0].oriented_score < w[1].oriented_score)
}

fn oracle_equivalence() -> Outcome {
    let started = Instant::now();
    let clock = SystemClock::new();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut agree = 0;
    for case in 0..50u64 {
        let slots = rng.gen_range(2..=4);
        let sizes: Vec<usize> = (0..slots).map(|_| rng.gen_range(2..=5)).collect();
        let (catalog, surface) = make_surface(&SurfaceConfig::parameterless(sizes, 0.0, case)).map_err(|e| e.to_string())?;
        let (best, _, _) = brute_force(&catalog, &surface).map_err(|e| e.to_string())?;
        let (_, naive) = drain(SlotwiseSearch::naive(
            &catalog,
            &surface,
            Budget::evaluations(1_000_000),
            rng.gen(),
            &clock,
        ));
        if ids(&naive.incumbent()) == ids(&best) {
            agree += 1;
        }
    }
    let elapsed = started.elapsed();
    ensure(agree == 50, || format!("{agree}/50 agree"))?;
    ensure(elapsed < Duration::from_secs(5), || format!("took {elapsed:?}"))?;
    Ok(format!("50/50 agree in {:.2} s", elapsed.as_secs_f64()))
}

fn naivety_failure_fixture() -> Outcome {
    let (catalog, surface) = worked_fixture();
    let clock = SystemClock::new();
    let budget = Budget::evaluations(1000);
    let (_, naive) = drain(SlotwiseSearch::naive(&catalog, &surface, budget, 0, &clock));
    let sigma = default_permutation(&catalog);
    let (_, quasi) = drain(SlotwiseSearch::quasi(&catalog, &sigma, &surface, budget, 0, &clock).map_err(|e| e.to_string())?);
    let naive_value = surface.score(&naive.incumbent()).map_err(|e| e.to_string())?;
    let quasi_value = surface.score(&quasi.incumbent()).map_err(|e| e.to_string())?;
    let (_, brute_value, _) = brute_force(&catalog, &surface).map_err(|e| e.to_string())?;
    let report = naivety_violation(&catalog, &surface, &BruteForceOptions::default()).map_err(|e| e.to_string())?;
    let predictor_flagged = report
        .iter()
        .any(|r| r.role == SlotRole::Predictor && r.violated);
    ensure(naive_value == 0.65, || format!("naive {naive_value}"))?;
    ensure(quasi_value == 0.70, || format!("quasi-naive {quasi_value}"))?;
    ensure(brute_value == 0.90, || format!("brute force {brute_value}"))?;
    ensure(predictor_flagged, || "predictor slot not flagged".into())?;
    Ok(format!(
        "naive {naive_value}, quasi-naive {quasi_value}, brute force {brute_value}, predictor slot violated"
    ))
}

fn pairwise_auc(labels: &[usize], scores: &[f64]) -> f64 {
    let mut wins = 0.0;
    let mut pairs = 0.0;
    for (i, &li) in labels.iter().enumerate() {
        for (j, &lj) in labels.iter().enumerate() {
            if li == 1 && lj == 0 {
                pairs += 1.0;
                if scores[i] > scores[j] {
                    wins += 1.0;
                } else if scores[i] == scores[j] {
                    wins += 0.5;
                }
            }
        }
    }
    wins / pairs
}

fn metric_oracles() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut worst_auc = 0.0f64;
    for _ in 0..1000 {
        let n = rng.gen_range(2..40);
        let mut labels: Vec<usize> = (0..n).map(|_| rng.gen_range(0..2)).collect();
        labels[0] = 0;
        labels[1] = 1;
        let levels = rng.gen_range(2..12);
        let scores: Vec<f64> = (0..n).map(|_| f64::from(rng.gen_range(0..levels)) / 7.0).collect();
        let got = auroc(&labels, &scores).map_err(|e| e.to_string())?;
        worst_auc = worst_auc.max((got - pairwise_auc(&labels, &scores)).abs());
    }
    let mut worst_ll = 0.0f64;
    for _ in 0..1000 {
        let n = rng.gen_range(1..30);
        let k = rng.gen_range(2..5);
        let mut probs = Array2::<f64>::zeros((n, k));
        for mut row in probs.rows_mut() {
            row.iter_mut().for_each(|v| *v = if rng.gen_bool(0.1) { 0.0 } else { rng.gen::<f64>() });
            let s: f64 = row.sum();
            if s == 0.0 {
                row[0] = 1.0;
            } else {
                row.iter_mut().for_each(|v| *v /= s);
            }
        }
        let labels: Vec<usize> = (0..n).map(|_| rng.gen_range(0..k)).collect();
        let direct = labels
            .iter()
            .enumerate()
            .map(|(i, &l)| -probs[[i, l]].max(1e-15).ln())
            .sum::<f64>()
            / n as f64;
        let got = log_loss(&labels, probs.view()).map_err(|e| e.to_string())?;
        worst_ll = worst_ll.max((got - direct).abs());
    }
    ensure(worst_auc <= 1e-9 && worst_ll <= 1e-9, || format!("max |d| auroc {worst_auc:e}, log_loss {worst_ll:e}"))?;
    Ok(format!("max |d| auroc {worst_auc:e}, log_loss {worst_ll:e} over 1000 instances each"))
}

fn tunable(seed: u64) -> (Catalog, SurrogateSurface) {
    make_surface(&SurfaceConfig {
        slot_sizes: vec![3, 2, 4],
        interaction_scale: 0.4,
        amplitude: (0.1, 0.6),
        params_per_candidate: 2,
        noise_sd: 0.0,
        seed,
    })
    .expect("valid surface")
}

fn strip_elapsed(text: &str) -> String {
    let key = "\"elapsed_ms\":";
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    while let Some(i) = rest.find(key) {
        out.push_str(&rest[..i + key.len()]);
        rest = rest[i + key.len()..].trim_start_matches(|c: char| c.is_ascii_digit());
    }
    out.push_str(rest);
    out
}

fn trace_files(dir: &Path) -> BTreeMap<String, String> {
    std::fs::read_dir(dir.join("traces"))
        .expect("trace dir")
        .map(|e| {
            let p = e.expect("entry").path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read_to_string(&p).expect("trace"))
        })
        .collect()
}

fn structural_suite() -> Outcome {
    let clock = SystemClock::new();
    let mut checked_counts = 0;
    for seed in 0..20 {
        let sizes = vec![1 + seed as usize % 4, 2 + seed as usize % 3, 3];
        let (catalog, surface) = make_surface(&SurfaceConfig::parameterless(sizes.clone(), 0.5, seed)).map_err(|e| e.to_string())?;
        let calls = Mutex::new(0usize);
        let counting = |p: &Pipeline| {
            *calls.lock().unwrap() += 1;
            surface.evaluate(p)
        };
        let (_, o) = drain(SlotwiseSearch::naive(&catalog, &counting, Budget::evaluations(1_000_000), seed, &clock));
        let total: usize = sizes.iter().sum();
        let calls = *calls.lock().unwrap();
        ensure(o.phase_one_evaluations() == total as u64 && calls == total, || {
            format!("sizes {sizes:?}: phase one {} evaluations, {calls} calls", o.phase_one_evaluations())
        })?;
        checked_counts += 1;
    }

    let mut runs = 0;
    for seed in 0..30 {
        let (catalog, surface) = tunable(seed);
        let budget = Budget::evaluations(120);
        let sigma = default_permutation(&catalog);
        let streams = [
            drain(SlotwiseSearch::naive(&catalog, &surface, budget, seed, &clock)).0,
            drain(SlotwiseSearch::quasi(&catalog, &sigma, &surface, budget, seed, &clock).unwrap()).0,
            drain(RandomSearch::new(&catalog, &surface, budget, seed, &clock)).0,
        ];
        for s in &streams {
            ensure(strictly_increasing(s), || format!("seed {seed}: non-increasing stream"))?;
            runs += 1;
        }
    }

    let (catalog, surface) = tunable(7);
    let config = |dir: &Path| {
        let mut c = BenchmarkConfig::new(
            catalog.clone(),
            vec![Problem::Surrogate {
                id: "surface".into(),
                surface: surface.clone(),
            }],
            dir,
        );
        c.optimizers = vec![OptimizerKind::Naive, OptimizerKind::QuasiNaive, OptimizerKind::Random, OptimizerKind::BruteForce];
        c.seeds = vec![0, 1, 2];
        c.budget = Budget::evaluations(60);
        c
    };
    let a = tempfile::tempdir().map_err(|e| e.to_string())?;
    let b = tempfile::tempdir().map_err(|e| e.to_string())?;
    run_benchmark(&config(a.path())).map_err(|e| e.to_string())?;
    run_benchmark(&config(b.path())).map_err(|e| e.to_string())?;
    let (ta, tb) = (trace_files(a.path()), trace_files(b.path()));
    ensure(ta.len() == 12 && ta.keys().eq(tb.keys()), || "trace file sets differ".into())?;
    for (name, text) in &ta {
        ensure(!text.is_empty(), || format!("{name} is empty"))?;
        ensure(strip_elapsed(text) == strip_elapsed(&tb[name]), || format!("{name} differs"))?;
    }
    Ok(format!(
        "phase-one counts exact on {checked_counts} catalogs, {runs} streams strictly increasing, {} trace files identical modulo elapsed_ms",
        ta.len()
    ))
}

fn unit_interval_data() -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let n = 40;
    let features = Array2::from_shape_fn((n, 3), |_| rng.gen::<f64>());
    let labels = (0..n).map(|i| i % 2).collect();
    Dataset::new(features, labels, 2, vec!["a".into(), "b".into(), "c".into()]).expect("dataset")
}

fn repair_fidelity() -> Outcome {
    let catalog = builtin_catalog();
    let data = unit_interval_data();
    let pipeline = Pipeline::new(vec![
        SlotAssignment::component(STANDARD_SCALER, Params::Defaults),
        SlotAssignment::Blank,
        SlotAssignment::component(BERNOULLI_NB, Params::Defaults),
    ]);
    let k = pipeline.slots[..2].iter().filter(|a| a.id().is_some()).count();
    let mut probe = fit_probe(&catalog, &data);
    ensure(!probe(&pipeline), || "fixture pipeline unexpectedly fits".into())?;
    let mut calls = 0;
    let mut counted = |p: &Pipeline| {
        calls += 1;
        probe(p)
    };
    let repaired = repair(&pipeline, &catalog, &mut counted).map_err(|e| e.to_string())?;
    let expected = vec![None, None, Some(BERNOULLI_NB.to_string())];
    ensure(ids(&repaired.pipeline) == expected && repaired.removed == vec![0], || {
        format!("repaired to {} removing {:?}", repaired.pipeline, repaired.removed)
    })?;
    ensure(calls <= k + 1, || format!("{calls} probe calls for k = {k}"))?;
    let exhausted = repair(&pipeline, &catalog, |_| false);
    ensure(matches!(exhausted, Err(RepairError::Exhausted { .. })), || format!("all-failing probe gave {exhausted:?}"))?;
    Ok(format!("removed slot 0 only, {calls} probe calls (k = {k}), all-failing probe exhausted"))
}

fn validation_protocol() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for case in 0..200u64 {
        let n = rng.gen_range(10..120);
        let classes = rng.gen_range(2..5);
        let labels: Vec<usize> = (0..n).map(|i| if i < classes { i } else { rng.gen_range(0..classes) }).collect();
        let splits = kfold_splits(n, 5, &labels, case).map_err(|e| e.to_string())?;
        let mut seen = vec![0; n];
        for s in &splits {
            for &i in &s.test {
                seen[i] += 1;
            }
            let mut all: Vec<usize> = s.train.iter().chain(&s.test).copied().collect();
            all.sort_unstable();
            ensure(all == (0..n).collect::<Vec<_>>(), || format!("case {case}: train/test not a partition"))?;
        }
        ensure(seen.iter().all(|&c| c == 1), || format!("case {case}: test folds not disjoint and covering"))?;
        for c in 0..classes {
            let per_fold: Vec<usize> = splits.iter().map(|s| s.test.iter().filter(|&&i| labels[i] == c).count()).collect();
            let (lo, hi) = (per_fold.iter().min().unwrap(), per_fold.iter().max().unwrap());
            ensure(hi - lo <= 1, || format!("case {case}: class {c} fold counts {per_fold:?}"))?;
        }
    }

    let features = Array2::from_shape_fn((100, 1), |(r, _)| r as f64);
    let labels: Vec<usize> = (0..100).map(|i| usize::from(i % 3 == 0)).collect();
    let d = Dataset::new(features, labels, 2, vec!["x".into()]).map_err(|e| e.to_string())?;
    for seed in 0..10 {
        let (_, train, test) = outer_split(&d, 0.9, seed).map_err(|e| e.to_string())?;
        ensure(train.len() == 90 && test.len() == 10, || format!("seed {seed}: {}/{}", train.len(), test.len()))?;
    }

    let data = load_csv(&bundled("synthetic.csv"), "class").map_err(|e| e.to_string())?;
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut config = BenchmarkConfig::new(builtin_catalog(), vec![Problem::Dataset { id: "synthetic".into(), data }], dir.path());
    config.optimizers = vec![OptimizerKind::Naive, OptimizerKind::QuasiNaive, OptimizerKind::Random];
    config.seeds = vec![0, 1];
    config.budget = Budget::evaluations(3);
    config.metric = Metric::ErrorRate;
    let records = run_benchmark(&config).map_err(|e| e.to_string())?;
    for seed in [0, 1] {
        let splits: Vec<String> = records
            .iter()
            .filter(|r| r.seed == seed)
            .map(|r| serde_json::to_string(&(&r.train_indices, &r.test_indices)).unwrap())
            .collect();
        ensure(splits.len() == 3 && splits.iter().all(|s| s == &splits[0]), || format!("seed {seed}: splits differ"))?;
    }
    Ok("200 random 5-fold cases, 90/10 on n = 100, per-seed splits shared by 3 optimizers".into())
}

fn toy(points: &[(f64, f64)]) -> Vec<TracePoint> {
    points.iter().map(|&(t, s)| TracePoint::new(t, s)).collect()
}

fn analysis_fixtures() -> Outcome {
    let traces = BTreeMap::from([
        ("a".to_string(), toy(&[(1.0, 0.5), (4.0, 0.875)])),
        ("b".to_string(), toy(&[(2.0, 0.75)])),
        ("c".to_string(), toy(&[(8.0, 1.0)])),
    ]);
    let at = |t: f64| empirical_gap(&traces, t);
    let expect_gaps = [
        (0.5, [None, None, None]),
        (1.0, [Some(0.0), None, None]),
        (3.0, [Some(0.25), Some(0.0), None]),
        (5.0, [Some(0.0), Some(0.125), None]),
        (9.0, [Some(0.125), Some(0.25), Some(0.0)]),
    ];
    for (t, want) in expect_gaps {
        let got: Vec<Option<f64>> = at(t).into_values().collect();
        ensure(got == want, || format!("gap at {t}: {got:?}"))?;
    }

    ensure(average_ranks(&[Some(0.9), Some(0.8)]) == [1.0, 2.0], || "ranks 0.9/0.8".into())?;
    ensure(average_ranks(&[Some(0.9), Some(0.9)]) == [1.5, 1.5], || "ranks tie".into())?;
    ensure(average_ranks(&[Some(0.9), Some(0.9), Some(0.7)]) == [1.5, 1.5, 3.0], || "ranks 0.9/0.9/0.7".into())?;
    let by_dataset: TracesByDataset = BTreeMap::from([
        ("d1".to_string(), BTreeMap::from([("x".to_string(), toy(&[(1.0, 0.9)])), ("y".to_string(), toy(&[(1.0, 0.9)])), ("z".to_string(), toy(&[(1.0, 0.7)]))])),
        ("d2".to_string(), BTreeMap::from([("x".to_string(), toy(&[(1.0, 0.5)])), ("y".to_string(), toy(&[(2.0, 0.75)])), ("z".to_string(), toy(&[(1.0, 0.25)]))])),
        ("d3".to_string(), BTreeMap::from([("x".to_string(), toy(&[(1.0, 0.25)])), ("y".to_string(), toy(&[(1.0, 0.5)])), ("z".to_string(), toy(&[(1.0, 0.75)]))])),
    ]);
    let ranks = rank_over_time(&by_dataset, &[1.5, 3.0]);
    let want_d1 = vec![vec![1.5, 1.5, 3.0], vec![1.5, 1.5, 3.0]];
    let want_d2 = vec![vec![1.0, 3.0, 2.0], vec![2.0, 1.0, 3.0]];
    ensure(ranks.per_dataset["d1"] == want_d1 && ranks.per_dataset["d2"] == want_d2, || format!("{:?}", ranks.per_dataset))?;
    ensure(ranks.median == vec![vec![1.5, 2.0, 2.0], vec![2.0, 1.5, 3.0]], || format!("median ranks {:?}", ranks.median))?;

    let pairs = vec![
        (toy(&[(1.0, 0.5), (5.0, 0.875)]), toy(&[(2.0, 0.75)])),
        (toy(&[(1.0, 0.75)]), toy(&[(1.0, 0.5)])),
        (toy(&[(1.0, 0.5)]), toy(&[(1.0, 0.5)])),
    ];
    let counts: Vec<(usize, usize, usize)> = win_counts(&pairs, &[0.5, 1.0, 2.0, 4.999, 5.0])
        .into_iter()
        .map(|c| (c.wins_a, c.wins_b, c.ties))
        .collect();
    ensure(counts == vec![(0, 0, 3), (2, 0, 1), (1, 1, 1), (1, 1, 1), (2, 0, 1)], || format!("win counts {counts:?}"))?;

    let scores = FinalScores::from([
        ("d1".to_string(), BTreeMap::from([
            ("a".to_string(), vec![0.875, 0.75, 1.0]),
            ("b".to_string(), vec![0.5, 0.625]),
            ("c".to_string(), vec![0.875]),
        ])),
        ("d2".to_string(), BTreeMap::from([
            ("a".to_string(), vec![0.25]),
            ("b".to_string(), vec![0.5]),
            ("c".to_string(), vec![0.0, 1.0]),
        ])),
    ]);
    let g = final_gap_distribution(&scores);
    let gaps = |o: &str| g[o].per_dataset.iter().map(|x| x.2).collect::<Vec<_>>();
    ensure(gaps("a") == [0.0, 0.25] && gaps("b") == [0.3125, 0.0] && gaps("c") == [0.0, 0.0], || {
        format!("final gaps a {:?} b {:?} c {:?}", gaps("a"), gaps("b"), gaps("c"))
    })?;
    ensure((g["a"].median, g["a"].q90, g["a"].max) == (0.125, 0.225, 0.25), || {
        format!("summary a {} {} {}", g["a"].median, g["a"].q90, g["a"].max)
    })?;
    Ok("gaps, ranks (1.5/1.5 and 1.5/1.5/3 ties), win counts with a flip at t = 2 and t = 5, final gap quantiles".into())
}

fn majority_error(data: &Dataset, record: &RunRecord) -> f64 {
    let mut counts = vec![0usize; data.class_count()];
    for &i in &record.train_indices {
        counts[data.labels()[i]] += 1;
    }
    let majority = (0..counts.len()).fold(0, |best, c| if counts[c] > counts[best] { c } else { best });
    let wrong = record.test_indices.iter().filter(|&&i| data.labels()[i] != majority).count();
    wrong as f64 / record.test_indices.len() as f64
}

fn end_to_end() -> Outcome {
    let out = tempfile::tempdir().map_err(|e| e.to_string())?;
    let started = Instant::now();
    let output = Command::new(env!("CARGO_BIN_EXE_naiveml"))
        .env("NAIVEML_WORKERS", "2")
        .args(["run", "--catalog"])
        .arg(bundled("catalog.json"))
        .arg("--data")
        .arg(bundled("synthetic.csv"))
        .args(["--label", "class", "--optimizers", "naive,quasi-naive", "--seeds", "0..0"])
        .args(["--budget-seconds", "60", "--eval-deadline-seconds", "10", "--metric", "error", "--out"])
        .arg(out.path())
        .output()
        .map_err(|e| e.to_string())?;
    let elapsed = started.elapsed();
    ensure(output.status.success(), || format!("exit {:?}: {}", output.status.code(), String::from_utf8_lossy(&output.stderr)))?;
    let data = load_csv(&bundled("synthetic.csv"), "class").map_err(|e| e.to_string())?;
    let records = naiveml::harness::load_records(out.path()).map_err(|e| e.to_string())?;
    ensure(records.len() == 2, || format!("{} records", records.len()))?;
    let mut summary = Vec::new();
    for r in &records {
        let error = r.final_test_raw.ok_or_else(|| format!("{}: no test score ({:?})", r.run_id, r.error))?;
        let baseline = majority_error(&data, r);
        ensure(error <= baseline, || format!("{}: error {error} > majority {baseline}", r.run_id))?;
        let path = out.path().join("traces").join(format!("{}.jsonl", r.run_id));
        let lines = read_trace(&path).map_err(|e| e.to_string())?;
        let text = std::fs::read_to_string(&path).map_err(|e| e.to_string())?;
        for line in text.lines() {
            let v: serde_json::Value = serde_json::from_str(line).map_err(|e| e.to_string())?;
            let mut keys: Vec<&str> = v.as_object().ok_or("line is not an object")?.keys().map(String::as_str).collect();
            keys.sort_unstable();
            let want = ["component_id", "elapsed_ms", "global_score", "local_score", "params", "run_id", "slot", "status"];
            ensure(keys == want, || format!("unexpected keys {keys:?}"))?;
        }
        ensure(!lines.is_empty() && lines.len() == r.events.len(), || format!("{}: trace lines", r.run_id))?;
        ensure(lines.windows(2).all(|w| w[0].elapsed_ms <= w[1].elapsed_ms), || format!("{}: lines out of order", r.run_id))?;
        summary.push(format!("{} {error:.3} (majority {baseline:.3})", r.optimizer));
    }
    ensure(elapsed <= Duration::from_secs(90), || format!("took {elapsed:?}"))?;
    Ok(format!("{} in {:.1} s", summary.join(", "), elapsed.as_secs_f64()))
}

fn deadline_contract() -> Outcome {
    let catalog = builtin_catalog();
    let data = load_csv(&bundled("synthetic.csv"), "class").map_err(|e| e.to_string())?;
    let step = StepClock::new(Duration::from_secs(1));
    let spec = ValidationSpec::five_fold(Metric::ErrorRate, 0, Duration::from_millis(1));
    let evaluator = DatasetEvaluator::new(&catalog, &data, spec, &step).map_err(|e| e.to_string())?;
    let statuses = Mutex::new(Vec::new());
    let recording = |p: &Pipeline| -> EvalResult {
        let r = evaluator.evaluate(p);
        statuses.lock().unwrap().push(r.status);
        r
    };
    let clock = SystemClock::new();
    let budget = Budget {
        wall: Some(Duration::from_secs(3600)),
        evaluations: Some(200),
    };
    let sigma = default_permutation(&catalog);
    let (naive_events, naive) = drain(SlotwiseSearch::naive(&catalog, &recording, budget, 0, &clock));
    let (quasi_events, _) = drain(SlotwiseSearch::quasi(&catalog, &sigma, &recording, budget, 0, &clock).map_err(|e| e.to_string())?);
    let (random_events, random) = drain(RandomSearch::new(&catalog, &recording, Budget::evaluations(25), 0, &clock));
    let statuses = statuses.lock().unwrap().clone();
    ensure(!statuses.is_empty() && statuses.iter().all(|&s| s == EvalStatus::Timeout), || {
        format!("statuses {statuses:?}")
    })?;
    ensure(naive_events.is_empty() && quasi_events.is_empty() && random_events.is_empty(), || "events yielded".into())?;
    ensure(random.evaluations() == 25, || format!("random made {} evaluations", random.evaluations()))?;
    Ok(format!(
        "{} evaluations all timed out; streams ended (naive after {} evaluations)",
        statuses.len(),
        naive.evaluations()
    ))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("oracle equivalence on separable surfaces", oracle_equivalence),
        ("naivety-failure fixture", naivety_failure_fixture),
        ("metric oracles", metric_oracles),
        ("slot-wise search structure", structural_suite),
        ("repair fidelity", repair_fidelity),
        ("validation protocol", validation_protocol),
        ("analysis fixtures", analysis_fixtures),
        ("end-to-end smoke run", end_to_end),
        ("deadline contract", deadline_contract),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let number = (i + 1).to_string();
        if !filter.is_empty() && !filter.iter().any(|f| *f == number || name.contains(f.as_str())) {
            continue;
        }
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_else(|| "panic".into()))
        });
        match outcome {
            Ok(detail) => println!("PASS [{number}] {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL [{number}] {name}: {detail}");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
