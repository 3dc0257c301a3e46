use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SplitError {
    #[error("cannot build {k} folds from {n} instances")]
    TooFewInstances { n: usize, k: usize },
    #[error("need at least 2 folds, got {0}")]
    TooFewFolds(usize),
    #[error("{labels} labels for {n} instances")]
    LabelCount { n: usize, labels: usize },
    #[error("train fraction {fraction} on {n} instances leaves an empty side")]
    DegenerateFraction { fraction: f64, n: usize },
    #[error("at least one repetition required")]
    NoRepetitions,
}

/// Sorted train and test row indices of one split.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

fn shuffled_by_class(labels: &[usize], rng: &mut ChaCha8Rng) -> Vec<Vec<usize>> {
    let classes = labels.iter().copied().max().map_or(0, |m| m + 1);
    let mut by_class = vec![Vec::new(); classes];
    for (i, &l) in labels.iter().enumerate() {
        by_class[l].push(i);
    }
    for members in &mut by_class {
        members.shuffle(rng);
    }
    by_class
}

fn complement(n: usize, test: &[usize]) -> Vec<usize> {
    let mut in_test = vec![false; n];
    for &i in test {
        in_test[i] = true;
    }
    (0..n).filter(|&i| !in_test[i]).collect()
}

/// Stratified k-fold splits.
///
/// Rows are shuffled within each class, the classes are laid end to end, and
/// position `p` of that sequence goes to fold `p mod k`. Fold sizes therefore
/// differ by at most one, and so do the per-class counts of any two folds.
pub fn kfold_splits(n: usize, k: usize, labels: &[usize], seed: u64) -> Result<Vec<Split>, SplitError> {
    if k < 2 {
        return Err(SplitError::TooFewFolds(k));
    }
    if n < k {
        return Err(SplitError::TooFewInstances { n, k });
    }
    if labels.len() != n {
        return Err(SplitError::LabelCount { n, labels: labels.len() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut folds = vec![Vec::new(); k];
    for (p, i) in shuffled_by_class(labels, &mut rng).into_iter().flatten().enumerate() {
        folds[p % k].push(i);
    }
    Ok(folds
        .into_iter()
        .map(|mut test| {
            test.sort_unstable();
            Split {
                train: complement(n, &test),
                test,
            }
        })
        .collect())
}

/// Per-class training counts summing to `floor(fraction · n)`: each class gets
/// the floor of its quota and the remainder goes to the largest fractional
/// parts (lower class index first on ties).
fn stratified_train_counts(class_sizes: &[usize], fraction: f64) -> Vec<usize> {
    let n: usize = class_sizes.iter().sum();
    let target = (fraction * n as f64).floor() as usize;
    let quotas: Vec<f64> = class_sizes.iter().map(|&c| fraction * c as f64).collect();
    let mut counts: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let mut order: Vec<usize> = (0..class_sizes.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = quotas[a] - quotas[a].floor();
        let fb = quotas[b] - quotas[b].floor();
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    let mut missing = target.saturating_sub(counts.iter().sum());
    for &c in order.iter().cycle().take(order.len() * 2) {
        if missing == 0 {
            break;
        }
        if counts[c] < class_sizes[c] {
            counts[c] += 1;
            missing -= 1;
        }
    }
    counts
}

/// Repeated stratified shuffle splits (Monte-Carlo cross-validation).
pub fn mccv_splits(
    n: usize,
    train_fraction: f64,
    repetitions: usize,
    labels: &[usize],
    seed: u64,
) -> Result<Vec<Split>, SplitError> {
    if repetitions == 0 {
        return Err(SplitError::NoRepetitions);
    }
    if labels.len() != n {
        return Err(SplitError::LabelCount { n, labels: labels.len() });
    }
    let train_size = (train_fraction * n as f64).floor() as usize;
    if !(train_fraction > 0.0 && train_fraction < 1.0) || train_size == 0 || train_size >= n {
        return Err(SplitError::DegenerateFraction {
            fraction: train_fraction,
            n,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(repetitions);
    for _ in 0..repetitions {
        let by_class = shuffled_by_class(labels, &mut rng);
        let sizes: Vec<usize> = by_class.iter().map(Vec::len).collect();
        let counts = stratified_train_counts(&sizes, train_fraction);
        let mut train = Vec::with_capacity(train_size);
        let mut test = Vec::with_capacity(n - train_size);
        for (members, &c) in by_class.iter().zip(&counts) {
            train.extend_from_slice(&members[..c]);
            test.extend_from_slice(&members[c..]);
        }
        train.sort_unstable();
        test.sort_unstable();
        out.push(Split { train, test });
    }
    Ok(out)
}
