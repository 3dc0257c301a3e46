use ndarray::{array, Array2};
use proptest::prelude::*;

use super::*;
use crate::space::{ComponentSpec, ParamSpec, Params, Slot, SlotRole};

fn dataset(x: Array2<f64>, y: Vec<usize>) -> Dataset {
    let c = y.iter().max().map_or(2, |m| (m + 1).max(2));
    Dataset::new(x, y, c, vec![]).unwrap()
}

fn single(key: &str, params: Vec<ParamSpec>) -> Catalog {
    Catalog {
        slots: vec![Slot {
            role: SlotRole::Predictor,
            candidates: vec![ComponentSpec::new(key, key, params)],
        }],
        standard_predictor: key.into(),
    }
}

fn fit_one(key: &str, params: Params, data: &Dataset) -> FittedPipeline {
    let catalog = single(key, vec![]);
    fit_pipeline(&Pipeline::predictor_only(&catalog, key, params), &catalog, data).unwrap()
}

fn with(pairs: &[(&str, ParamValue)]) -> Params {
    Params::Values(pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect())
}

#[test]
fn majority_predicts_frequencies() {
    let y = vec![0, 0, 0, 0, 1, 0, 0, 0, 1, 0];
    let d = dataset(Array2::zeros((10, 2)), y);
    let fitted = fit_one(MAJORITY, Params::Defaults, &d);
    assert_eq!(fitted.steps.len(), 0);
    let p = fitted.predict_proba(Array2::zeros((3, 2)).view()).unwrap();
    for row in p.rows() {
        assert!((row[0] - 0.8).abs() < 1e-12 && (row[1] - 0.2).abs() < 1e-12);
    }
}

#[test]
fn one_nn_at_training_point_is_one_hot() {
    let x = array![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [3.0, 3.0]];
    let d = dataset(x.clone(), vec![0, 1, 1, 0]);
    let fitted = fit_one(KNN, with(&[("n_neighbors", ParamValue::Int(1))]), &d);
    let p = fitted.predict_proba(x.view()).unwrap();
    for (i, &label) in d.labels().iter().enumerate() {
        assert!(p[[i, label]] > 1.0 - 1e-12);
        assert!(p[[i, 1 - label]] < 1e-12);
    }
}

#[test]
fn knn_distance_ties_prefer_lower_row() {
    // both training points are at distance 1 from the query
    let x = array![[1.0], [-1.0]];
    let d = dataset(x, vec![1, 0]);
    let fitted = fit_one(KNN, with(&[("n_neighbors", ParamValue::Int(1))]), &d);
    let p = fitted.predict_proba(array![[0.0]].view()).unwrap();
    assert!(p[[0, 1]] > 0.5);
}

#[test]
fn gaussian_nb_separates_distant_clusters() {
    // oracle: the class log-likelihood ratio at -5 for unit variances is
    // ((-5-5)^2 - 0) / 2 = 50, i.e. P(class 1) ~ e^-50.
    let mut rows = Vec::new();
    let mut y = Vec::new();
    for (center, label) in [(-5.0, 0), (5.0, 1)] {
        for off in [-1.0, 1.0, -1.0, 1.0] {
            rows.push([center + off, center - off]);
            y.push(label);
        }
    }
    let x = Array2::from_shape_fn((rows.len(), 2), |(i, j)| rows[i][j]);
    let d = dataset(x, y);
    let fitted = fit_one(GAUSSIAN_NB, Params::Defaults, &d);
    let p = fitted.predict_proba(array![[-5.0, -5.0]].view()).unwrap();
    assert!(p[[0, 0]] >= 0.999, "{p}");
}

fn xor() -> Dataset {
    dataset(
        array![[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]],
        vec![0, 1, 1, 0],
    )
}

fn training_errors(fitted: &FittedPipeline, d: &Dataset) -> usize {
    let p = fitted.predict_proba(d.features().view()).unwrap();
    p.rows()
        .into_iter()
        .zip(d.labels())
        .filter(|(row, &l)| argmax(row.as_slice().unwrap()) != l)
        .count()
}

#[test]
fn depth_two_tree_fits_xor() {
    let d = xor();
    // enumeration oracle: no single axis-aligned split separates XOR
    for f in 0..2 {
        let left: Vec<usize> = (0..4).filter(|&i| d.features()[[i, f]] <= 0.5).collect();
        let mixed = left.iter().any(|&i| d.labels()[i] == 0) && left.iter().any(|&i| d.labels()[i] == 1);
        assert!(mixed);
    }
    let one = fit_one(DECISION_TREE, with(&[("max_depth", ParamValue::Int(1))]), &d);
    assert!(training_errors(&one, &d) > 0);
    let two = fit_one(DECISION_TREE, with(&[("max_depth", ParamValue::Int(2))]), &d);
    assert_eq!(training_errors(&two, &d), 0);
    if let FittedPredictor::Tree(t) = &two.predictor.1 {
        assert_eq!(t.depth(), 2);
    } else {
        panic!("expected a tree");
    }
}

fn scaler_then_bernoulli() -> Catalog {
    Catalog {
        slots: vec![
            Slot {
                role: SlotRole::DataPreprocessor,
                candidates: vec![ComponentSpec::new("std", STANDARD_SCALER, vec![])],
            },
            Slot {
                role: SlotRole::Predictor,
                candidates: vec![ComponentSpec::new("bnb", BERNOULLI_NB, vec![])],
            },
        ],
        standard_predictor: "bnb".into(),
    }
}

#[test]
fn standardized_input_breaks_bernoulli_nb() {
    let catalog = scaler_then_bernoulli();
    let d = dataset(array![[0.1, 0.9], [0.2, 0.8], [0.9, 0.1], [0.8, 0.3]], vec![0, 0, 1, 1]);
    let both = Pipeline::new(vec![
        SlotAssignment::component("std", Params::Defaults),
        SlotAssignment::component("bnb", Params::Defaults),
    ]);
    let err = fit_pipeline(&both, &catalog, &d).unwrap_err();
    assert!(matches!(err, ComponentError::Incompatible { .. }), "{err}");
    assert!(err.is_repairable());
    let alone = Pipeline::predictor_only(&catalog, "bnb", Params::Defaults);
    assert!(fit_pipeline(&alone, &catalog, &d).is_ok());
}

#[test]
fn width_mismatch_is_rejected() {
    let d = xor();
    let fitted = fit_one(MAJORITY, Params::Defaults, &d);
    assert!(matches!(
        fitted.predict_proba(Array2::zeros((1, 3)).view()),
        Err(ComponentError::WidthMismatch { got: 3, expected: 2 })
    ));
}

#[test]
fn interrupted_fit() {
    let d = xor();
    let catalog = single(MAJORITY, vec![]);
    let p = Pipeline::predictor_only(&catalog, MAJORITY, Params::Defaults);
    assert!(matches!(
        fit_pipeline_checked(&p, &catalog, &d, &|| true),
        Err(ComponentError::Interrupted(_))
    ));
}

#[test]
fn variance_threshold_removing_everything_is_degenerate() {
    let x = Array2::from_elem((4, 3), 2.0);
    let err = VarianceThreshold::fit("vt", x.view(), 0.0).unwrap_err();
    assert!(matches!(err, ComponentError::Degenerate { .. }));
    assert!(Pca::fit("pca", x.view(), 2).is_err());
}

#[test]
fn pca_on_rank_one_data_keeps_one_component() {
    let x = Array2::from_shape_fn((6, 3), |(i, j)| i as f64 * (j as f64 + 1.0));
    let pca = Pca::fit("pca", x.view(), 3).unwrap();
    assert_eq!(pca.transform(x.view()).ncols(), 1);
}

#[test]
fn select_percentile_breaks_ties_by_index() {
    // columns 0 and 2 are identical and equally informative, column 1 is noise
    let x = array![[0.0, 5.0, 0.0], [0.1, 1.0, 0.1], [1.0, 5.0, 1.0], [1.1, 1.0, 1.1]];
    let y = [0, 0, 1, 1];
    let sel = SelectPercentile::fit(x.view(), &y, 30.0);
    assert_eq!(sel.keep, vec![0]);
    let sel = SelectPercentile::fit(x.view(), &y, 60.0);
    assert_eq!(sel.keep, vec![0, 2]);
}

#[test]
fn builtin_catalog_is_valid_and_executable() {
    let catalog = builtin_catalog();
    assert!(crate::space::validate_catalog(&catalog).is_empty());
    check_implementations(&catalog).unwrap();
}

fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = Array2<f64>> {
    proptest::collection::vec(-100.0f64..100.0, rows * cols)
        .prop_map(move |v| Array2::from_shape_vec((rows, cols), v).unwrap())
}

fn labelled(rows: usize, cols: usize) -> impl Strategy<Value = (Array2<f64>, Vec<usize>)> {
    (
        matrix(rows, cols),
        proptest::collection::vec(0usize..3, rows),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn scalers_normalize_training_columns(x in matrix(12, 4)) {
        let mm = MinMaxScaler::fit(x.view()).transform(x.view());
        prop_assert!(mm.iter().all(|v| (0.0..=1.0).contains(v)));
        let st = StandardScaler::fit(x.view()).transform(x.view());
        for col in st.columns() {
            let mean = col.sum() / col.len() as f64;
            let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / col.len() as f64;
            prop_assert!(mean.abs() <= 1e-9);
            prop_assert!((var - 1.0).abs() <= 1e-6);
        }
    }

    #[test]
    fn variance_threshold_splits_on_threshold(x in matrix(10, 6), t in 0.0f64..3000.0) {
        let n = x.nrows() as f64;
        let var: Vec<f64> = x.columns().into_iter().map(|c| {
            let m = c.sum() / n;
            c.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n
        }).collect();
        match VarianceThreshold::fit("vt", x.view(), t) {
            Ok(vt) => {
                for j in 0..x.ncols() {
                    prop_assert_eq!(vt.keep.contains(&j), var[j] > t);
                }
            }
            Err(_) => prop_assert!(var.iter().all(|&v| v <= t)),
        }
    }

    #[test]
    fn pca_outputs_orthogonal_columns(x in matrix(15, 4), k in 1usize..6) {
        let pca = Pca::fit("pca", x.view(), k).unwrap();
        let z = pca.transform(x.view());
        prop_assert_eq!(z.ncols(), k.min(4));
        let centered = &z - &z.mean_axis(ndarray::Axis(0)).unwrap();
        for a in 0..z.ncols() {
            for b in (a + 1)..z.ncols() {
                let dot = centered.column(a).dot(&centered.column(b));
                prop_assert!(dot.abs() <= 1e-6 * (1.0 + pca.explained_variance[0] * 15.0), "dot {}", dot);
            }
        }
        prop_assert!(z.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn select_percentile_keeps_top_scores((x, y) in labelled(12, 7), p in 1.0f64..100.0) {
        let sel = SelectPercentile::fit(x.view(), &y, p);
        let k = ((p * 7.0 / 100.0).ceil() as usize).clamp(1, 7);
        prop_assert_eq!(sel.keep.len(), k);
        let mut order: Vec<usize> = (0..7).collect();
        order.sort_by(|&a, &b| sel.scores[b].total_cmp(&sel.scores[a]).then(a.cmp(&b)));
        let mut expected: Vec<usize> = order[..k].to_vec();
        expected.sort_unstable();
        prop_assert_eq!(&sel.keep, &expected);
    }

    #[test]
    fn probability_rows_are_distributions((x, y) in labelled(14, 3), q in matrix(5, 3)) {
        let mut y = y;
        y[0] = 0;
        y[1] = 1;
        let d = Dataset::new(x.mapv(|v| (v + 100.0) / 200.0), y, 3, vec![]).unwrap();
        for key in PREDICTOR_KEYS {
            let fitted = fit_one(key, Params::Defaults, &d);
            let p = fitted.predict_proba(q.mapv(|v| (v + 100.0) / 200.0).view()).unwrap();
            prop_assert_eq!(p.ncols(), 3);
            for row in p.rows() {
                prop_assert!(row.iter().all(|&v| v >= 0.0));
                prop_assert!((row.sum() - 1.0).abs() <= 1e-9, "{} row sums to {}", key, row.sum());
            }
        }
    }

    #[test]
    fn preprocessor_outputs_are_finite((x, y) in labelled(10, 4)) {
        let d = Dataset::new(x, y, 3, vec![]).unwrap();
        for key in PREPROCESSOR_KEYS {
            if let Ok(t) = FittedTransform::fit(key, key, &Resolved::new(), d.features().view(), d.labels()) {
                let z = t.transform(d.features().view()).unwrap();
                prop_assert!(z.iter().all(|v| v.is_finite()));
            }
        }
    }
}
