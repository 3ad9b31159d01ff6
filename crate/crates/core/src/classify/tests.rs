use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;

fn ex(a: f64, b: f64, positive: bool) -> LabeledExample {
    LabeledExample::new(a, b, positive)
}

fn pool(pos: usize, neg: usize) -> Vec<LabeledExample> {
    (0..pos)
        .map(|i| ex(i as f64, 0.0, true))
        .chain((0..neg).map(|i| ex(i as f64, 1.0, false)))
        .collect()
}

#[test]
fn undersampling_balances_and_keeps_positives() {
    let data = pool(50, 1000);
    let out = undersample(&data, 3).unwrap();
    assert_eq!(out.len(), 100);
    assert_eq!(out.iter().filter(|e| e.positive).count(), 50);
    assert_eq!(out, undersample(&data, 3).unwrap());
    assert_ne!(out, undersample(&data, 4).unwrap());

    let small = pool(5, 5);
    assert_eq!(undersample(&small, 1).unwrap(), small);

    let flipped = undersample(&pool(8, 3), 1).unwrap();
    assert_eq!(flipped.iter().filter(|e| !e.positive).count(), 3);
    assert_eq!(flipped.len(), 6);

    assert!(undersample(&pool(3, 0), 1).is_err());
}

#[test]
fn metrics_conventions() {
    let m = metrics(&[true, false, true], &[true, false, true]);
    assert_eq!((m.precision, m.recall, m.f1), (1.0, 1.0, 1.0));
    let m = metrics(&[true; 4], &[true, false, true, false]);
    assert_eq!((m.precision, m.recall), (0.5, 1.0));
    assert!((m.f1 - 2.0 / 3.0).abs() < 1e-15);
    let m = metrics(&[false, false], &[true, false]);
    assert_eq!((m.precision, m.recall, m.f1), (0.0, 0.0, 0.0));
    let m = metrics(&[true, false], &[false, false]);
    assert_eq!((m.precision, m.recall, m.f1), (0.0, 0.0, 0.0));
    assert!((f1_score(0.74, 0.89) - 0.81).abs() < 0.005);
}

#[test]
fn logreg_separable_and_uninformative() {
    let mut data = Vec::new();
    for _ in 0..20 {
        data.push(ex(0.0, 0.0, true));
        data.push(ex(10.0, 10.0, false));
    }
    let model = train_logreg(&data, 0.01).unwrap();
    assert!(data.iter().all(|e| model.predict(&e.features) == e.positive));

    let flat: Vec<_> = (0..40).map(|i| ex(1.0, 2.0, i % 4 == 0)).collect();
    let model = train_logreg(&flat, 1.0).unwrap();
    assert!((model.score(&[1.0, 2.0]) - 0.25).abs() < 0.05);
}

#[test]
fn logreg_rejects_non_finite() {
    let data = vec![ex(0.0, 0.0, true), ex(f64::NAN, 1.0, false)];
    assert!(matches!(train_logreg(&data, 1.0), Err(Error::NonFinite { index: 1 })));
}

#[test]
fn gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let xs: Vec<[f64; 2]> = (0..30).map(|_| [rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)]).collect();
    let ys: Vec<bool> = (0..30).map(|_| rng.random()).collect();
    for _ in 0..50 {
        let p = [rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)];
        let lambda = rng.random_range(0.0..5.0);
        let (_, g) = logreg_objective(&p, &xs, &ys, lambda);
        let h = 1e-5;
        for k in 0..3 {
            let (mut up, mut down) = (p, p);
            up[k] += h;
            down[k] -= h;
            let fd = (logreg_objective(&up, &xs, &ys, lambda).0 - logreg_objective(&down, &xs, &ys, lambda).0) / (2.0 * h);
            let rel = (g[k] - fd).abs() / g[k].abs().max(fd.abs()).max(1e-8);
            assert!(rel < 1e-6, "component {k}: {} vs {fd}", g[k]);
        }
    }
}

#[test]
fn forest_separable_and_deterministic() {
    let data: Vec<_> = (0..40).map(|i| ex(i as f64, (i % 7) as f64, i < 20)).collect();
    let model = train_random_forest(&data, 10, 1, 9).unwrap();
    assert!(data.iter().all(|e| model.predict(&e.features) == e.positive));
    let again = train_random_forest(&data, 10, 1, 9).unwrap();
    assert_eq!(model, again);
}

/// Gini-optimal single threshold over both features by direct enumeration.
fn brute_force_stump(data: &[LabeledExample]) -> (usize, f64, bool, bool) {
    let impurity = |side: &[&LabeledExample]| {
        if side.is_empty() {
            return 0.0;
        }
        let p = side.iter().filter(|e| e.positive).count() as f64 / side.len() as f64;
        side.len() as f64 * (1.0 - p * p - (1.0 - p) * (1.0 - p))
    };
    let vote = |side: &[&LabeledExample]| 2 * side.iter().filter(|e| e.positive).count() >= side.len();
    let mut best = (f64::INFINITY, 0, 0.0, false, false);
    for f in 0..2 {
        let mut values: Vec<f64> = data.iter().map(|e| e.features[f]).collect();
        values.sort_by(f64::total_cmp);
        values.dedup();
        for w in values.windows(2) {
            let t = (w[0] + w[1]) / 2.0;
            let left: Vec<_> = data.iter().filter(|e| e.features[f] <= t).collect();
            let right: Vec<_> = data.iter().filter(|e| e.features[f] > t).collect();
            let g = impurity(&left) + impurity(&right);
            if g < best.0 - 1e-12 {
                best = (g, f, t, vote(&left), vote(&right));
            }
        }
    }
    (best.1, best.2, best.3, best.4)
}

#[test]
fn stump_matches_brute_force_threshold() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..20 {
        let data: Vec<_> = (0..30)
            .map(|_| {
                let a: f64 = rng.random_range(0.0..1.0);
                let b: f64 = rng.random_range(0.0..1.0);
                ex(a, b, a + 0.3 * rng.random::<f64>() < 0.6)
            })
            .collect();
        let config = ForestConfig { trees: 1, max_depth: 1, bootstrap: false, seed: 0 };
        let model = train_forest(&data, &config).unwrap();
        let (f, t, left, right) = brute_force_stump(&data);
        for _ in 0..100 {
            let x = [rng.random_range(-0.5..1.5), rng.random_range(-0.5..1.5)];
            let expected = if x[f] <= t { left } else { right };
            assert_eq!(model.predict(&x), expected);
        }
    }
}

#[test]
fn grid_search_basics() {
    let separable: Vec<_> = (0..30).map(|i| ex(i as f64, 0.0, i < 15)).collect();
    let result = loocv_grid_search(&separable, &default_grid(ModelKind::LogisticRegression), 1).unwrap();
    assert_eq!(result.metrics.f1, 1.0);
    assert_eq!(result.evaluated.len(), 5);

    let single = [Hyperparameters::RandomForest { trees: 3, max_depth: 2 }];
    let result = loocv_grid_search(&separable, &single, 1).unwrap();
    assert_eq!(result.best, single[0]);

    assert!(loocv_grid_search(&separable[..1], &single, 1).is_err());
    assert!(loocv_grid_search(&separable, &[], 1).is_err());
}

#[test]
fn grid_ties_keep_earliest_point() {
    // A wide gap keeps every bootstrap threshold between the classes.
    let separable: Vec<_> = (0..20).map(|i| ex(i as f64 + if i < 10 { 0.0 } else { 100.0 }, 0.0, i < 10)).collect();
    let grid = default_grid(ModelKind::RandomForest);
    let result = loocv_grid_search(&separable, &grid, 1).unwrap();
    assert_eq!(result.metrics.f1, 1.0);
    assert_eq!(result.best, grid[0]);
}

#[test]
fn random_labels_score_near_chance() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let mut labels: Vec<bool> = (0..200).map(|i| i < 100).collect();
    rand::seq::SliceRandom::shuffle(labels.as_mut_slice(), &mut rng);
    let data: Vec<_> = labels
        .iter()
        .map(|&l| ex(rng.random::<f64>(), rng.random::<f64>(), l))
        .collect();
    let grid = [Hyperparameters::LogisticRegression { lambda: 1.0 }];
    let f1 = loocv_grid_search(&data, &grid, 1).unwrap().metrics.f1;
    assert!((0.35..=0.65).contains(&f1), "{f1}");
}

#[test]
fn loo_prediction_ignores_own_label() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let data: Vec<_> = (0..40)
        .map(|i| ex(rng.random::<f64>() + (i % 2) as f64, rng.random::<f64>(), i % 2 == 0))
        .collect();
    for hyper in [
        Hyperparameters::LogisticRegression { lambda: 0.1 },
        Hyperparameters::RandomForest { trees: 5, max_depth: 3 },
    ] {
        let base = loo_predictions(&data, &hyper, 4).unwrap();
        for i in [0, 7, 19] {
            let mut flipped = data.clone();
            flipped[i].positive = !flipped[i].positive;
            assert_eq!(loo_predictions(&flipped, &hyper, 4).unwrap()[i], base[i]);
        }
    }
}

#[test]
fn logreg_loo_is_scale_invariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let data: Vec<_> = (0..40)
        .map(|i| ex(rng.random::<f64>() + (i % 2) as f64 * 0.5, rng.random::<f64>() * 3.0, i % 2 == 0))
        .collect();
    let scaled: Vec<_> = data.iter().map(|e| ex(e.features[0] * 37.0, e.features[1], e.positive)).collect();
    let hyper = Hyperparameters::LogisticRegression { lambda: 1.0 };
    assert_eq!(loo_predictions(&data, &hyper, 0).unwrap(), loo_predictions(&scaled, &hyper, 0).unwrap());
}

#[test]
fn single_class_fold_predicts_that_class() {
    let data = vec![ex(0.0, 0.0, true), ex(1.0, 1.0, false), ex(2.0, 2.0, false)];
    let preds = loo_predictions(&data, &Hyperparameters::LogisticRegression { lambda: 1.0 }, 0).unwrap();
    assert!(!preds[0]);
}

#[test]
fn table_layout() {
    let row = ResultRow {
        method: "gram3-sgns".into(),
        classifier: ModelKind::LogisticRegression,
        result: GridResult {
            best: Hyperparameters::LogisticRegression { lambda: 1.0 },
            metrics: Metrics { precision: 0.74, recall: 0.89, f1: f1_score(0.74, 0.89) },
            evaluated: vec![],
        },
    };
    let text = metrics_table(&[row]);
    assert!(text.lines().next().unwrap().contains("F1"));
    assert!(text.contains("0.81    0.89       0.74"));
}

proptest! {
    #[test]
    fn f1_is_harmonic_mean(preds in prop::collection::vec(any::<bool>(), 1..50), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let labels: Vec<bool> = preds.iter().map(|_| rng.random()).collect();
        let m = metrics(&preds, &labels);
        if m.precision + m.recall > 0.0 {
            let h = 2.0 / (1.0 / m.precision.max(f64::MIN_POSITIVE) + 1.0 / m.recall.max(f64::MIN_POSITIVE));
            prop_assert!((m.f1 - h).abs() < 1e-12 || m.precision == 0.0 || m.recall == 0.0);
        }
    }
}
