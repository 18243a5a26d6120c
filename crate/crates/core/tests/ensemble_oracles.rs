use iotrisk::ensemble::{
    adaboost_fit_traced, fit_tree, forest_fit, gbdt_fit, AdaboostParams, ForestParams, GbdtParams, MaxFeatures,
    ProbabilisticClassifier, Targets, TreeParams,
};
use iotrisk::{rng, Matrix};
use rand::Rng;

/// Weighted-Gini decision stump on one feature, found by brute force.
/// Returns predictions on the training points.
fn oracle_stump(x: &[f64], y: &[usize], w: &[f64], k: usize) -> Vec<usize> {
    let score = |idx: &[usize]| -> (f64, usize) {
        let mut per = vec![0.0; k];
        for &i in idx {
            per[y[i]] += w[i];
        }
        let total: f64 = per.iter().sum();
        let proxy = per.iter().map(|p| p * p).sum::<f64>() / total;
        let mut best = 0;
        for c in 1..k {
            if per[c] > per[best] {
                best = c;
            }
        }
        (proxy, best)
    };
    let mut xs: Vec<f64> = x.to_vec();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    let mut best: Option<(f64, f64, usize, usize)> = None;
    for pair in xs.windows(2) {
        let t = (pair[0] + pair[1]) / 2.0;
        let left: Vec<usize> = (0..x.len()).filter(|&i| x[i] <= t).collect();
        let right: Vec<usize> = (0..x.len()).filter(|&i| x[i] > t).collect();
        let (pl, cl) = score(&left);
        let (pr, cr) = score(&right);
        if best.is_none_or(|b| pl + pr > b.0 + 1e-12) {
            best = Some((pl + pr, t, cl, cr));
        }
    }
    let (_, t, cl, cr) = best.unwrap();
    x.iter().map(|&v| if v <= t { cl } else { cr }).collect()
}

/// SAMME recursion driven by the brute-force stump.
fn oracle_samme(x: &[f64], y: &[usize], k: usize, rounds: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
    let n = x.len();
    let mut w = vec![1.0 / n as f64; n];
    let mut trace = vec![w.clone()];
    let mut alphas = Vec::new();
    for _ in 0..rounds {
        let pred = oracle_stump(x, y, &w, k);
        let err: f64 = (0..n).filter(|&i| pred[i] != y[i]).map(|i| w[i]).sum();
        let alpha = ((1.0 - err) / err).ln() + ((k - 1) as f64).ln();
        for i in 0..n {
            if pred[i] != y[i] {
                w[i] *= alpha.exp();
            }
        }
        let s: f64 = w.iter().sum();
        w.iter_mut().for_each(|v| *v /= s);
        trace.push(w.clone());
        alphas.push(alpha);
    }
    (trace, alphas)
}

#[test]
fn adaboost_three_rounds_match_hand_recursion() {
    let x = [0.0, 1.0, 2.0, 3.0];
    let y = [0, 0, 1, 0];
    let m = Matrix::from_vec(4, 1, x.to_vec()).unwrap();
    let params = AdaboostParams { n_rounds: 3, max_depth: 1 };
    let (model, trace) = adaboost_fit_traced(&m, &y, 2, &params, 5).unwrap();

    let hand = [
        vec![0.25, 0.25, 0.25, 0.25],
        vec![1.0 / 6.0, 1.0 / 6.0, 0.5, 1.0 / 6.0],
        vec![0.1, 0.1, 0.3, 0.5],
        vec![0.25, 0.25, 0.1875, 0.3125],
    ];
    let (oracle, oracle_alphas) = oracle_samme(&x, &y, 2, 3);
    assert_eq!(trace.len(), 4);
    for (r, (got, want)) in trace.iter().zip(&hand).enumerate() {
        for i in 0..4 {
            assert!((got[i] - want[i]).abs() < 1e-12, "round {r} row {i}: {} vs {}", got[i], want[i]);
            assert!((got[i] - oracle[r][i]).abs() < 1e-12);
        }
    }
    let hand_alphas = [3f64.ln(), 5f64.ln(), 4f64.ln()];
    for (a, (h, o)) in model.alphas.iter().zip(hand_alphas.iter().zip(&oracle_alphas)) {
        assert!((a - h).abs() < 1e-12 && (a - o).abs() < 1e-12);
    }
}

fn random_problem(seed: u64, n: usize, d: usize, k: usize) -> (Matrix, Vec<usize>) {
    let mut r = rng::seeded(seed);
    let data: Vec<f64> = (0..n * d).map(|_| r.random::<f64>()).collect();
    let x = Matrix::from_vec(n, d, data).unwrap();
    let labels = (0..n)
        .map(|i| {
            let s: f64 = x.row(i).iter().take(2).sum();
            if i < k { i } else { ((s * k as f64 / 2.0) as usize + r.random_range(0..2)) % k }
        })
        .collect();
    (x, labels)
}

#[test]
fn gbdt_is_invariant_to_row_order() {
    let (x, y) = random_problem(11, 80, 4, 3);
    let params = GbdtParams {
        n_estimators: 30,
        learning_rate: 0.1,
        tree: TreeParams::with_depth(3),
        early_stopping: None,
    };
    let a = gbdt_fit(&x, &y, 3, &params, 1).unwrap();

    let mut order: Vec<usize> = (0..x.rows()).collect();
    order.reverse();
    order.rotate_left(17);
    let data: Vec<f64> = order.iter().flat_map(|&i| x.row(i).to_vec()).collect();
    let xp = Matrix::from_vec(x.rows(), x.cols(), data).unwrap();
    let yp: Vec<usize> = order.iter().map(|&i| y[i]).collect();
    let b = gbdt_fit(&xp, &yp, 3, &params, 1).unwrap();

    let (pa, pb) = (a.predict_proba(&x).unwrap(), b.predict_proba(&x).unwrap());
    for i in 0..x.rows() {
        for c in 0..3 {
            assert!((pa.get(i, c) - pb.get(i, c)).abs() < 1e-9);
        }
    }
    assert_eq!(a.predict(&x).unwrap(), b.predict(&x).unwrap());
}

#[test]
fn same_seed_gives_identical_forests() {
    let (x, y) = random_problem(3, 60, 5, 4);
    for params in [ForestParams::random_forest(15), ForestParams::extra_trees(15)] {
        let a = forest_fit(&x, &y, 4, &params, 9).unwrap();
        let b = forest_fit(&x, &y, 4, &params, 9).unwrap();
        assert_eq!(a, b);
        let c = forest_fit(&x, &y, 4, &params, 10).unwrap();
        assert_ne!(a.trees, c.trees);
    }
}

#[test]
fn single_tree_forest_equals_cart() {
    let (x, y) = random_problem(21, 70, 3, 3);
    let params = ForestParams {
        bootstrap: false,
        max_features: MaxFeatures::All,
        ..ForestParams::random_forest(1)
    };
    let forest = forest_fit(&x, &y, 3, &params, 2).unwrap();
    let tree = fit_tree(
        &x,
        Targets::Classes { labels: &y, n_classes: 3 },
        None,
        &TreeParams::default(),
        &mut rng::seeded(0),
    )
    .unwrap();
    assert_eq!(forest.predict_proba(&x).unwrap(), tree.predict(&x).unwrap());
}
