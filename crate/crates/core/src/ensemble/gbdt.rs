use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::tree::{grow, DecisionTree, Targets, TreeParams};
use super::{check_features, check_labels};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::{par, rng};

/// Patience-based stopping on a held-out share of the training rows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EarlyStopping {
    pub validation_fraction: f64,
    pub patience: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GbdtParams {
    pub n_estimators: usize,
    pub learning_rate: f64,
    pub tree: TreeParams,
    pub early_stopping: Option<EarlyStopping>,
}

impl GbdtParams {
    pub fn check(&self) -> Result<()> {
        if self.n_estimators == 0 {
            return Err(Error::config("GBDT needs at least one stage"));
        }
        if !(self.learning_rate >= 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::config("GBDT learning rate must be finite and non-negative"));
        }
        if let Some(es) = self.early_stopping {
            if !(es.validation_fraction > 0.0 && es.validation_fraction < 1.0) || es.patience == 0 {
                return Err(Error::config("early stopping needs a fraction in (0, 1) and patience ≥ 1"));
            }
        }
        self.tree.check()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbdtModel {
    pub n_classes: usize,
    pub n_features: usize,
    pub learning_rate: f64,
    /// Log class priors.
    pub init: Vec<f64>,
    /// One regression tree per class per stage.
    pub stages: Vec<Vec<DecisionTree>>,
    /// Mean training deviance before the first stage and after each stage.
    pub train_loss: Vec<f64>,
}

pub fn softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

fn log_softmax_at(scores: &[f64], class: usize) -> f64 {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + scores.iter().map(|s| (s - max).exp()).sum::<f64>().ln();
    scores[class] - lse
}

/// Summed multinomial deviance `-Σ log softmax(F_i)[y_i]`.
pub fn multinomial_loss(scores: &Matrix, labels: &[usize]) -> f64 {
    labels
        .iter()
        .enumerate()
        .map(|(i, &y)| -log_softmax_at(scores.row(i), y))
        .sum()
}

/// Gradient of [`multinomial_loss`]: `softmax(F_i)[c] - 1[y_i = c]`.
pub fn multinomial_gradient(scores: &Matrix, labels: &[usize]) -> Matrix {
    let mut g = Matrix::zeros(scores.rows(), scores.cols());
    for (i, &y) in labels.iter().enumerate() {
        let p = softmax(scores.row(i));
        for (c, pc) in p.into_iter().enumerate() {
            g.set(i, c, pc - if c == y { 1.0 } else { 0.0 });
        }
    }
    g
}

/// Splits rows into (fit, validation), stratified and seeded.
fn holdout(labels: &[usize], n_classes: usize, fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut rng = rng::stream(seed, 0x65_73);
    let (mut fit, mut val) = (Vec::new(), Vec::new());
    for c in 0..n_classes {
        let mut rows: Vec<usize> = (0..labels.len()).filter(|&r| labels[r] == c).collect();
        rows.shuffle(&mut rng);
        let n_val = ((rows.len() as f64) * fraction).round() as usize;
        let n_val = n_val.min(rows.len().saturating_sub(1));
        val.extend_from_slice(&rows[..n_val]);
        fit.extend_from_slice(&rows[n_val..]);
    }
    fit.sort_unstable();
    val.sort_unstable();
    (fit, val)
}

/// Multiclass gradient boosting with softmax link and Newton leaf values.
pub fn gbdt_fit(x: &Matrix, labels: &[usize], n_classes: usize, params: &GbdtParams, seed: u64) -> Result<GbdtModel> {
    params.check()?;
    check_labels(x, labels, n_classes)?;
    let counts = (0..n_classes)
        .map(|c| labels.iter().filter(|&&l| l == c).count())
        .collect::<Vec<_>>();
    if let Some(c) = counts.iter().position(|&n| n == 0) {
        return Err(Error::config(format!(
            "class {c} is absent from the training labels; its prior is undefined"
        )));
    }

    let (fit_rows, val_rows) = match params.early_stopping {
        Some(es) => holdout(labels, n_classes, es.validation_fraction, seed),
        None => ((0..labels.len()).collect(), Vec::new()),
    };
    let xf = x.select_rows(&fit_rows);
    let yf: Vec<usize> = fit_rows.iter().map(|&r| labels[r]).collect();
    let xv = x.select_rows(&val_rows);
    let yv: Vec<usize> = val_rows.iter().map(|&r| labels[r]).collect();

    let n = yf.len();
    let init: Vec<f64> = (0..n_classes)
        .map(|c| {
            let nc = yf.iter().filter(|&&l| l == c).count().max(1);
            (nc as f64 / n as f64).ln()
        })
        .collect();
    let mut scores = Matrix::from_vec(n, n_classes, init.iter().copied().cycle().take(n * n_classes).collect())?;
    let mut val_scores =
        Matrix::from_vec(yv.len(), n_classes, init.iter().copied().cycle().take(yv.len() * n_classes).collect())?;

    let mut model = GbdtModel {
        n_classes,
        n_features: x.cols(),
        learning_rate: params.learning_rate,
        init,
        stages: Vec::new(),
        train_loss: vec![multinomial_loss(&scores, &yf) / n as f64],
    };
    if n_classes < 2 {
        return Ok(model);
    }

    let k = n_classes as f64;
    let mut best_val = (f64::INFINITY, 0usize);
    for m in 0..params.n_estimators {
        let probs: Vec<Vec<f64>> = (0..n).map(|i| softmax(scores.row(i))).collect();
        let stage = par::map(n_classes, |c| -> Result<(DecisionTree, Vec<usize>)> {
            let residuals: Vec<f64> = (0..n)
                .map(|i| if yf[i] == c { 1.0 } else { 0.0 } - probs[i][c])
                .collect();
            let mut rng = rng::stream(rng::derive_seed(seed, &[m as u64, c as u64]), 0);
            let (mut tree, leaf_of) = grow(&xf, Targets::Values(&residuals), None, &params.tree, &mut rng)?;
            let mut num = vec![0.0; tree.nodes().len()];
            let mut den = vec![0.0; tree.nodes().len()];
            for (i, &leaf) in leaf_of.iter().enumerate() {
                let r = residuals[i];
                num[leaf] += r;
                den[leaf] += r.abs() * (1.0 - r.abs());
            }
            for leaf in 0..num.len() {
                let gamma = if den[leaf] < 1e-150 { 0.0 } else { (k - 1.0) / k * num[leaf] / den[leaf] };
                tree.set_leaf(leaf, vec![gamma]);
            }
            Ok((tree, leaf_of))
        });
        let mut trees = Vec::with_capacity(n_classes);
        for (c, fitted) in stage.into_iter().enumerate() {
            let (tree, leaf_of) = fitted?;
            for (i, &leaf) in leaf_of.iter().enumerate() {
                let update = params.learning_rate * leaf_value(&tree, leaf);
                scores.set(i, c, scores.get(i, c) + update);
            }
            for i in 0..yv.len() {
                let update = params.learning_rate * tree.predict_row(xv.row(i))[0];
                val_scores.set(i, c, val_scores.get(i, c) + update);
            }
            trees.push(tree);
        }
        model.stages.push(trees);
        model.train_loss.push(multinomial_loss(&scores, &yf) / n as f64);

        if let Some(es) = params.early_stopping {
            let loss = multinomial_loss(&val_scores, &yv);
            if loss < best_val.0 {
                best_val = (loss, model.stages.len());
            } else if model.stages.len() - best_val.1 >= es.patience {
                model.stages.truncate(best_val.1);
                model.train_loss.truncate(best_val.1 + 1);
                break;
            }
        }
    }
    Ok(model)
}

fn leaf_value(tree: &DecisionTree, leaf: usize) -> f64 {
    match &tree.nodes()[leaf] {
        super::tree::Node::Leaf { value } => value[0],
        super::tree::Node::Split { .. } => unreachable!("rows end in leaves"),
    }
}

impl GbdtModel {
    /// Raw additive scores `F`.
    pub fn decision_function(&self, x: &Matrix) -> Result<Matrix> {
        check_features(x, self.n_features)?;
        let k = self.n_classes;
        let mut out = Matrix::zeros(x.rows(), k);
        for (r, row) in x.iter_rows().enumerate() {
            let f = out.row_mut(r);
            f.copy_from_slice(&self.init);
            for stage in &self.stages {
                for (c, tree) in stage.iter().enumerate() {
                    f[c] += self.learning_rate * tree.predict_row(row)[0];
                }
            }
        }
        Ok(out)
    }

    pub fn predict_proba(&self, x: &Matrix) -> Result<Matrix> {
        let mut f = self.decision_function(x)?;
        for r in 0..f.rows() {
            let p = softmax(f.row(r));
            f.row_mut(r).copy_from_slice(&p);
        }
        Ok(f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::argmax;

    fn separable() -> (Matrix, Vec<usize>) {
        let rows: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64, ((i * 7) % 5) as f64]).collect();
        let labels = (0..20).map(|i| usize::from(i >= 10)).collect();
        (Matrix::from_rows(&rows).unwrap(), labels)
    }

    fn params(m: usize, lr: f64) -> GbdtParams {
        GbdtParams {
            n_estimators: m,
            learning_rate: lr,
            tree: TreeParams::with_depth(3),
            early_stopping: None,
        }
    }

    #[test]
    fn fits_separable_toy_set() {
        let (x, y) = separable();
        let model = gbdt_fit(&x, &y, 2, &params(50, 0.1), 1).unwrap();
        let p = model.predict_proba(&x).unwrap();
        for (r, &l) in y.iter().enumerate() {
            assert_eq!(argmax(p.row(r)), l);
            assert!((p.row(r).iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
        assert!(model.train_loss.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn zero_learning_rate_predicts_the_prior() {
        let x = Matrix::from_column(&[0.0, 1.0, 2.0, 3.0]);
        let y = [0, 1, 1, 1];
        let model = gbdt_fit(&x, &y, 2, &params(1, 0.0), 1).unwrap();
        let p = model.predict_proba(&x).unwrap();
        for r in 0..4 {
            assert!((p.get(r, 0) - 0.25).abs() < 1e-12 && (p.get(r, 1) - 0.75).abs() < 1e-12);
        }
    }

    #[test]
    fn stage_count_and_absent_class() {
        let (x, y) = separable();
        assert!(gbdt_fit(&x, &y, 2, &params(0, 0.1), 1).is_err());
        assert!(matches!(gbdt_fit(&x, &y, 3, &params(5, 0.1), 1), Err(Error::Config(_))));
    }

    #[test]
    fn single_class_space() {
        let x = Matrix::from_column(&[0.0, 1.0]);
        let model = gbdt_fit(&x, &[0, 0], 1, &params(5, 0.1), 1).unwrap();
        assert_eq!(model.predict_proba(&x).unwrap().column(0), vec![1.0, 1.0]);
    }

    #[test]
    fn early_stopping_truncates() {
        let rows: Vec<Vec<f64>> = (0..80).map(|i| vec![((i * 37) % 11) as f64]).collect();
        let y: Vec<usize> = (0..80).map(|i| (i * 13 % 7) % 2).collect();
        let mut p = params(200, 0.5);
        p.early_stopping = Some(EarlyStopping {
            validation_fraction: 0.25,
            patience: 5,
        });
        let model = gbdt_fit(&Matrix::from_rows(&rows).unwrap(), &y, 2, &p, 3).unwrap();
        assert!(model.stages.len() < 200);
        assert_eq!(model.train_loss.len(), model.stages.len() + 1);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let f = Matrix::from_rows(&[vec![0.3, -1.2, 2.0], vec![1.0, 1.0, 1.0]]).unwrap();
        let y = [2, 0];
        let g = multinomial_gradient(&f, &y);
        for r in 0..2 {
            for c in 0..3 {
                let mut plus = f.clone();
                plus.set(r, c, f.get(r, c) + 1e-6);
                let mut minus = f.clone();
                minus.set(r, c, f.get(r, c) - 1e-6);
                let numeric = (multinomial_loss(&plus, &y) - multinomial_loss(&minus, &y)) / 2e-6;
                assert!((numeric - g.get(r, c)).abs() < 1e-6);
            }
        }
    }
}
