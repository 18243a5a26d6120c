use serde::{Deserialize, Serialize};

use super::tree::{fit_tree, DecisionTree, Targets, TreeParams};
use super::{argmax, check_features, check_labels};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng;

/// Learner weight used in place of `+inf` for an error-free learner.
pub const PERFECT_ALPHA: f64 = 1e10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdaboostParams {
    pub n_rounds: usize,
    pub max_depth: usize,
}

impl Default for AdaboostParams {
    fn default() -> Self {
        Self {
            n_rounds: 50,
            max_depth: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaboostModel {
    pub n_classes: usize,
    pub n_features: usize,
    pub learners: Vec<DecisionTree>,
    pub alphas: Vec<f64>,
    /// Weighted training error of each learner.
    pub errors: Vec<f64>,
}

/// Row weights at the start of every round, then after the last update.
pub type WeightTrace = Vec<Vec<f64>>;

pub fn adaboost_fit(x: &Matrix, labels: &[usize], n_classes: usize, params: &AdaboostParams, seed: u64) -> Result<AdaboostModel> {
    adaboost_fit_traced(x, labels, n_classes, params, seed).map(|(m, _)| m)
}

/// SAMME boosting; also returns the sample-weight trajectory.
pub fn adaboost_fit_traced(
    x: &Matrix,
    labels: &[usize],
    n_classes: usize,
    params: &AdaboostParams,
    seed: u64,
) -> Result<(AdaboostModel, WeightTrace)> {
    if params.n_rounds == 0 {
        return Err(Error::config("AdaBoost needs at least one round"));
    }
    if n_classes < 2 {
        return Err(Error::config("AdaBoost needs at least two classes"));
    }
    check_labels(x, labels, n_classes)?;
    let n = x.rows();
    let k = n_classes as f64;
    let tree_params = TreeParams::with_depth(params.max_depth);
    let mut weights = vec![1.0 / n as f64; n];
    let mut trace = vec![weights.clone()];
    let mut model = AdaboostModel {
        n_classes,
        n_features: x.cols(),
        learners: Vec::new(),
        alphas: Vec::new(),
        errors: Vec::new(),
    };
    for round in 0..params.n_rounds {
        let mut rng = rng::stream(seed, round as u64);
        let tree = fit_tree(x, Targets::Classes { labels, n_classes }, Some(&weights), &tree_params, &mut rng)?;
        let missed: Vec<bool> = x
            .iter_rows()
            .zip(labels)
            .map(|(row, &y)| argmax(tree.predict_row(row)) != y)
            .collect();
        let total: f64 = weights.iter().sum();
        let err = weights.iter().zip(&missed).filter(|(_, &m)| m).map(|(w, _)| w).sum::<f64>() / total;

        if err <= 0.0 {
            model.learners.push(tree);
            model.alphas.push(PERFECT_ALPHA);
            model.errors.push(0.0);
            break;
        }
        if err >= 1.0 - 1.0 / k {
            // no better than chance: contributes nothing, and boosting stops
            model.learners.push(tree);
            model.alphas.push(0.0);
            model.errors.push(err);
            break;
        }
        let alpha = ((1.0 - err) / err).ln() + (k - 1.0).ln();
        for (w, &m) in weights.iter_mut().zip(&missed) {
            if m {
                *w *= alpha.exp();
            }
        }
        let sum: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= sum);
        trace.push(weights.clone());
        model.learners.push(tree);
        model.alphas.push(alpha);
        model.errors.push(err);
    }
    Ok((model, trace))
}

impl AdaboostModel {
    /// Per-class share of the α-weighted votes; uniform when every α is 0.
    pub fn predict_proba(&self, x: &Matrix) -> Result<Matrix> {
        check_features(x, self.n_features)?;
        let k = self.n_classes;
        let total: f64 = self.alphas.iter().sum();
        let mut out = Matrix::zeros(x.rows(), k);
        for (r, row) in x.iter_rows().enumerate() {
            let votes = out.row_mut(r);
            if total <= 0.0 {
                votes.iter_mut().for_each(|v| *v = 1.0 / k as f64);
                continue;
            }
            for (tree, alpha) in self.learners.iter().zip(&self.alphas) {
                votes[argmax(tree.predict_row(row))] += alpha / total;
            }
        }
        Ok(out)
    }
}
