//! Decision trees and the ensemble classifiers built on them.
//!
//! Everything here is written from scratch: CART trees (Gini or variance),
//! multiclass gradient boosting, random forests, extra trees, SAMME AdaBoost
//! and soft voting. All models map a feature matrix to per-class
//! probabilities over the class ordinals `0..n_classes`.

mod adaboost;
mod forest;
mod gbdt;
mod serial;
mod tree;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng;

pub use adaboost::{adaboost_fit, adaboost_fit_traced, AdaboostModel, AdaboostParams, WeightTrace, PERFECT_ALPHA};
pub use forest::{forest_fit, ForestModel, ForestParams, ForestVariant};
pub use gbdt::{gbdt_fit, multinomial_gradient, multinomial_loss, softmax, EarlyStopping, GbdtModel, GbdtParams};
pub use serial::{read_model, write_model, MODEL_FORMAT_VERSION};
pub use tree::{fit_tree, DecisionTree, MaxFeatures, Node, Splitter, Targets, TreeParams};

/// Index of the largest value; ties go to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

pub(crate) fn check_features(x: &Matrix, n_features: usize) -> Result<()> {
    if x.cols() != n_features {
        return Err(Error::domain(format!(
            "model expects {n_features} features, got {}",
            x.cols()
        )));
    }
    Ok(())
}

pub(crate) fn check_labels(x: &Matrix, labels: &[usize], n_classes: usize) -> Result<()> {
    if x.rows() == 0 {
        return Err(Error::domain("cannot train on zero rows"));
    }
    if labels.len() != x.rows() {
        return Err(Error::domain(format!("{} labels for {} rows", labels.len(), x.rows())));
    }
    if let Some(bad) = labels.iter().find(|&&l| l >= n_classes) {
        return Err(Error::domain(format!("label {bad} outside {n_classes} classes")));
    }
    Ok(())
}

/// Positive per-class weights, indexed by class ordinal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassWeights(pub Vec<f64>);

impl ClassWeights {
    pub fn check(&self, n_classes: usize) -> Result<()> {
        if self.0.len() != n_classes {
            return Err(Error::config(format!(
                "{} class weights for {n_classes} classes",
                self.0.len()
            )));
        }
        if self.0.iter().any(|w| !(*w > 0.0) || !w.is_finite()) {
            return Err(Error::config("class weights must be positive and finite"));
        }
        Ok(())
    }
}

/// `n / (K · n_c)` for every class.
pub fn balanced_class_weights(labels: &[usize], n_classes: usize) -> Result<ClassWeights> {
    let mut counts = vec![0usize; n_classes];
    for &l in labels {
        if l >= n_classes {
            return Err(Error::domain(format!("label {l} outside {n_classes} classes")));
        }
        counts[l] += 1;
    }
    if let Some(c) = counts.iter().position(|&n| n == 0) {
        return Err(Error::domain(format!("class {c} has no rows")));
    }
    let n = labels.len() as f64;
    let k = n_classes as f64;
    Ok(ClassWeights(counts.iter().map(|&c| n / (k * c as f64)).collect()))
}

pub trait ProbabilisticClassifier {
    fn n_classes(&self) -> usize;

    /// One probability row per input row; rows sum to 1.
    fn predict_proba(&self, x: &Matrix) -> Result<Matrix>;

    fn predict(&self, x: &Matrix) -> Result<Vec<usize>> {
        let p = self.predict_proba(x)?;
        Ok(p.iter_rows().map(argmax).collect())
    }
}

impl ProbabilisticClassifier for GbdtModel {
    fn n_classes(&self) -> usize {
        self.n_classes
    }

    fn predict_proba(&self, x: &Matrix) -> Result<Matrix> {
        GbdtModel::predict_proba(self, x)
    }
}

impl ProbabilisticClassifier for ForestModel {
    fn n_classes(&self) -> usize {
        self.n_classes
    }

    fn predict_proba(&self, x: &Matrix) -> Result<Matrix> {
        ForestModel::predict_proba(self, x)
    }
}

impl ProbabilisticClassifier for AdaboostModel {
    fn n_classes(&self) -> usize {
        self.n_classes
    }

    fn predict_proba(&self, x: &Matrix) -> Result<Matrix> {
        AdaboostModel::predict_proba(self, x)
    }
}

/// Soft voting: unweighted mean of member probabilities, then argmax.
pub fn voting_predict(members: &[&dyn ProbabilisticClassifier], x: &Matrix) -> Result<(Vec<usize>, Matrix)> {
    let first = members
        .first()
        .ok_or_else(|| Error::config("voting needs at least one member"))?;
    let k = first.n_classes();
    if members.iter().any(|m| m.n_classes() != k) {
        return Err(Error::config("voting members disagree on the class ordering"));
    }
    let mut avg = Matrix::zeros(x.rows(), k);
    for m in members {
        let p = m.predict_proba(x)?;
        for r in 0..x.rows() {
            for (a, v) in avg.row_mut(r).iter_mut().zip(p.row(r)) {
                *a += v;
            }
        }
    }
    let scale = 1.0 / members.len() as f64;
    for r in 0..x.rows() {
        avg.row_mut(r).iter_mut().for_each(|a| *a *= scale);
    }
    let labels = avg.iter_rows().map(argmax).collect();
    Ok((labels, avg))
}

/// A trained classifier of any supported family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Model {
    Gbdt(GbdtModel),
    Forest(ForestModel),
    Adaboost(AdaboostModel),
    Voting(Vec<Model>),
}

impl ProbabilisticClassifier for Model {
    fn n_classes(&self) -> usize {
        match self {
            Model::Gbdt(m) => m.n_classes,
            Model::Forest(m) => m.n_classes,
            Model::Adaboost(m) => m.n_classes,
            Model::Voting(ms) => ms.first().map_or(0, |m| m.n_classes()),
        }
    }

    fn predict_proba(&self, x: &Matrix) -> Result<Matrix> {
        match self {
            Model::Gbdt(m) => m.predict_proba(x),
            Model::Forest(m) => m.predict_proba(x),
            Model::Adaboost(m) => m.predict_proba(x),
            Model::Voting(ms) => {
                let members: Vec<&dyn ProbabilisticClassifier> = ms.iter().map(|m| m as _).collect();
                voting_predict(&members, x).map(|(_, p)| p)
            }
        }
    }
}

/// Top-level model families offered to users.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelFamily {
    Gbdt,
    Rfc,
    Voting,
}

impl ModelFamily {
    pub const ALL: [ModelFamily; 3] = [ModelFamily::Gbdt, ModelFamily::Rfc, ModelFamily::Voting];

    pub fn name(self) -> &'static str {
        match self {
            ModelFamily::Gbdt => "gbdt",
            ModelFamily::Rfc => "rfc",
            ModelFamily::Voting => "voting",
        }
    }
}

impl fmt::Display for ModelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelFamily::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::config(format!("unknown model family `{s}` (gbdt | rfc | voting)")))
    }
}

/// Parameter profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Profile {
    /// Small enough to train in seconds.
    Desk,
    /// 10000 estimators, learning rate 0.01, depth 500, impurity decrease 1e-2, balanced weights.
    Paper,
}

/// Family plus the parameters of every model it may train.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub family: ModelFamily,
    pub gbdt: GbdtParams,
    pub random_forest: ForestParams,
    pub extra_trees: ForestParams,
    pub adaboost: AdaboostParams,
    /// Weight forest samples by [`balanced_class_weights`].
    pub balanced: bool,
}

/// Keys accepted by [`ModelSpec::set`].
pub const SPEC_KEYS: [&str; 7] = [
    "n_estimators",
    "learning_rate",
    "max_depth",
    "min_impurity_decrease",
    "max_features",
    "class_weight",
    "early_stopping_patience",
];

impl ModelSpec {
    pub fn new(family: ModelFamily, profile: Profile) -> Self {
        match profile {
            Profile::Desk => Self::desk(family),
            Profile::Paper => Self::paper(family),
        }
    }

    pub fn desk(family: ModelFamily) -> Self {
        let forest_tree = TreeParams::default();
        Self {
            family,
            gbdt: GbdtParams {
                n_estimators: 300,
                learning_rate: 0.05,
                tree: TreeParams {
                    max_depth: 6,
                    min_impurity_decrease: 1e-3,
                    ..TreeParams::default()
                },
                early_stopping: None,
            },
            random_forest: ForestParams {
                tree: forest_tree,
                ..ForestParams::random_forest(100)
            },
            extra_trees: ForestParams {
                tree: forest_tree,
                ..ForestParams::extra_trees(100)
            },
            adaboost: AdaboostParams {
                n_rounds: 50,
                max_depth: 1,
            },
            balanced: true,
        }
    }

    pub fn paper(family: ModelFamily) -> Self {
        let mut spec = Self::desk(family);
        for (k, v) in [
            ("n_estimators", "10000"),
            ("learning_rate", "0.01"),
            ("max_depth", "500"),
            ("min_impurity_decrease", "1e-2"),
            ("class_weight", "balanced"),
        ] {
            spec.set(k, v).expect("paper profile keys are valid");
        }
        spec
    }

    /// Applies one named override to every model that uses the parameter.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: FromStr>(key: &str, value: &str) -> Result<T> {
            value
                .trim()
                .parse()
                .map_err(|_| Error::config(format!("{key}: cannot parse `{value}`")))
        }
        match key {
            "n_estimators" => {
                let n: usize = num(key, value)?;
                if n == 0 {
                    return Err(Error::config("n_estimators must be at least 1"));
                }
                self.gbdt.n_estimators = n;
                self.random_forest.n_trees = n;
                self.extra_trees.n_trees = n;
                self.adaboost.n_rounds = n;
            }
            "learning_rate" => {
                let lr: f64 = num(key, value)?;
                if !(lr >= 0.0) || !lr.is_finite() {
                    return Err(Error::config("learning_rate must be finite and non-negative"));
                }
                self.gbdt.learning_rate = lr;
            }
            "max_depth" => {
                let d: usize = num(key, value)?;
                self.gbdt.tree.max_depth = d;
                self.random_forest.tree.max_depth = d;
                self.extra_trees.tree.max_depth = d;
            }
            "min_impurity_decrease" => {
                let v: f64 = num(key, value)?;
                if !(v >= 0.0) || !v.is_finite() {
                    return Err(Error::config("min_impurity_decrease must be finite and non-negative"));
                }
                self.gbdt.tree.min_impurity_decrease = v;
                self.random_forest.tree.min_impurity_decrease = v;
                self.extra_trees.tree.min_impurity_decrease = v;
            }
            "max_features" => {
                let m: MaxFeatures = value.trim().parse()?;
                self.random_forest.max_features = m;
                self.extra_trees.max_features = m;
            }
            "class_weight" => {
                self.balanced = match value.trim() {
                    "balanced" => true,
                    "none" => false,
                    other => return Err(Error::config(format!("class_weight `{other}`: expected balanced or none"))),
                }
            }
            "early_stopping_patience" => {
                let p: usize = num(key, value)?;
                self.gbdt.early_stopping = (p > 0).then_some(EarlyStopping {
                    validation_fraction: 0.1,
                    patience: p,
                });
            }
            _ => {
                return Err(Error::config(format!(
                    "unknown model parameter `{key}` (expected one of {})",
                    SPEC_KEYS.join(", ")
                )))
            }
        }
        Ok(())
    }

    fn forest(&self, base: &ForestParams, labels: &[usize], n_classes: usize) -> Result<ForestParams> {
        let mut p = base.clone();
        if self.balanced {
            p.class_weights = Some(balanced_class_weights(labels, n_classes)?);
        }
        Ok(p)
    }

    pub fn fit(&self, x: &Matrix, labels: &[usize], n_classes: usize, seed: u64) -> Result<Model> {
        match self.family {
            ModelFamily::Gbdt => Ok(Model::Gbdt(gbdt_fit(x, labels, n_classes, &self.gbdt, seed)?)),
            ModelFamily::Rfc => {
                let p = self.forest(&self.random_forest, labels, n_classes)?;
                Ok(Model::Forest(forest_fit(x, labels, n_classes, &p, seed)?))
            }
            ModelFamily::Voting => {
                let sub = |i: u64| rng::derive_seed(seed, &[i]);
                let et = self.forest(&self.extra_trees, labels, n_classes)?;
                let rf = self.forest(&self.random_forest, labels, n_classes)?;
                Ok(Model::Voting(vec![
                    Model::Adaboost(adaboost_fit(x, labels, n_classes, &self.adaboost, sub(0))?),
                    Model::Gbdt(gbdt_fit(x, labels, n_classes, &self.gbdt, sub(1))?),
                    Model::Forest(forest_fit(x, labels, n_classes, &et, sub(2))?),
                    Model::Forest(forest_fit(x, labels, n_classes, &rf, sub(3))?),
                ]))
            }
        }
    }
}
