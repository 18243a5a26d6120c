use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::folds::FoldPlan;
use super::metrics::compute_metrics;
use crate::ensemble::{ModelSpec, ProbabilisticClassifier};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::{par, rng};

/// Score used to rank configurations.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum SelectionMetric {
    #[default]
    Accuracy,
    MacroF1,
}

impl FromStr for SelectionMetric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "accuracy" => Ok(SelectionMetric::Accuracy),
            "macro_f1" => Ok(SelectionMetric::MacroF1),
            _ => Err(Error::config(format!("unknown metric `{s}` (accuracy | macro_f1)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FoldScore {
    pub repeat: usize,
    pub fold: usize,
    pub accuracy: f64,
    pub macro_f1: f64,
}

impl FoldScore {
    pub fn get(&self, metric: SelectionMetric) -> f64 {
        match metric {
            SelectionMetric::Accuracy => self.accuracy,
            SelectionMetric::MacroF1 => self.macro_f1,
        }
    }

    /// `R1-F1` style label.
    pub fn label(&self) -> String {
        format!("R{}-F{}", self.repeat + 1, self.fold + 1)
    }
}

/// Held-out scores in (repeat, fold) order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CvResult {
    pub scores: Vec<FoldScore>,
}

impl CvResult {
    pub fn values(&self, metric: SelectionMetric) -> Vec<f64> {
        self.scores.iter().map(|s| s.get(metric)).collect()
    }

    pub fn accuracies(&self) -> Vec<f64> {
        self.values(SelectionMetric::Accuracy)
    }

    pub fn mean(&self, metric: SelectionMetric) -> f64 {
        let v = self.values(metric);
        v.iter().sum::<f64>() / v.len() as f64
    }

    /// Population standard deviation.
    pub fn std(&self, metric: SelectionMetric) -> f64 {
        let v = self.values(metric);
        let m = self.mean(metric);
        (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / v.len() as f64).sqrt()
    }

    pub fn mean_accuracy(&self) -> f64 {
        self.mean(SelectionMetric::Accuracy)
    }

    pub fn std_accuracy(&self) -> f64 {
        self.std(SelectionMetric::Accuracy)
    }
}

/// Runs `fit_predict(train, test, seed)` on every evaluation of `plan`.
///
/// Each evaluation gets the seed `derive_seed(seed, [repeat, fold])`, so
/// results do not depend on scheduling.
pub fn cross_validate_with<F>(plan: &FoldPlan, labels: &[usize], n_classes: usize, seed: u64, fit_predict: F) -> Result<CvResult>
where
    F: Fn(&[usize], &[usize], u64) -> Result<Vec<usize>> + Sync + Send,
{
    if plan.n_rows() != labels.len() {
        return Err(Error::domain(format!(
            "fold plan covers {} rows, data has {}",
            plan.n_rows(),
            labels.len()
        )));
    }
    let evals = plan.evaluations();
    let results = par::map(evals.len(), |e| {
        let (repeat, fold) = evals[e];
        let (train, test) = plan.split(repeat, fold);
        let run = || -> Result<FoldScore> {
            let predicted = fit_predict(&train, &test, rng::derive_seed(seed, &[repeat as u64, fold as u64]))?;
            let truth: Vec<usize> = test.iter().map(|&r| labels[r]).collect();
            let m = compute_metrics(&truth, &predicted, n_classes)?;
            Ok(FoldScore {
                repeat,
                fold,
                accuracy: m.accuracy,
                macro_f1: m.macro_avg.f1,
            })
        };
        run().map_err(|e| Error::Fold {
            repeat: repeat + 1,
            fold: fold + 1,
            source: Box::new(e),
        })
    });
    Ok(CvResult {
        scores: results.into_iter().collect::<Result<_>>()?,
    })
}

/// Cross-validates `spec` on a fixed feature matrix.
pub fn cross_validate(spec: &ModelSpec, x: &Matrix, labels: &[usize], n_classes: usize, plan: &FoldPlan, seed: u64) -> Result<CvResult> {
    if x.rows() != labels.len() {
        return Err(Error::domain("matrix and label rows differ"));
    }
    cross_validate_with(plan, labels, n_classes, seed, |train, test, s| {
        let y: Vec<usize> = train.iter().map(|&r| labels[r]).collect();
        let model = spec.fit(&x.select_rows(train), &y, n_classes, s)?;
        model.predict(&x.select_rows(test))
    })
}
