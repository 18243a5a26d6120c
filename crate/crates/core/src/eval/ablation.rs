use serde::Serialize;

use super::cv::{cross_validate, SelectionMetric};
use super::folds::FoldPlan;
use crate::encoding::EncodedMatrix;
use crate::ensemble::ModelSpec;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AblationRow {
    pub column: String,
    pub index: usize,
    pub mean: f64,
    pub std: f64,
    /// Mean without the column minus the baseline mean.
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AblationReport {
    pub metric: SelectionMetric,
    pub baseline_mean: f64,
    pub baseline_std: f64,
    /// Most harmful removal first.
    pub rows: Vec<AblationRow>,
}

/// Cross-validates once per column with that column removed. Every run uses
/// the baseline's seed, so deltas reflect the column and not the draw.
pub fn ablation_study(
    spec: &ModelSpec,
    data: &EncodedMatrix,
    n_classes: usize,
    plan: &FoldPlan,
    seed: u64,
    metric: SelectionMetric,
) -> Result<AblationReport> {
    if data.n_cols() < 2 {
        return Err(Error::domain("ablation needs at least two feature columns"));
    }
    let base = cross_validate(spec, &data.matrix, &data.labels, n_classes, plan, seed)?;
    let (baseline_mean, baseline_std) = (base.mean(metric), base.std(metric));
    let mut rows = Vec::with_capacity(data.n_cols());
    for c in 0..data.n_cols() {
        let reduced = data.matrix.drop_column(c);
        let cv = cross_validate(spec, &reduced, &data.labels, n_classes, plan, seed)?;
        let mean = cv.mean(metric);
        rows.push(AblationRow {
            column: data.columns[c].clone(),
            index: c,
            mean,
            std: cv.std(metric),
            delta: mean - baseline_mean,
        });
    }
    rows.sort_by(|a, b| a.delta.total_cmp(&b.delta).then(a.index.cmp(&b.index)));
    Ok(AblationReport {
        metric,
        baseline_mean,
        baseline_std,
        rows,
    })
}
