use serde::Serialize;

use super::features::{FeaturePipeline, PipelineConfig};
use crate::dataset::DeviceRecord;
use crate::encoding::UnseenWarning;
use crate::ensemble::{ModelSpec, ProbabilisticClassifier};
use crate::error::Result;
use crate::eval::{
    ablation_study, compute_metrics, cross_validate, grid_search, make_fold_plan, stratified_split, AblationReport,
    CvResult, GridSpec, MetricsReport, SelectionMetric, TuneResult,
};
use crate::nvd::RiskClass;
use crate::rng;

fn labels(records: &[DeviceRecord]) -> Vec<usize> {
    records.iter().map(|r| r.risk_score.ordinal()).collect()
}

/// Repeated stratified CV. The feature pipeline (including any clustering) is
/// fitted once on the whole corpus; only the model is refitted per fold.
pub fn cross_validate_corpus(
    records: &[DeviceRecord],
    config: &PipelineConfig,
    spec: &ModelSpec,
    k: usize,
    repeats: usize,
) -> Result<CvResult> {
    let plan = make_fold_plan(&labels(records), k, repeats, config.seed)?;
    let (_, em) = FeaturePipeline::fit(records, config)?;
    cross_validate(spec, &em.matrix, &em.labels, RiskClass::COUNT, &plan, rng::derive_seed(config.seed, &[3]))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HoldoutReport {
    pub metrics: MetricsReport,
    pub train_rows: usize,
    pub test_rows: usize,
    #[serde(skip)]
    pub warnings: Vec<UnseenWarning>,
}

/// Stratified hold-out evaluation; everything is fitted on the training part.
pub fn evaluate_holdout(
    records: &[DeviceRecord],
    config: &PipelineConfig,
    spec: &ModelSpec,
    test_fraction: f64,
) -> Result<HoldoutReport> {
    let (train_idx, test_idx) = stratified_split(&labels(records), test_fraction, config.seed)?;
    let pick = |idx: &[usize]| idx.iter().map(|&i| records[i].clone()).collect::<Vec<_>>();
    let (train, test) = (pick(&train_idx), pick(&test_idx));
    let trained = super::TrainedModel::train(&train, config, spec)?;
    let (em, warnings) = trained.pipeline.transform_records(&test)?;
    let predicted = trained.model.predict(&em.matrix)?;
    Ok(HoldoutReport {
        metrics: compute_metrics(&em.labels, &predicted, RiskClass::COUNT)?,
        train_rows: train.len(),
        test_rows: test.len(),
        warnings,
    })
}

pub fn tune_corpus(
    records: &[DeviceRecord],
    config: &PipelineConfig,
    spec: &ModelSpec,
    grid: &GridSpec,
    k: usize,
    repeats: usize,
    metric: SelectionMetric,
) -> Result<TuneResult> {
    let plan = make_fold_plan(&labels(records), k, repeats, config.seed)?;
    let (_, em) = FeaturePipeline::fit(records, config)?;
    grid_search(spec, grid, &em.matrix, &em.labels, RiskClass::COUNT, &plan, rng::derive_seed(config.seed, &[3]), metric)
}

pub fn ablate_corpus(
    records: &[DeviceRecord],
    config: &PipelineConfig,
    spec: &ModelSpec,
    k: usize,
    repeats: usize,
    metric: SelectionMetric,
) -> Result<AblationReport> {
    let plan = make_fold_plan(&labels(records), k, repeats, config.seed)?;
    let (_, em) = FeaturePipeline::fit(records, config)?;
    ablation_study(spec, &em, RiskClass::COUNT, &plan, rng::derive_seed(config.seed, &[3]), metric)
}
