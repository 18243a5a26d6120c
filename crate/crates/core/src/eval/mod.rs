//! Model evaluation: fold plans, splits, metrics, cross-validation, grid
//! search, feature ablation and the text/CSV reports built from them.

mod ablation;
mod cv;
mod folds;
mod grid;
mod metrics;
mod report;

pub use ablation::{ablation_study, AblationReport, AblationRow};
pub use cv::{cross_validate, cross_validate_with, CvResult, FoldScore, SelectionMetric};
pub use folds::{make_fold_plan, stratified_split, FoldPlan};
pub use grid::{grid_search, GridSpec, TuneEntry, TuneResult};
pub use metrics::{compute_metrics, macro_average, Averages, ClassMetrics, MetricsReport};
pub use report::{cv_csv, cv_table};
