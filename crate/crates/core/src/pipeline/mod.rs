//! End-to-end pipelines: fitted features, trained artifacts and the
//! experiment drivers behind the command-line tool.

mod artifact;
mod experiments;
mod features;

pub use artifact::{sidecar_path, Prediction, PredictionReport, TrainedModel};
pub use experiments::{ablate_corpus, cross_validate_corpus, evaluate_holdout, tune_corpus, HoldoutReport};
pub use features::{FeaturePipeline, Mode, PipelineConfig, SIDECAR_FORMAT_VERSION};
