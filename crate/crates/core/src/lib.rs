//! Severity prediction for IoT devices from publicly observable features.
//!
//! The crate covers the whole path from NVD feeds to a scored device:
//!
//! * [`nvd`] parses NVD JSON 1.1 feeds, CPE 2.3 names and CVSS v3 scores and
//!   filters IoT candidates by keyword rules.
//! * [`dataset`] holds the eleven-column device corpus, its CSV form and a
//!   seeded synthesizer.
//! * [`encoding`] turns records into a numeric matrix (frequency encoding and
//!   standard scaling).
//! * [`dimred`] provides PCA, exact t-SNE and k-means for the clustered runs.
//! * [`ensemble`] implements CART trees, multiclass gradient boosting, random
//!   forests, extra trees, SAMME AdaBoost and soft voting.
//! * [`eval`] has repeated stratified k-fold CV, stratified splits, metrics,
//!   grid search and feature ablation.
//! * [`pipeline`] glues these into fitted, serializable feature pipelines and
//!   model artifacts.

pub mod apportion;
pub mod dataset;
pub mod dimred;
pub mod encoding;
pub mod ensemble;
pub mod error;
pub mod eval;
pub mod matrix;
pub mod nvd;
pub mod pipeline;
mod par;
pub mod rng;

pub use error::{Error, Result};
pub use matrix::Matrix;
pub use nvd::RiskClass;
