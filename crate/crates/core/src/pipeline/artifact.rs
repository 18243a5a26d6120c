use std::fmt;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::features::{FeaturePipeline, PipelineConfig};
use crate::dataset::{DeviceRecord, Features};
use crate::encoding::UnseenWarning;
use crate::ensemble::{read_model, write_model, Model, ModelSpec, ProbabilisticClassifier};
use crate::error::{Error, Result};
use crate::nvd::RiskClass;
use crate::rng;

/// Encoder sidecar written next to a model file: `<model>.encoders.json`.
pub fn sidecar_path(model_path: &Path) -> PathBuf {
    let mut name = model_path.as_os_str().to_owned();
    name.push(".encoders.json");
    PathBuf::from(name)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub pipeline: FeaturePipeline,
    pub model: Model,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Prediction {
    pub row: usize,
    pub class: RiskClass,
    pub probabilities: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictionReport {
    pub predictions: Vec<Prediction>,
    pub warnings: Vec<UnseenWarning>,
}

impl TrainedModel {
    /// Fits the feature pipeline and the model on all of `records`.
    pub fn train(records: &[DeviceRecord], config: &PipelineConfig, spec: &ModelSpec) -> Result<Self> {
        let (pipeline, em) = FeaturePipeline::fit(records, config)?;
        let model = spec.fit(&em.matrix, &em.labels, RiskClass::COUNT, rng::derive_seed(config.seed, &[3]))?;
        Ok(Self { pipeline, model })
    }

    pub fn model_text(&self) -> String {
        write_model(&self.model, &self.pipeline.fingerprint())
    }

    /// Writes the model file and its encoder sidecar.
    pub fn save(&self, model_path: &Path) -> Result<()> {
        let sidecar = sidecar_path(model_path);
        std::fs::write(&sidecar, self.pipeline.to_json()).map_err(|e| Error::io(&sidecar, e))?;
        std::fs::write(model_path, self.model_text()).map_err(|e| Error::io(model_path, e))
    }

    /// Loads a model and its sidecar; fails if the fingerprints disagree.
    pub fn load(model_path: &Path) -> Result<Self> {
        let sidecar = sidecar_path(model_path);
        let json = std::fs::read_to_string(&sidecar).map_err(|e| Error::io(&sidecar, e))?;
        let pipeline = FeaturePipeline::from_json(&json)?;
        let text = std::fs::read_to_string(model_path).map_err(|e| Error::io(model_path, e))?;
        let (model, _) = read_model(&text, Some(&pipeline.fingerprint()))?;
        let expected = pipeline.columns().len();
        if let Some(width) = model_width(&model) {
            if width != expected {
                return Err(Error::format(format!(
                    "model expects {width} features, pipeline produces {expected}"
                )));
            }
        }
        Ok(Self { pipeline, model })
    }

    pub fn predict<R: Features>(&self, devices: &[R]) -> Result<PredictionReport> {
        let (x, warnings) = self.pipeline.transform(devices)?;
        let proba = self.model.predict_proba(&x)?;
        let predictions = proba
            .iter_rows()
            .enumerate()
            .map(|(row, p)| Prediction {
                row,
                class: RiskClass::from_ordinal(crate::ensemble::argmax(p)).expect("four-class model"),
                probabilities: p.to_vec(),
            })
            .collect();
        Ok(PredictionReport { predictions, warnings })
    }
}

fn model_width(model: &Model) -> Option<usize> {
    match model {
        Model::Gbdt(m) => Some(m.n_features),
        Model::Forest(m) => Some(m.n_features),
        Model::Adaboost(m) => Some(m.n_features),
        Model::Voting(ms) => ms.first().and_then(model_width),
    }
}

impl PredictionReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("row,predicted");
        for c in RiskClass::ALL {
            out.push_str(&format!(",p_{}", c.name().to_lowercase()));
        }
        out.push('\n');
        for p in &self.predictions {
            out.push_str(&format!("{},{}", p.row, p.class));
            for v in &p.probabilities {
                out.push_str(&format!(",{v:.6}"));
            }
            out.push('\n');
        }
        out
    }
}

impl fmt::Display for PredictionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:>4}  {:<9}", "row", "predicted")?;
        for c in RiskClass::ALL {
            write!(f, " {:>8}", c.name())?;
        }
        writeln!(f)?;
        for p in &self.predictions {
            write!(f, "{:>4}  {:<9}", p.row, p.class.name())?;
            for v in &p.probabilities {
                write!(f, " {:>8.3}", v)?;
            }
            writeln!(f)?;
        }
        for w in &self.warnings {
            writeln!(
                f,
                "warning: row {}: unseen {} value {:?}, encoded with the default frequency",
                w.row,
                w.feature.name(),
                w.value
            )?;
        }
        Ok(())
    }
}
