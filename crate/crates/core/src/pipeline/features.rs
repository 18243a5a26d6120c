use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dataset::{DeviceRecord, Features};
use crate::dimred::{
    append_cluster_column, kmeans_fit, nearest, pca_fit, tsne_embed, Components, KmeansModel,
    PcaModel, TsneConfig, CLUSTER_COLUMN, DEFAULT_K,
};
use crate::encoding::{fit_scaler, EncodedMatrix, Encoders, StandardScaler, UnseenPolicy, UnseenWarning};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng;

pub const SIDECAR_FORMAT_VERSION: u32 = 1;

/// Feature path: plain encoding, or encoding plus a t-SNE or PCA cluster column.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    #[default]
    WoDr,
    Tsne,
    Pca,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::WoDr, Mode::Tsne, Mode::Pca];

    pub fn name(self) -> &'static str {
        match self {
            Mode::WoDr => "wo_dr",
            Mode::Tsne => "tsne",
            Mode::Pca => "pca",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Mode::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::config(format!("unknown mode `{s}` (wo_dr | tsne | pca)")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub mode: Mode,
    /// Cluster count for k-means.
    pub k: usize,
    pub tsne: TsneConfig,
    pub pca: Components,
    pub unseen: UnseenPolicy,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            mode: Mode::WoDr,
            k: DEFAULT_K,
            tsne: TsneConfig::default(),
            pca: Components::default(),
            unseen: UnseenPolicy::Default,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum Reducer {
    Pca(PcaModel),
    /// t-SNE has no out-of-sample map; new rows take the cluster of their
    /// nearest training row in scaled feature space.
    Tsne { reference: Matrix, clusters: Vec<usize> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ClusterStage {
    reducer: Reducer,
    kmeans: KmeansModel,
    /// Relative size of each cluster in the fitting corpus.
    frequencies: Vec<f64>,
    /// Scaler for the appended cluster column.
    scaler: StandardScaler,
}

impl ClusterStage {
    fn clusters(&self, scaled: &Matrix) -> Result<Vec<usize>> {
        match &self.reducer {
            Reducer::Pca(pca) => self.kmeans.predict(&pca.transform(scaled)?),
            Reducer::Tsne { reference, clusters } => {
                if scaled.cols() != reference.cols() {
                    return Err(Error::domain("feature width differs from the fitted pipeline"));
                }
                Ok(scaled
                    .iter_rows()
                    .map(|row| clusters[nearest(reference, row).0])
                    .collect())
            }
        }
    }
}

/// Fitted encoders plus the optional cluster stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeaturePipeline {
    format_version: u32,
    mode: Mode,
    encoders: Encoders,
    cluster: Option<ClusterStage>,
}

fn scale_last_column(em: EncodedMatrix) -> Result<(EncodedMatrix, StandardScaler)> {
    let last = em.n_cols() - 1;
    let column = Matrix::from_column(&em.matrix.column(last));
    let scaler = fit_scaler(&column)?;
    let scaled = scaler.apply(&column)?;
    let mut out = em;
    for r in 0..out.n_rows() {
        out.matrix.set(r, last, scaled.get(r, 0));
    }
    out.provenance.push("cluster_scaler".into());
    Ok((out, scaler))
}

impl FeaturePipeline {
    /// Fits on `records` and returns the training matrix alongside.
    pub fn fit(records: &[DeviceRecord], config: &PipelineConfig) -> Result<(Self, EncodedMatrix)> {
        let encoders = Encoders::fit(records, config.unseen)?;
        let (em, _) = encoders.transform(records)?;
        let kmeans_seed = rng::derive_seed(config.seed, &[1]);
        let (reducer, kmeans) = match config.mode {
            Mode::WoDr => {
                let pipeline = Self {
                    format_version: SIDECAR_FORMAT_VERSION,
                    mode: config.mode,
                    encoders,
                    cluster: None,
                };
                return Ok((pipeline, em));
            }
            Mode::Pca => {
                let pca = pca_fit(&em.matrix, config.pca)?;
                let km = kmeans_fit(&pca.transform(&em.matrix)?, config.k, kmeans_seed)?;
                (Reducer::Pca(pca), km)
            }
            Mode::Tsne => {
                let tsne = TsneConfig {
                    seed: rng::derive_seed(config.seed, &[2]),
                    ..config.tsne.clone()
                };
                let embedding = tsne_embed(&em.matrix, &tsne)?;
                let km = kmeans_fit(&embedding.coords, config.k, kmeans_seed)?;
                let reducer = Reducer::Tsne {
                    reference: em.matrix.clone(),
                    clusters: km.assignments.clone(),
                };
                (reducer, km)
            }
        };
        let mut em = append_cluster_column(&em, &kmeans.assignments)?;
        em.provenance.insert(em.provenance.len() - 1, config.mode.name().to_string());
        let (em, scaler) = scale_last_column(em)?;
        let sizes = kmeans.sizes();
        let n = records.len() as f64;
        let stage = ClusterStage {
            reducer,
            frequencies: sizes.iter().map(|&s| s as f64 / n).collect(),
            kmeans,
            scaler,
        };
        let pipeline = Self {
            format_version: SIDECAR_FORMAT_VERSION,
            mode: config.mode,
            encoders,
            cluster: Some(stage),
        };
        Ok((pipeline, em))
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn encoders(&self) -> &Encoders {
        &self.encoders
    }

    pub fn columns(&self) -> Vec<String> {
        let mut c = crate::encoding::feature_columns();
        if self.cluster.is_some() {
            c.push(CLUSTER_COLUMN.to_string());
        }
        c
    }

    /// Model-facing matrix for unlabeled rows.
    pub fn transform<R: Features>(&self, records: &[R]) -> Result<(Matrix, Vec<UnseenWarning>)> {
        let (scaled, warnings) = self.encoders.transform_features(records)?;
        let Some(stage) = &self.cluster else {
            return Ok((scaled, warnings));
        };
        let clusters = stage.clusters(&scaled)?;
        let freq: Vec<f64> = clusters.iter().map(|&c| stage.frequencies[c]).collect();
        let col = stage.scaler.apply(&Matrix::from_column(&freq))?;
        Ok((scaled.with_column(&col.column(0))?, warnings))
    }

    pub fn transform_records(&self, records: &[DeviceRecord]) -> Result<(EncodedMatrix, Vec<UnseenWarning>)> {
        let (m, warnings) = self.transform(records)?;
        let labels = records.iter().map(|r| r.risk_score.ordinal()).collect();
        Ok((EncodedMatrix::new(m, self.columns(), labels)?, warnings))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("pipeline serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let mut p: FeaturePipeline = serde_json::from_str(text)?;
        if p.format_version != SIDECAR_FORMAT_VERSION {
            return Err(Error::format(format!(
                "encoder sidecar format {} is not supported (expected {SIDECAR_FORMAT_VERSION})",
                p.format_version
            )));
        }
        p.encoders.labels = p.encoders.labels.reindex();
        Ok(p)
    }

    /// SHA-256 of the sidecar text, hex encoded.
    pub fn fingerprint(&self) -> String {
        hex::encode(Sha256::digest(self.to_json().as_bytes()))
    }
}
