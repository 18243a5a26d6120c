//! Numeric encoding of device records.
//!
//! Categorical values get integer codes in first-appearance order, then each
//! code is replaced by the relative frequency of its value in the fitting
//! corpus. Price passes through as a number. Every column is standard-scaled
//! afterwards.

mod correlation;
mod frequency;
mod scaler;

use serde::{Deserialize, Serialize};

use crate::dataset::{DeviceRecord, Feature, Features};
use crate::error::{Error, Result};
use crate::matrix::Matrix;

pub use correlation::{correlation_matrix, pearson, CorrelationMatrix};
pub use frequency::{fit_frequency, fit_frequency_column, FrequencyColumn, FrequencyTable, LabelEncoder};
pub use scaler::{apply_scaler, fit_scaler, StandardScaler};

/// What to do with a categorical value that was absent from the fitting corpus.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum UnseenPolicy {
    /// Encode as frequency `1 / (n_fit + 1)` and report a warning.
    #[default]
    Default,
    Reject,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnseenWarning {
    pub row: usize,
    pub feature: Feature,
    pub value: String,
}

/// Numeric matrix plus its column names and label ordinals.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedMatrix {
    pub matrix: Matrix,
    pub columns: Vec<String>,
    pub labels: Vec<usize>,
    /// Stages applied, in order.
    pub provenance: Vec<String>,
}

impl EncodedMatrix {
    pub fn new(matrix: Matrix, columns: Vec<String>, labels: Vec<usize>) -> Result<Self> {
        if columns.len() != matrix.cols() {
            return Err(Error::domain(format!(
                "{} column names for {} columns",
                columns.len(),
                matrix.cols()
            )));
        }
        if labels.len() != matrix.rows() {
            return Err(Error::domain(format!(
                "{} labels for {} rows",
                labels.len(),
                matrix.rows()
            )));
        }
        Ok(Self {
            matrix,
            columns,
            labels,
            provenance: Vec::new(),
        })
    }

    pub fn n_rows(&self) -> usize {
        self.matrix.rows()
    }

    pub fn n_cols(&self) -> usize {
        self.matrix.cols()
    }

    pub fn drop_column(&self, c: usize) -> EncodedMatrix {
        let mut columns = self.columns.clone();
        columns.remove(c);
        EncodedMatrix {
            matrix: self.matrix.drop_column(c),
            columns,
            labels: self.labels.clone(),
            provenance: self.provenance.clone(),
        }
    }
}

/// Column names in model order.
pub fn feature_columns() -> Vec<String> {
    Feature::ALL.iter().map(|f| f.name().to_string()).collect()
}

/// Fitted frequency encoder and scaler for the ten input features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Encoders {
    pub labels: LabelEncoder,
    pub frequencies: FrequencyTable,
    pub scaler: StandardScaler,
    pub unseen: UnseenPolicy,
}

impl Encoders {
    pub fn fit<R: Features>(records: &[R], unseen: UnseenPolicy) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::domain("cannot fit encoders on an empty corpus"));
        }
        let labels = LabelEncoder::fit(records);
        let frequencies = FrequencyTable::fit(records, &labels);
        let raw = frequency_matrix(records, &labels, &frequencies, UnseenPolicy::Default)?.0;
        let scaler = fit_scaler(&raw)?;
        Ok(Self {
            labels,
            frequencies,
            scaler,
            unseen,
        })
    }

    /// Frequency-encoded, unscaled matrix.
    pub fn frequency_matrix<R: Features>(&self, records: &[R]) -> Result<(Matrix, Vec<UnseenWarning>)> {
        frequency_matrix(records, &self.labels, &self.frequencies, self.unseen)
    }

    pub fn transform_features<R: Features>(&self, records: &[R]) -> Result<(Matrix, Vec<UnseenWarning>)> {
        let (raw, warnings) = self.frequency_matrix(records)?;
        Ok((self.scaler.apply(&raw)?, warnings))
    }

    pub fn transform(&self, records: &[DeviceRecord]) -> Result<(EncodedMatrix, Vec<UnseenWarning>)> {
        let (m, warnings) = self.transform_features(records)?;
        let labels = records.iter().map(|r| r.risk_score.ordinal()).collect();
        let mut em = EncodedMatrix::new(m, feature_columns(), labels)?;
        em.provenance = vec!["frequency".into(), "standard_scaler".into()];
        Ok((em, warnings))
    }
}

fn frequency_matrix<R: Features>(
    records: &[R],
    labels: &LabelEncoder,
    freqs: &FrequencyTable,
    unseen: UnseenPolicy,
) -> Result<(Matrix, Vec<UnseenWarning>)> {
    let mut m = Matrix::zeros(records.len(), Feature::ALL.len());
    let mut warnings = Vec::new();
    for (r, rec) in records.iter().enumerate() {
        for (c, &f) in Feature::ALL.iter().enumerate() {
            let v = if f.is_categorical() {
                let value = rec.categorical(f);
                match labels.code(f, value) {
                    Some(code) => freqs.frequency_of_code(f, code),
                    None => match unseen {
                        UnseenPolicy::Reject => {
                            return Err(Error::UnseenValue {
                                feature: f.name().to_string(),
                                value: value.to_string(),
                            })
                        }
                        UnseenPolicy::Default => {
                            warnings.push(UnseenWarning {
                                row: r,
                                feature: f,
                                value: value.to_string(),
                            });
                            freqs.unseen_frequency()
                        }
                    },
                }
            } else {
                rec.price_usd()
            };
            m.set(r, c, v);
        }
    }
    Ok((m, warnings))
}
