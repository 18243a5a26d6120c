use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::dataset::{Feature, Features};
use crate::error::{Error, Result};

/// Integer codes per categorical feature, assigned in first-appearance order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelEncoder {
    /// `(feature, values)`; a value's code is its index.
    pub features: Vec<(Feature, Vec<String>)>,
    #[serde(skip)]
    index: Vec<HashMap<String, usize>>,
}

impl LabelEncoder {
    pub fn fit<R: Features>(records: &[R]) -> Self {
        let features = Feature::categorical()
            .map(|f| {
                let mut seen = HashMap::new();
                let mut values = Vec::new();
                for r in records {
                    let v = r.categorical(f);
                    if !seen.contains_key(v) {
                        seen.insert(v.to_string(), values.len());
                        values.push(v.to_string());
                    }
                }
                (f, values)
            })
            .collect();
        Self::from_values(features)
    }

    pub fn from_values(features: Vec<(Feature, Vec<String>)>) -> Self {
        let index = features
            .iter()
            .map(|(_, vals)| vals.iter().enumerate().map(|(i, v)| (v.clone(), i)).collect())
            .collect();
        Self { features, index }
    }

    /// Rebuilds lookup maps after deserialization.
    pub fn reindex(self) -> Self {
        Self::from_values(self.features)
    }

    fn slot(&self, feature: Feature) -> Option<usize> {
        self.features.iter().position(|(f, _)| *f == feature)
    }

    pub fn code(&self, feature: Feature, value: &str) -> Option<usize> {
        let s = self.slot(feature)?;
        self.index[s].get(value).copied()
    }

    pub fn cardinality(&self, feature: Feature) -> usize {
        self.slot(feature).map_or(0, |s| self.features[s].1.len())
    }
}

/// Occurrence counts per code; frequencies are `count / n_fit`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyTable {
    pub n_fit: usize,
    pub counts: Vec<(Feature, Vec<usize>)>,
}

impl FrequencyTable {
    pub fn fit<R: Features>(records: &[R], labels: &LabelEncoder) -> Self {
        let counts = labels
            .features
            .iter()
            .map(|(f, values)| {
                let mut c = vec![0usize; values.len()];
                for r in records {
                    if let Some(code) = labels.code(*f, r.categorical(*f)) {
                        c[code] += 1;
                    }
                }
                (*f, c)
            })
            .collect();
        Self {
            n_fit: records.len(),
            counts,
        }
    }

    pub fn frequency_of_code(&self, feature: Feature, code: usize) -> f64 {
        let (_, c) = self
            .counts
            .iter()
            .find(|(f, _)| *f == feature)
            .expect("feature fitted");
        c[code] as f64 / self.n_fit as f64
    }

    pub fn unseen_frequency(&self) -> f64 {
        1.0 / (self.n_fit as f64 + 1.0)
    }
}

/// Relative frequencies of one column's values, in first-appearance order.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyColumn {
    pub n_fit: usize,
    pub entries: Vec<(String, f64)>,
}

impl FrequencyColumn {
    pub fn get(&self, value: &str) -> Option<f64> {
        self.entries.iter().find(|(v, _)| v == value).map(|e| e.1)
    }
}

pub fn fit_frequency_column<S: AsRef<str>>(values: &[S]) -> Result<FrequencyColumn> {
    if values.is_empty() {
        return Err(Error::domain("frequency of an empty column"));
    }
    let mut order: Vec<String> = Vec::new();
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for v in values {
        let v = v.as_ref();
        let e = counts.entry(v).or_insert(0);
        if *e == 0 {
            order.push(v.to_string());
        }
        *e += 1;
    }
    let n = values.len();
    let entries = order
        .into_iter()
        .map(|v| {
            let c = counts[v.as_str()];
            (v, c as f64 / n as f64)
        })
        .collect();
    Ok(FrequencyColumn { n_fit: n, entries })
}

/// Relative frequencies of the named categorical feature over `records`.
pub fn fit_frequency<R: Features>(records: &[R], feature: &str) -> Result<FrequencyColumn> {
    let f: Feature = feature.parse()?;
    if !f.is_categorical() {
        return Err(Error::config(format!("{feature} is continuous, not categorical")));
    }
    let col: Vec<&str> = records.iter().map(|r| r.categorical(f)).collect();
    fit_frequency_column(&col)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::sample_record;
    use proptest::prelude::*;

    #[test]
    fn counts_over_n() {
        let f = fit_frequency_column(&["a", "a", "b", "c"]).unwrap();
        assert_eq!(f.get("a"), Some(0.5));
        assert_eq!(f.get("b"), Some(0.25));
        assert_eq!(f.get("c"), Some(0.25));
        assert_eq!(fit_frequency_column(&["x", "x"]).unwrap().entries, vec![("x".to_string(), 1.0)]);
    }

    #[test]
    fn class_table_as_column() {
        let mut col = Vec::new();
        for (name, n) in [("Low", 176), ("Medium", 138), ("High", 183), ("Critical", 656)] {
            col.extend(std::iter::repeat_n(name, n));
        }
        let f = fit_frequency_column(&col).unwrap();
        for (name, expected) in [("Critical", 0.569), ("High", 0.159), ("Low", 0.153), ("Medium", 0.120)] {
            assert!((f.get(name).unwrap() - expected).abs() <= 0.001, "{name}");
        }
    }

    #[test]
    fn feature_name_errors() {
        let recs = vec![sample_record()];
        assert!(matches!(fit_frequency(&recs, "colour"), Err(Error::Config(_))));
        assert!(matches!(fit_frequency(&recs, "price_usd"), Err(Error::Config(_))));
        assert_eq!(fit_frequency(&recs, "brand").unwrap().get("acme"), Some(1.0));
    }

    #[test]
    fn codes_follow_first_appearance() {
        let mut a = sample_record();
        a.brand = "zulu".into();
        let mut b = sample_record();
        b.brand = "alpha".into();
        let enc = LabelEncoder::fit(&[a.clone(), b, a]);
        assert_eq!(enc.code(Feature::Brand, "zulu"), Some(0));
        assert_eq!(enc.code(Feature::Brand, "alpha"), Some(1));
        assert_eq!(enc.cardinality(Feature::Brand), 2);
        assert_eq!(enc.code(Feature::Brand, "none"), None);
    }

    proptest! {
        #[test]
        fn sums_to_one_and_ignores_order(mut col in proptest::collection::vec(0u8..6, 1..60), seed in any::<u64>()) {
            let names: Vec<String> = col.iter().map(|v| format!("v{v}")).collect();
            let f = fit_frequency_column(&names).unwrap();
            let total: f64 = f.entries.iter().map(|e| e.1).sum();
            prop_assert!((total - 1.0).abs() < 1e-9);

            use rand::seq::SliceRandom;
            col.shuffle(&mut crate::rng::seeded(seed));
            let shuffled: Vec<String> = col.iter().map(|v| format!("v{v}")).collect();
            let g = fit_frequency_column(&shuffled).unwrap();
            for (v, p) in &f.entries {
                prop_assert_eq!(g.get(v), Some(*p));
            }
        }
    }
}
