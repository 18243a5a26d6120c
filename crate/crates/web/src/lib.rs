//! Browser bindings. Every export works on a freshly synthesized corpus, so the
//! page needs no data files.

use iotrisk::dataset::{synthesize_corpus, DeviceRecord, SynthesisSpec};
use iotrisk::dimred::{pca_fit, tsne_embed, Components, TsneConfig};
use iotrisk::encoding::{Encoders, UnseenPolicy};
use iotrisk::ensemble::{ModelFamily, ModelSpec};
use iotrisk::eval::stratified_split;
use iotrisk::pipeline::{evaluate_holdout, PipelineConfig};
use iotrisk::Matrix;
use wasm_bindgen::prelude::*;

/// 2-D points with their class ordinals (0 = Low .. 3 = Critical).
#[wasm_bindgen]
#[derive(Debug, Clone, PartialEq)]
pub struct Scatter {
    xs: Vec<f64>,
    ys: Vec<f64>,
    classes: Vec<u8>,
    /// KL divergence for t-SNE, explained variance ratio of the two axes for PCA.
    quality: Vec<f64>,
}

#[wasm_bindgen]
impl Scatter {
    pub fn xs(&self) -> Vec<f64> {
        self.xs.clone()
    }

    pub fn ys(&self) -> Vec<f64> {
        self.ys.clone()
    }

    pub fn classes(&self) -> Vec<u8> {
        self.classes.clone()
    }

    pub fn quality(&self) -> Vec<f64> {
        self.quality.clone()
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }
}

#[wasm_bindgen]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Holdout {
    pub accuracy: f64,
    pub macro_f1: f64,
    /// Share of the largest class in the test part.
    pub majority: f64,
}

fn corpus(signal: f64, seed: u64) -> Result<Vec<DeviceRecord>, String> {
    synthesize_corpus(&SynthesisSpec::class_prior_distribution(seed, signal)).map_err(|e| e.to_string())
}

/// Encoded features of a stratified sample of `rows` records.
fn sample(signal: f64, rows: usize, seed: u64) -> Result<(Matrix, Vec<u8>), String> {
    let records = corpus(signal, seed)?;
    let labels: Vec<usize> = records.iter().map(|r| r.risk_score.ordinal()).collect();
    let picked: Vec<DeviceRecord> = if rows >= records.len() {
        records
    } else {
        let fraction = rows.max(8) as f64 / records.len() as f64;
        let (_, idx) = stratified_split(&labels, fraction, seed).map_err(|e| e.to_string())?;
        idx.into_iter().map(|i| records[i].clone()).collect()
    };
    let (em, _) = Encoders::fit(&picked, UnseenPolicy::Default)
        .and_then(|e| e.transform(&picked))
        .map_err(|e| e.to_string())?;
    let classes = em.labels.iter().map(|&c| c as u8).collect();
    Ok((em.matrix, classes))
}

pub fn tsne_points(signal: f64, rows: usize, perplexity: f64, seed: u64) -> Result<Scatter, String> {
    let (m, classes) = sample(signal, rows, seed)?;
    let config = TsneConfig {
        perplexity,
        seed,
        ..TsneConfig::default()
    };
    let emb = tsne_embed(&m, &config).map_err(|e| e.to_string())?;
    Ok(Scatter {
        xs: emb.coords.column(0),
        ys: emb.coords.column(1),
        classes,
        quality: vec![emb.kl],
    })
}

pub fn pca_points(signal: f64, rows: usize, seed: u64) -> Result<Scatter, String> {
    let (m, classes) = sample(signal, rows, seed)?;
    let pca = pca_fit(&m, Components::Count(2)).map_err(|e| e.to_string())?;
    let z = pca.transform(&m).map_err(|e| e.to_string())?;
    Ok(Scatter {
        xs: z.column(0),
        ys: z.column(1),
        classes,
        quality: pca.explained_variance_ratio.clone(),
    })
}

pub fn holdout_at(signal: f64, seed: u64) -> Result<Holdout, String> {
    let records = corpus(signal, seed)?;
    let config = PipelineConfig {
        seed,
        ..PipelineConfig::default()
    };
    let r = evaluate_holdout(&records, &config, &ModelSpec::desk(ModelFamily::Gbdt), 0.2).map_err(|e| e.to_string())?;
    let test_rows = r.test_rows as f64;
    let largest = r.metrics.confusion.iter().map(|row| row.iter().sum::<usize>()).max().unwrap_or(0);
    Ok(Holdout {
        accuracy: r.metrics.accuracy,
        macro_f1: r.metrics.macro_avg.f1,
        majority: largest as f64 / test_rows,
    })
}

/// t-SNE of `rows` encoded devices.
#[wasm_bindgen(js_name = tsneScatter)]
pub fn tsne_scatter(signal: f64, rows: usize, perplexity: f64, seed: u32) -> Result<Scatter, JsError> {
    tsne_points(signal, rows, perplexity, seed.into()).map_err(|e| JsError::new(&e))
}

/// First two principal components of `rows` encoded devices.
#[wasm_bindgen(js_name = pcaProjection)]
pub fn pca_projection(signal: f64, rows: usize, seed: u32) -> Result<Scatter, JsError> {
    pca_points(signal, rows, seed.into()).map_err(|e| JsError::new(&e))
}

/// GBDT hold-out accuracy on a corpus synthesized at `signal`. Call once per
/// point of a sweep so the page can redraw between points.
#[wasm_bindgen(js_name = gbdtAccuracy)]
pub fn gbdt_accuracy(signal: f64, seed: u32) -> Result<Holdout, JsError> {
    holdout_at(signal, seed.into()).map_err(|e| JsError::new(&e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tsne_scatter_has_one_point_per_row() {
        let s = tsne_points(0.8, 60, 10.0, 1).unwrap();
        assert_eq!(s.len(), s.classes.len());
        assert!((58..=62).contains(&s.len()));
        assert!(s.xs.iter().chain(&s.ys).all(|v| v.is_finite()));
        assert!(s.classes.iter().all(|&c| c < 4));
    }

    #[test]
    fn pca_axes_are_ordered() {
        let s = pca_points(0.5, 200, 2).unwrap();
        assert_eq!(s.quality.len(), 2);
        assert!(s.quality[0] >= s.quality[1]);
        let mean: f64 = s.xs.iter().sum::<f64>() / s.len() as f64;
        assert!(mean.abs() < 1e-9);
    }

    #[test]
    fn sweep_endpoints_bracket_the_baseline() {
        let flat = holdout_at(0.0, 7).unwrap();
        let strong = holdout_at(0.8, 7).unwrap();
        assert!((flat.accuracy - flat.majority).abs() < 0.05);
        assert!(strong.accuracy > strong.majority);
    }

    #[test]
    fn bad_perplexity_is_an_error() {
        assert!(tsne_points(0.5, 20, 50.0, 1).is_err());
    }
}
