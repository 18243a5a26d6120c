use serde::Serialize;

use super::cv::{cross_validate, CvResult, SelectionMetric};
use super::folds::FoldPlan;
use crate::ensemble::ModelSpec;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng;

/// Named parameter axes; the first axis varies slowest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GridSpec {
    pub axes: Vec<(String, Vec<String>)>,
}

impl GridSpec {
    /// Parses `key=v1,v2` entries separated by newlines or `;`. `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut axes: Vec<(String, Vec<String>)> = Vec::new();
        for entry in text.lines().map(|l| l.split('#').next().unwrap_or("")).flat_map(|l| l.split(';')) {
            let entry = entry.trim();
            if entry.is_empty() {
                continue;
            }
            let (key, values) = entry
                .split_once('=')
                .ok_or_else(|| Error::config(format!("grid entry `{entry}` lacks `=`")))?;
            let key = key.trim().to_string();
            let values: Vec<String> = values.split(',').map(|v| v.trim().to_string()).filter(|v| !v.is_empty()).collect();
            if values.is_empty() {
                return Err(Error::config(format!("grid axis `{key}` has no values")));
            }
            if axes.iter().any(|(k, _)| *k == key) {
                return Err(Error::config(format!("grid axis `{key}` given twice")));
            }
            axes.push((key, values));
        }
        let grid = GridSpec { axes };
        grid.check()?;
        Ok(grid)
    }

    fn check(&self) -> Result<()> {
        if self.axes.is_empty() {
            return Err(Error::config("empty parameter grid"));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|(_, v)| v.len()).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Every configuration in odometer order.
    pub fn configurations(&self) -> Vec<Vec<(String, String)>> {
        let mut out = vec![Vec::new()];
        for (key, values) in &self.axes {
            out = out
                .into_iter()
                .flat_map(|prefix: Vec<(String, String)>| {
                    values.iter().map(move |v| {
                        let mut c = prefix.clone();
                        c.push((key.clone(), v.clone()));
                        c
                    })
                })
                .collect();
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TuneEntry {
    pub params: Vec<(String, String)>,
    pub cv: CvResult,
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TuneResult {
    pub metric: SelectionMetric,
    /// In grid order.
    pub entries: Vec<TuneEntry>,
    /// Entry indices, best first; ties keep grid order.
    pub ranking: Vec<usize>,
}

impl TuneResult {
    pub fn best(&self) -> &TuneEntry {
        &self.entries[self.ranking[0]]
    }
}

/// Exhaustive search; configuration `i` is cross-validated with master seed
/// `derive_seed(seed, [i])`.
#[allow(clippy::too_many_arguments)]
pub fn grid_search(
    base: &ModelSpec,
    grid: &GridSpec,
    x: &Matrix,
    labels: &[usize],
    n_classes: usize,
    plan: &FoldPlan,
    seed: u64,
    metric: SelectionMetric,
) -> Result<TuneResult> {
    grid.check()?;
    let mut entries = Vec::with_capacity(grid.len());
    for (i, params) in grid.configurations().into_iter().enumerate() {
        let mut spec = base.clone();
        for (k, v) in &params {
            spec.set(k, v)?;
        }
        let cv = cross_validate(&spec, x, labels, n_classes, plan, rng::derive_seed(seed, &[i as u64]))?;
        entries.push(TuneEntry {
            mean: cv.mean(metric),
            std: cv.std(metric),
            params,
            cv,
        });
    }
    let mut ranking: Vec<usize> = (0..entries.len()).collect();
    ranking.sort_by(|&a, &b| entries[b].mean.total_cmp(&entries[a].mean).then(a.cmp(&b)));
    Ok(TuneResult { metric, entries, ranking })
}
