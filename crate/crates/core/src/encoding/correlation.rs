use std::io::Write;

use super::EncodedMatrix;
use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Symmetric Pearson correlation matrix over named columns.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    pub names: Vec<String>,
    pub values: Matrix,
    /// Constant columns; their off-diagonal correlations are reported as 0.
    pub constant: Vec<bool>,
}

impl CorrelationMatrix {
    pub fn get(&self, a: &str, b: &str) -> Option<f64> {
        let i = self.names.iter().position(|n| n == a)?;
        let j = self.names.iter().position(|n| n == b)?;
        Some(self.values.get(i, j))
    }

    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec![String::new()];
        header.extend(self.names.iter().cloned());
        w.write_record(&header)?;
        for (i, name) in self.names.iter().enumerate() {
            let mut row = vec![name.clone()];
            row.extend(self.values.row(i).iter().map(|v| format!("{v:.6}")));
            w.write_record(&row)?;
        }
        w.flush().map_err(|e| Error::io("<correlation>", e))?;
        Ok(())
    }

    /// Pairs with |r| at or above `threshold`, strongest first.
    pub fn strong_pairs(&self, threshold: f64) -> Vec<(String, String, f64)> {
        let mut out = Vec::new();
        for i in 0..self.names.len() {
            for j in i + 1..self.names.len() {
                let r = self.values.get(i, j);
                if r.abs() >= threshold {
                    out.push((self.names[i].clone(), self.names[j].clone(), r));
                }
            }
        }
        out.sort_by(|a, b| b.2.abs().total_cmp(&a.2.abs()));
        out
    }
}

/// Pearson correlation of two equally long columns; `None` if either is constant.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    let const_x = x.iter().all(|&v| v == x[0]);
    let const_y = y.iter().all(|&v| v == y[0]);
    if const_x || const_y || sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

pub fn correlation_matrix(m: &EncodedMatrix, include_label: bool) -> Result<CorrelationMatrix> {
    if m.n_rows() < 2 {
        return Err(Error::domain("correlation needs at least two rows"));
    }
    let mut cols: Vec<Vec<f64>> = (0..m.n_cols()).map(|c| m.matrix.column(c)).collect();
    let mut names = m.columns.clone();
    if include_label {
        cols.push(m.labels.iter().map(|&l| l as f64).collect());
        names.push("risk_score".into());
    }
    let k = cols.len();
    let constant: Vec<bool> = cols.iter().map(|c| c.iter().all(|&v| v == c[0])).collect();
    let mut values = Matrix::zeros(k, k);
    for i in 0..k {
        values.set(i, i, 1.0);
        for j in i + 1..k {
            let r = pearson(&cols[i], &cols[j]).unwrap_or(0.0);
            values.set(i, j, r);
            values.set(j, i, r);
        }
    }
    Ok(CorrelationMatrix {
        names,
        values,
        constant,
    })
}
