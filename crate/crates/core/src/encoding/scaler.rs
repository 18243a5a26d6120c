use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Per-column mean and population standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardScaler {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
    /// Columns whose fitted values were all identical; they scale to 0.
    pub constant: Vec<bool>,
}

pub fn fit_scaler(m: &Matrix) -> Result<StandardScaler> {
    if m.rows() == 0 {
        return Err(Error::domain("cannot fit a scaler on an empty matrix"));
    }
    let n = m.rows() as f64;
    let mut means = Vec::with_capacity(m.cols());
    let mut stds = Vec::with_capacity(m.cols());
    let mut constant = Vec::with_capacity(m.cols());
    for c in 0..m.cols() {
        let col = m.column(c);
        let mean = col.iter().sum::<f64>() / n;
        let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        let first = col[0];
        let is_const = col.iter().all(|&v| v == first);
        means.push(mean);
        stds.push(if is_const { 0.0 } else { var.sqrt() });
        constant.push(is_const);
    }
    Ok(StandardScaler {
        means,
        stds,
        constant,
    })
}

impl StandardScaler {
    pub fn apply(&self, m: &Matrix) -> Result<Matrix> {
        if m.cols() != self.means.len() {
            return Err(Error::domain(format!(
                "scaler fitted on {} columns, got {}",
                self.means.len(),
                m.cols()
            )));
        }
        let mut out = m.clone();
        for r in 0..m.rows() {
            let row = out.row_mut(r);
            for (c, v) in row.iter_mut().enumerate() {
                *v = if self.constant[c] || self.stds[c] == 0.0 {
                    0.0
                } else {
                    (*v - self.means[c]) / self.stds[c]
                };
            }
        }
        Ok(out)
    }
}

pub fn apply_scaler(m: &Matrix, scaler: &StandardScaler) -> Result<Matrix> {
    scaler.apply(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn two_values() {
        let m = Matrix::from_column(&[2.0, 4.0]);
        let s = fit_scaler(&m).unwrap();
        assert_eq!(s.means, vec![3.0]);
        assert_eq!(s.stds, vec![1.0]);
        assert_eq!(s.apply(&m).unwrap().column(0), vec![-1.0, 1.0]);
    }

    #[test]
    fn constant_column_maps_to_zero() {
        let m = Matrix::from_column(&[5.0, 5.0, 5.0]);
        let s = fit_scaler(&m).unwrap();
        assert!(s.constant[0]);
        assert_eq!(s.apply(&m).unwrap().column(0), vec![0.0; 3]);
        // 0.1 is not exactly representable; still flagged constant
        let m = Matrix::from_column(&[0.1, 0.1, 0.1]);
        assert_eq!(fit_scaler(&m).unwrap().apply(&m).unwrap().column(0), vec![0.0; 3]);
    }

    #[test]
    fn empty_rejected_and_width_checked() {
        assert!(fit_scaler(&Matrix::zeros(0, 3)).is_err());
        let s = fit_scaler(&Matrix::zeros(2, 3)).unwrap();
        assert!(s.apply(&Matrix::zeros(2, 2)).is_err());
    }

    proptest! {
        #[test]
        fn standardizes(data in proptest::collection::vec(-1e3f64..1e3, 30)) {
            let m = Matrix::from_vec(10, 3, data).unwrap();
            let s = fit_scaler(&m).unwrap();
            let z = s.apply(&m).unwrap();
            for c in 0..3 {
                if s.constant[c] { continue; }
                let col = z.column(c);
                let mean = col.iter().sum::<f64>() / 10.0;
                let sd = (col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 10.0).sqrt();
                prop_assert!(mean.abs() < 1e-9);
                prop_assert!((sd - 1.0).abs() < 1e-9);
            }
        }
    }
}
