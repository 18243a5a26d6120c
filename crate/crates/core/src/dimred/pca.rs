use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// How many principal components to keep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Components {
    Count(usize),
    /// Smallest count whose cumulative explained-variance ratio reaches the value.
    Variance(f64),
}

impl Default for Components {
    fn default() -> Self {
        Components::Variance(0.95)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    /// Orthonormal rows, ordered by decreasing eigenvalue.
    pub components: Vec<Vec<f64>>,
    pub explained_variance: Vec<f64>,
    pub explained_variance_ratio: Vec<f64>,
    pub means: Vec<f64>,
}

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Returns eigenvalues in decreasing order and the matching unit eigenvectors
/// (as rows). Each eigenvector is signed so its largest-magnitude entry is
/// positive.
pub fn symmetric_eigen(a: &Matrix) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.rows();
    let mut m: Vec<Vec<f64>> = (0..n).map(|i| a.row(i).to_vec()).collect();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    let norm: f64 = m.iter().flatten().map(|x| x * x).sum::<f64>().sqrt();

    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[i][j] * m[i][j])
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * norm.max(f64::MIN_POSITIVE) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[p][q];
                if apq.abs() < f64::MIN_POSITIVE {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (mkp, mkq) = (m[k][p], m[k][q]);
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let (mpk, mqk) = (m[p][k], m[q][k]);
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
                for row in v.iter_mut() {
                    let (vkp, vkq) = (row[p], row[q]);
                    row[p] = c * vkp - s * vkq;
                    row[q] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[j][j].total_cmp(&m[i][i]).then(i.cmp(&j)));
    let values = order.iter().map(|&i| m[i][i]).collect();
    let vectors = order
        .iter()
        .map(|&i| {
            let mut vec: Vec<f64> = (0..n).map(|k| v[k][i]).collect();
            let lead = vec
                .iter()
                .copied()
                .reduce(|a, b| if b.abs() > a.abs() { b } else { a })
                .unwrap_or(1.0);
            if lead < 0.0 {
                vec.iter_mut().for_each(|x| *x = -*x);
            }
            vec
        })
        .collect();
    (values, vectors)
}

pub fn pca_fit(m: &Matrix, n_components: Components) -> Result<PcaModel> {
    let (n, d) = (m.rows(), m.cols());
    if n == 0 || d == 0 {
        return Err(Error::domain("PCA of an empty matrix"));
    }
    let means: Vec<f64> = (0..d).map(|c| m.column(c).iter().sum::<f64>() / n as f64).collect();
    let mut cov = Matrix::zeros(d, d);
    for row in m.iter_rows() {
        for i in 0..d {
            let di = row[i] - means[i];
            for j in i..d {
                let v = cov.get(i, j) + di * (row[j] - means[j]);
                cov.set(i, j, v);
            }
        }
    }
    let denom = (n.max(2) - 1) as f64;
    for i in 0..d {
        for j in i..d {
            let v = cov.get(i, j) / denom;
            cov.set(i, j, v);
            cov.set(j, i, v);
        }
    }
    let (values, vectors) = symmetric_eigen(&cov);
    let values: Vec<f64> = values.into_iter().map(|v| v.max(0.0)).collect();
    let total: f64 = values.iter().sum();
    let ratios: Vec<f64> = values
        .iter()
        .map(|v| if total > 0.0 { v / total } else { 0.0 })
        .collect();

    let max_k = n.min(d);
    let k = match n_components {
        Components::Count(k) => {
            if k == 0 || k > max_k {
                return Err(Error::domain(format!(
                    "n_components {k} outside 1..={max_k}"
                )));
            }
            k
        }
        Components::Variance(target) => {
            if !(target > 0.0 && target <= 1.0) {
                return Err(Error::domain(format!("variance target {target} outside (0, 1]")));
            }
            let mut acc = 0.0;
            let mut k = max_k;
            for (i, r) in ratios.iter().enumerate().take(max_k) {
                acc += r;
                if acc >= target - 1e-12 {
                    k = i + 1;
                    break;
                }
            }
            k
        }
    };
    Ok(PcaModel {
        components: vectors.into_iter().take(k).collect(),
        explained_variance: values.iter().take(k).copied().collect(),
        explained_variance_ratio: ratios.into_iter().take(k).collect(),
        means,
    })
}

impl PcaModel {
    pub fn n_components(&self) -> usize {
        self.components.len()
    }

    pub fn transform(&self, m: &Matrix) -> Result<Matrix> {
        if m.cols() != self.means.len() {
            return Err(Error::domain(format!(
                "PCA fitted on {} features, got {}",
                self.means.len(),
                m.cols()
            )));
        }
        let k = self.components.len();
        let mut out = Matrix::zeros(m.rows(), k);
        for r in 0..m.rows() {
            let row = m.row(r);
            for (c, comp) in self.components.iter().enumerate() {
                let s: f64 = row
                    .iter()
                    .zip(&self.means)
                    .zip(comp)
                    .map(|((x, mu), w)| (x - mu) * w)
                    .sum();
                out.set(r, c, s);
            }
        }
        Ok(out)
    }

    /// Maps scores back to feature space (means added back).
    pub fn inverse_transform(&self, scores: &Matrix) -> Result<Matrix> {
        if scores.cols() != self.components.len() {
            return Err(Error::domain("score width does not match component count"));
        }
        let d = self.means.len();
        let mut out = Matrix::zeros(scores.rows(), d);
        for r in 0..scores.rows() {
            for j in 0..d {
                let v: f64 = scores
                    .row(r)
                    .iter()
                    .zip(&self.components)
                    .map(|(s, comp)| s * comp[j])
                    .sum();
                out.set(r, j, v + self.means[j]);
            }
        }
        Ok(out)
    }
}

pub fn pca_transform(m: &Matrix, model: &PcaModel) -> Result<Matrix> {
    model.transform(m)
}
