use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng;

pub const DEFAULT_MAX_ITER: usize = 300;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KmeansModel {
    pub centroids: Matrix,
    pub assignments: Vec<usize>,
    pub inertia: f64,
    /// Inertia after every assignment step, first to last.
    pub inertia_history: Vec<f64>,
    pub iterations: usize,
    pub seed: u64,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Index of the nearest centroid and the squared distance to it.
pub fn nearest(centroids: &Matrix, x: &[f64]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, row) in centroids.iter_rows().enumerate() {
        let d = sq_dist(row, x);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn assign(m: &Matrix, centroids: &Matrix) -> (Vec<usize>, Vec<f64>) {
    m.iter_rows().map(|x| nearest(centroids, x)).unzip()
}

fn plus_plus_init(m: &Matrix, k: usize, rng: &mut rng::Rng) -> Matrix {
    let n = m.rows();
    let mut chosen = vec![rng.random_range(0..n)];
    let mut d2: Vec<f64> = m.iter_rows().map(|x| sq_dist(x, m.row(chosen[0]))).collect();
    while chosen.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut t = rng.random::<f64>() * total;
            let mut pick = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                if w > 0.0 && t < w {
                    pick = i;
                    break;
                }
                t -= w;
            }
            // floating leftovers can walk past the end; take the last positive weight
            if d2[pick] == 0.0 {
                pick = d2.iter().rposition(|&w| w > 0.0).unwrap_or(pick);
            }
            pick
        } else {
            rng.random_range(0..n)
        };
        chosen.push(next);
        for (i, x) in m.iter_rows().enumerate() {
            d2[i] = d2[i].min(sq_dist(x, m.row(next)));
        }
    }
    m.select_rows(&chosen)
}

pub fn kmeans_fit(m: &Matrix, k: usize, seed: u64) -> Result<KmeansModel> {
    kmeans_fit_with(m, k, seed, DEFAULT_MAX_ITER)
}

pub fn kmeans_fit_with(m: &Matrix, k: usize, seed: u64, max_iter: usize) -> Result<KmeansModel> {
    let n = m.rows();
    if k == 0 || k > n {
        return Err(Error::domain(format!("k = {k} outside 1..={n}")));
    }
    if max_iter == 0 {
        return Err(Error::domain("max_iter must be at least 1"));
    }
    let d = m.cols();
    let mut rng = rng::seeded(seed);
    let mut centroids = plus_plus_init(m, k, &mut rng);
    let mut history = Vec::new();
    let mut previous: Option<Vec<usize>> = None;
    let mut iterations = 0;
    let (assignments, distances) = loop {
        let (assignments, distances) = assign(m, &centroids);
        history.push(distances.iter().sum());
        if previous.as_ref() == Some(&assignments) || iterations == max_iter {
            break (assignments, distances);
        }
        iterations += 1;

        let mut sums = Matrix::zeros(k, d);
        let mut counts = vec![0usize; k];
        for (x, &c) in m.iter_rows().zip(&assignments) {
            counts[c] += 1;
            for (s, v) in sums.row_mut(c).iter_mut().zip(x) {
                *s += v;
            }
        }
        let mut taken: Vec<usize> = Vec::new();
        for c in 0..k {
            if counts[c] > 0 {
                for s in sums.row_mut(c) {
                    *s /= counts[c] as f64;
                }
                centroids.row_mut(c).copy_from_slice(sums.row(c));
            } else {
                let far = distances
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| !taken.contains(i))
                    .fold((0, f64::NEG_INFINITY), |best, (i, &dist)| {
                        if dist > best.1 {
                            (i, dist)
                        } else {
                            best
                        }
                    })
                    .0;
                taken.push(far);
                centroids.row_mut(c).copy_from_slice(m.row(far));
            }
        }
        previous = Some(assignments);
    };
    Ok(KmeansModel {
        centroids,
        assignments,
        inertia: distances.iter().sum(),
        inertia_history: history,
        iterations,
        seed,
    })
}

impl KmeansModel {
    pub fn k(&self) -> usize {
        self.centroids.rows()
    }

    pub fn predict(&self, m: &Matrix) -> Result<Vec<usize>> {
        if m.cols() != self.centroids.cols() {
            return Err(Error::domain(format!(
                "centroids have {} dimensions, got {}",
                self.centroids.cols(),
                m.cols()
            )));
        }
        Ok(assign(m, &self.centroids).0)
    }

    /// Number of rows per cluster.
    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k()];
        for &a in &self.assignments {
            sizes[a] += 1;
        }
        sizes
    }
}
