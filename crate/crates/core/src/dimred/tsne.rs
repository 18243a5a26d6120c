use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::{par, rng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TsneConfig {
    pub perplexity: f64,
    pub dims: usize,
    pub iterations: usize,
    pub learning_rate: f64,
    pub early_exaggeration: f64,
    /// Iterations run with exaggerated affinities and the initial momentum.
    pub exaggeration_iters: usize,
    pub initial_momentum: f64,
    pub final_momentum: f64,
    pub seed: u64,
}

impl Default for TsneConfig {
    fn default() -> Self {
        Self {
            perplexity: 30.0,
            dims: 2,
            iterations: 1000,
            learning_rate: 200.0,
            early_exaggeration: 12.0,
            exaggeration_iters: 250,
            initial_momentum: 0.5,
            final_momentum: 0.8,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TsneEmbedding {
    pub coords: Matrix,
    pub initial_kl: f64,
    pub kl: f64,
    /// Perplexity actually reached by each row's conditional distribution.
    pub row_perplexity: Vec<f64>,
}

/// Joint affinities of the high-dimensional points.
#[derive(Debug, Clone, PartialEq)]
pub struct Affinities {
    pub p: Matrix,
    pub row_perplexity: Vec<f64>,
}

fn squared_distances(m: &Matrix) -> Vec<Vec<f64>> {
    par::map(m.rows(), |i| {
        let xi = m.row(i);
        m.iter_rows()
            .map(|xj| xi.iter().zip(xj).map(|(a, b)| (a - b) * (a - b)).sum())
            .collect()
    })
}

/// Conditional distribution of row `i` at precision `beta`, with its entropy
/// in nats. Distances are shifted by their minimum for stability.
fn conditional(dist: &[f64], i: usize, beta: f64, shift: f64) -> (Vec<f64>, f64) {
    let mut p: Vec<f64> = dist
        .iter()
        .enumerate()
        .map(|(j, &d)| if j == i { 0.0 } else { (-(d - shift) * beta).exp() })
        .collect();
    let sum: f64 = p.iter().sum();
    let weighted: f64 = p.iter().zip(dist).map(|(pj, d)| pj * (d - shift)).sum();
    let h = sum.ln() + beta * weighted / sum;
    p.iter_mut().for_each(|v| *v /= sum);
    (p, h)
}

fn calibrate_row(dist: &[f64], i: usize, perplexity: f64) -> (Vec<f64>, f64) {
    let target = perplexity.ln();
    let shift = dist
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != i)
        .map(|(_, &d)| d)
        .fold(f64::INFINITY, f64::min);
    let (mut lo, mut hi) = (0.0f64, f64::INFINITY);
    let mut beta = 1.0;
    let mut best = conditional(dist, i, beta, shift);
    for _ in 0..200 {
        let diff = best.1 - target;
        if (best.1.exp() - perplexity).abs() < 1e-6 {
            break;
        }
        if diff > 0.0 {
            lo = beta;
            beta = if hi.is_finite() { (beta + hi) / 2.0 } else { beta * 2.0 };
        } else {
            hi = beta;
            beta = (beta + lo) / 2.0;
        }
        best = conditional(dist, i, beta, shift);
    }
    (best.0, best.1.exp())
}

/// Symmetrized affinities `p_ij = (p_j|i + p_i|j) / 2n`.
pub fn joint_probabilities(m: &Matrix, perplexity: f64) -> Result<Affinities> {
    let n = m.rows();
    if n < 2 {
        return Err(Error::domain("affinities need at least two rows"));
    }
    if !(perplexity >= 1.0 && perplexity < (n - 1) as f64) {
        return Err(Error::config(format!(
            "perplexity {perplexity} infeasible for {n} rows"
        )));
    }
    let dist = squared_distances(m);
    let rows = par::map(n, |i| calibrate_row(&dist[i], i, perplexity));
    let mut p = Matrix::zeros(n, n);
    let denom = 2.0 * n as f64;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                p.set(i, j, (rows[i].0[j] + rows[j].0[i]) / denom);
            }
        }
    }
    Ok(Affinities {
        p,
        row_perplexity: rows.into_iter().map(|r| r.1).collect(),
    })
}

/// Student-t kernel rows `1 / (1 + |y_i - y_j|²)` with zero diagonal.
fn student_kernel(y: &Matrix) -> Vec<Vec<f64>> {
    par::map(y.rows(), |i| {
        let yi = y.row(i);
        y.iter_rows()
            .enumerate()
            .map(|(j, yj)| {
                if i == j {
                    0.0
                } else {
                    let d: f64 = yi.iter().zip(yj).map(|(a, b)| (a - b) * (a - b)).sum();
                    1.0 / (1.0 + d)
                }
            })
            .collect()
    })
}

fn normalizer(kernel: &[Vec<f64>]) -> f64 {
    kernel.iter().map(|r| r.iter().sum::<f64>()).sum()
}

/// KL(P || Q) of an embedding.
pub fn kl_divergence(p: &Matrix, y: &Matrix) -> f64 {
    let kernel = student_kernel(y);
    let z = normalizer(&kernel);
    let mut kl = 0.0;
    for (i, row) in kernel.iter().enumerate() {
        for (j, &k) in row.iter().enumerate() {
            let pij = p.get(i, j);
            if pij > 0.0 {
                let q = (k / z).max(f64::MIN_POSITIVE);
                kl += pij * (pij / q).ln();
            }
        }
    }
    kl.max(0.0)
}

fn validate(n: usize, config: &TsneConfig) -> Result<()> {
    if n < 4 {
        return Err(Error::domain(format!("t-SNE needs at least 4 rows, got {n}")));
    }
    if !(config.perplexity >= 1.0 && config.perplexity < (n - 1) as f64) {
        return Err(Error::config(format!(
            "perplexity {} must lie in [1, {})",
            config.perplexity,
            n - 1
        )));
    }
    if config.dims == 0 || config.iterations == 0 {
        return Err(Error::config("t-SNE dims and iterations must be positive"));
    }
    if !(config.learning_rate > 0.0) || !(config.early_exaggeration >= 1.0) {
        return Err(Error::config(
            "t-SNE learning rate must be positive and exaggeration at least 1",
        ));
    }
    Ok(())
}

pub fn tsne_embed(m: &Matrix, config: &TsneConfig) -> Result<TsneEmbedding> {
    let n = m.rows();
    validate(n, config)?;
    let aff = joint_probabilities(m, config.perplexity)?;
    let p = &aff.p;
    let dims = config.dims;

    let mut rng = rng::seeded(config.seed);
    let normal = Normal::new(0.0, 1e-4).expect("valid normal");
    let mut y = Matrix::from_vec(n, dims, (0..n * dims).map(|_| normal.sample(&mut rng)).collect())?;
    let initial_kl = kl_divergence(p, &y);

    let mut update = Matrix::zeros(n, dims);
    let mut gains = Matrix::from_vec(n, dims, vec![1.0; n * dims])?;
    for iter in 0..config.iterations {
        let early = iter < config.exaggeration_iters;
        let exaggeration = if early { config.early_exaggeration } else { 1.0 };
        let momentum = if early { config.initial_momentum } else { config.final_momentum };

        let kernel = student_kernel(&y);
        let z = normalizer(&kernel);
        let grads = par::map(n, |i| {
            let yi = y.row(i);
            let mut g = vec![0.0; dims];
            for (j, &k) in kernel[i].iter().enumerate() {
                if j == i {
                    continue;
                }
                let coeff = (exaggeration * p.get(i, j) - k / z) * k;
                for (gd, (a, b)) in g.iter_mut().zip(yi.iter().zip(y.row(j))) {
                    *gd += 4.0 * coeff * (a - b);
                }
            }
            g
        });
        for (i, g) in grads.iter().enumerate() {
            for d in 0..dims {
                let (gr, up) = (g[d], update.get(i, d));
                let mut gain = gains.get(i, d);
                gain = if (gr > 0.0) != (up > 0.0) { gain + 0.2 } else { gain * 0.8 };
                gain = gain.max(0.01);
                gains.set(i, d, gain);
                let u = momentum * up - config.learning_rate * gain * gr;
                update.set(i, d, u);
                y.set(i, d, y.get(i, d) + u);
            }
        }
        for d in 0..dims {
            let mean = y.column(d).iter().sum::<f64>() / n as f64;
            for i in 0..n {
                y.set(i, d, y.get(i, d) - mean);
            }
        }
    }
    if !y.is_finite() {
        return Err(Error::domain("t-SNE diverged to non-finite coordinates"));
    }
    let kl = kl_divergence(p, &y);
    Ok(TsneEmbedding {
        coords: y,
        initial_kl,
        kl,
        row_perplexity: aff.row_perplexity,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng as _;

    fn random_matrix(n: usize, d: usize, seed: u64) -> Matrix {
        let mut r = rng::seeded(seed);
        Matrix::from_vec(n, d, (0..n * d).map(|_| r.random::<f64>()).collect()).unwrap()
    }

    #[test]
    fn equidistant_triangle_is_uniform() {
        let m = Matrix::from_rows(&[
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ])
        .unwrap();
        let a = joint_probabilities(&m, 1.5).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 0.0 } else { 1.0 / 6.0 };
                assert!((a.p.get(i, j) - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn affinities_are_a_symmetric_distribution() {
        let m = random_matrix(60, 5, 3);
        let a = joint_probabilities(&m, 10.0).unwrap();
        let mut total = 0.0;
        for i in 0..60 {
            for j in 0..60 {
                assert!(a.p.get(i, j) >= 0.0);
                assert_eq!(a.p.get(i, j), a.p.get(j, i));
                total += a.p.get(i, j);
            }
        }
        assert!((total - 1.0).abs() < 1e-9);
        assert!(a.row_perplexity.iter().all(|p| (p - 10.0).abs() < 1e-3));
    }

    #[test]
    fn infeasible_perplexity() {
        let m = random_matrix(5, 2, 1);
        let cfg = TsneConfig { perplexity: 4.0, ..Default::default() };
        assert!(matches!(tsne_embed(&m, &cfg), Err(Error::Config(_))));
        assert!(tsne_embed(&random_matrix(3, 2, 1), &TsneConfig::default()).is_err());
    }

    #[test]
    fn optimizer_lowers_kl() {
        let m = random_matrix(40, 4, 11);
        let cfg = TsneConfig { perplexity: 8.0, seed: 5, ..Default::default() };
        let e = tsne_embed(&m, &cfg).unwrap();
        assert!(e.kl < e.initial_kl);
        assert!(e.kl >= 0.0 && e.coords.is_finite());
        assert_eq!(e, tsne_embed(&m, &cfg).unwrap());
    }

    #[test]
    fn duplicated_pair_are_mutual_neighbours() {
        let mut rows: Vec<Vec<f64>> = (0..20)
            .map(|i| vec![(i * 10) as f64, ((i * 7) % 13) as f64 * 10.0, (i % 3) as f64 * 10.0])
            .collect();
        rows.push(rows[4].clone());
        let m = Matrix::from_rows(&rows).unwrap();
        let cfg = TsneConfig { perplexity: 5.0, iterations: 500, seed: 2, ..Default::default() };
        let e = tsne_embed(&m, &cfg).unwrap();
        let nn = |i: usize| {
            (0..rows.len())
                .filter(|&j| j != i)
                .min_by(|&a, &b| {
                    let da: f64 = (0..2).map(|d| (e.coords.get(i, d) - e.coords.get(a, d)).powi(2)).sum();
                    let db: f64 = (0..2).map(|d| (e.coords.get(i, d) - e.coords.get(b, d)).powi(2)).sum();
                    da.total_cmp(&db)
                })
                .unwrap()
        };
        assert_eq!(nn(4), 20);
        assert_eq!(nn(20), 4);
    }
}
