use iotrisk::dimred::{pca_fit, Components};
use iotrisk::Matrix;
use nalgebra::{DMatrix, SymmetricEigen};
use proptest::prelude::*;

fn covariance(rows: &[Vec<f64>]) -> DMatrix<f64> {
    let n = rows.len();
    let d = rows[0].len();
    let x = DMatrix::from_fn(n, d, |i, j| rows[i][j]);
    let means = x.row_mean();
    let centered = DMatrix::from_fn(n, d, |i, j| x[(i, j)] - means[j]);
    centered.transpose() * &centered / (n as f64 - 1.0)
}

fn matrix(n: usize, d: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-10.0f64..10.0, d), n)
}

proptest! {
    #[test]
    fn components_match_reference_eigenvectors(rows in matrix(5, 3)) {
        let eig = SymmetricEigen::new(covariance(&rows));
        let mut order: Vec<usize> = (0..3).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        // well-separated spectrum only; degenerate eigenspaces have no unique basis
        let ev: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        prop_assume!(ev[0] - ev[1] > 1e-3 * ev[0] && ev[1] - ev[2] > 1e-3 * ev[0]);

        let pca = pca_fit(&Matrix::from_rows(&rows).unwrap(), Components::Count(3)).unwrap();
        for (c, &i) in order.iter().enumerate() {
            let reference = eig.eigenvectors.column(i);
            let cos: f64 = pca.components[c].iter().zip(reference.iter()).map(|(a, b)| a * b).sum();
            prop_assert!(cos.abs() > 1.0 - 1e-8, "component {c}: |cos| = {}", cos.abs());
            prop_assert!((pca.explained_variance[c] - ev[c]).abs() < 1e-9 * ev[0].max(1.0));
        }
    }

    #[test]
    fn full_rank_round_trip(rows in matrix(12, 4)) {
        let m = Matrix::from_rows(&rows).unwrap();
        let pca = pca_fit(&m, Components::Count(4)).unwrap();
        for a in 0..4 {
            for b in 0..4 {
                let dot: f64 = pca.components[a].iter().zip(&pca.components[b]).map(|(x, y)| x * y).sum();
                let want = if a == b { 1.0 } else { 0.0 };
                prop_assert!((dot - want).abs() < 1e-9);
            }
        }
        let total: f64 = pca.explained_variance_ratio.iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-9);

        let back = pca.inverse_transform(&pca.transform(&m).unwrap()).unwrap();
        let (mut err, mut norm) = (0.0, 0.0);
        for r in 0..12 {
            for c in 0..4 {
                let centered = m.get(r, c) - pca.means[c];
                err += (back.get(r, c) - m.get(r, c)).powi(2);
                norm += centered * centered;
            }
        }
        prop_assert!(err.sqrt() <= 1e-6 * norm.sqrt().max(1e-12));
    }
}
