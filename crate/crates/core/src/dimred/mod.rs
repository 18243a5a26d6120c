//! Optional dimensionality reduction and clustering stages.
//!
//! PCA and exact t-SNE produce a low-dimensional view of the scaled matrix;
//! k-means on that view yields a cluster id per row, which is appended to the
//! feature matrix as the relative size of the row's cluster.

mod kmeans;
mod pca;
mod tsne;

use std::io::Write;
use std::path::Path;

use crate::encoding::EncodedMatrix;
use crate::error::{Error, Result};
use crate::matrix::Matrix;

pub use kmeans::{kmeans_fit, kmeans_fit_with, nearest, KmeansModel, DEFAULT_MAX_ITER};
pub use pca::{pca_fit, pca_transform, symmetric_eigen, Components, PcaModel};
pub use tsne::{joint_probabilities, kl_divergence, tsne_embed, Affinities, TsneConfig, TsneEmbedding};

pub const CLUSTER_COLUMN: &str = "cluster";
pub const DEFAULT_K: usize = 4;

/// Relative size of each row's cluster.
pub fn cluster_frequencies(assignments: &[usize]) -> Vec<f64> {
    let k = assignments.iter().max().map_or(0, |m| m + 1);
    let mut counts = vec![0usize; k];
    for &a in assignments {
        counts[a] += 1;
    }
    let n = assignments.len() as f64;
    assignments.iter().map(|&a| counts[a] as f64 / n).collect()
}

/// Appends the cluster column (unscaled) to `em`.
pub fn append_cluster_feature(em: &EncodedMatrix, model: &KmeansModel) -> Result<EncodedMatrix> {
    append_cluster_column(em, &model.assignments)
}

pub fn append_cluster_column(em: &EncodedMatrix, assignments: &[usize]) -> Result<EncodedMatrix> {
    if assignments.len() != em.n_rows() {
        return Err(Error::domain(format!(
            "{} cluster assignments for {} rows",
            assignments.len(),
            em.n_rows()
        )));
    }
    let matrix = em.matrix.with_column(&cluster_frequencies(assignments))?;
    let mut columns = em.columns.clone();
    columns.push(CLUSTER_COLUMN.to_string());
    let mut provenance = em.provenance.clone();
    provenance.push("kmeans_cluster".to_string());
    Ok(EncodedMatrix {
        matrix,
        columns,
        labels: em.labels.clone(),
        provenance,
    })
}

/// Writes `row,x1..xd,cluster` lines for plotting.
pub fn write_embedding_csv<W: Write>(mut w: W, coords: &Matrix, clusters: &[usize]) -> Result<()> {
    if clusters.len() != coords.rows() {
        return Err(Error::domain("cluster count does not match embedding rows"));
    }
    let dims: Vec<String> = (1..=coords.cols()).map(|d| format!("x{d}")).collect();
    let io = |e| Error::io("<embedding>", e);
    writeln!(w, "row,{},cluster", dims.join(",")).map_err(io)?;
    for (i, (row, c)) in coords.iter_rows().zip(clusters).enumerate() {
        let vals: Vec<String> = row.iter().map(|v| format!("{v:.6}")).collect();
        writeln!(w, "{i},{},{c}", vals.join(",")).map_err(io)?;
    }
    Ok(())
}

pub fn save_embedding_csv(path: &Path, coords: &Matrix, clusters: &[usize]) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_embedding_csv(std::io::BufWriter::new(file), coords, clusters)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn em(rows: usize) -> EncodedMatrix {
        let m = Matrix::from_vec(rows, 1, (0..rows).map(|i| i as f64).collect()).unwrap();
        EncodedMatrix::new(m, vec!["f".into()], vec![0; rows]).unwrap()
    }

    #[test]
    fn cluster_column_is_relative_size() {
        let out = append_cluster_column(&em(4), &[0, 0, 1, 1]).unwrap();
        assert_eq!(out.matrix.column(1), vec![0.5; 4]);
        assert_eq!(out.columns.last().unwrap(), CLUSTER_COLUMN);
        let out = append_cluster_column(&em(4), &[0, 0, 0, 1]).unwrap();
        assert_eq!(out.matrix.column(1), vec![0.75, 0.75, 0.75, 0.25]);
        assert!(append_cluster_column(&em(4), &[0, 1]).is_err());
    }

    #[test]
    fn embedding_csv_layout() {
        let coords = Matrix::from_rows(&[vec![1.0, 2.0], vec![-0.5, 0.25]]).unwrap();
        let mut buf = Vec::new();
        write_embedding_csv(&mut buf, &coords, &[1, 0]).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "row,x1,x2,cluster\n0,1.000000,2.000000,1\n1,-0.500000,0.250000,0\n"
        );
    }
}
