//! Normalized spectral clustering (Ng, Jordan and Weiss).

use nalgebra::{DMatrix, SymmetricEigen};

use super::{kernel_matrix, kmeans, InitKind, KernelSpec, Metric, Partition};
use crate::error::{invalid, Error, Result};

/// Spectral clustering of the rows of `x` with affinities from `spec`.
pub fn spectral_cluster(x: &DMatrix<f64>, k: usize, spec: &KernelSpec, seed: u64) -> Result<Partition> {
    spectral_from_affinity(&kernel_matrix(x, spec)?, k, seed)
}

/// Clusters items given a non-negative symmetric affinity matrix. The
/// diagonal is ignored.
pub fn spectral_from_affinity(affinity: &DMatrix<f64>, k: usize, seed: u64) -> Result<Partition> {
    let n = affinity.nrows();
    if affinity.ncols() != n || n == 0 {
        return invalid("affinity matrix must be square and non-empty");
    }
    if k == 0 || k > n {
        return invalid(format!("cannot form {k} clusters from {n} items"));
    }
    if affinity.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return invalid("affinities must be finite and non-negative");
    }
    let mut a = affinity.clone();
    for i in 0..n {
        a[(i, i)] = 0.0;
    }
    let deg: Vec<f64> = (0..n).map(|i| a.row(i).sum()).collect();
    if deg.iter().any(|&d| d <= 0.0) {
        return Err(Error::NumericalFailure("isolated item in affinity graph".into()));
    }
    let l = DMatrix::from_fn(n, n, |i, j| a[(i, j)] / (deg[i] * deg[j]).sqrt());
    let eig = SymmetricEigen::new(l);
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&x, &y| eig.eigenvalues[y].total_cmp(&eig.eigenvalues[x]).then(x.cmp(&y)));
    let mut u = DMatrix::from_fn(n, k, |i, c| eig.eigenvectors[(i, idx[c])]);
    for mut row in u.row_iter_mut() {
        let norm = row.norm();
        if norm > 0.0 {
            row /= norm;
        }
    }
    kmeans(&u, k, InitKind::KMeansPlusPlus, Metric::Euclidean, seed)
}
