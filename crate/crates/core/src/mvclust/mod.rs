//! Multivariate clustering of feature matrices.

mod hierarchical;
pub(crate) mod init;
mod kernel;
mod kmeans;
mod spectral;

pub use hierarchical::{hcluster, Dendrogram, LinkageKind, Merge};
pub use init::{kmeanspp_init, InitKind};
pub use kernel::{
    kernel_kmeans, kernel_kmeans_fit, kernel_matrix, median_sigma, KernelFit, KernelSpec,
};
pub use kmeans::{kmeans, kmeans_fit, whiten, KMeansConfig, KMeansFit, Metric};
pub use spectral::{spectral_cluster, spectral_from_affinity};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Cluster assignment of `n` items into `k` clusters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    assign: Vec<usize>,
    k: usize,
}

impl Partition {
    pub fn new(assign: Vec<usize>, k: usize) -> Result<Self> {
        if let Some(i) = assign.iter().position(|&a| a >= k) {
            return invalid(format!("item {i} assigned to cluster {} >= k = {k}", assign[i]));
        }
        Ok(Self { assign, k })
    }

    /// Relabels arbitrary ids to `0..k` in order of first appearance.
    pub fn from_labels(labels: &[usize]) -> Self {
        let mut map = std::collections::HashMap::new();
        let assign = labels
            .iter()
            .map(|l| {
                let next = map.len();
                *map.entry(*l).or_insert(next)
            })
            .collect();
        Self { assign, k: map.len() }
    }

    pub fn assign(&self) -> &[usize] {
        &self.assign
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.assign.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assign.is_empty()
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![0; self.k];
        for &a in &self.assign {
            s[a] += 1;
        }
        s
    }

    pub fn n_nonempty(&self) -> usize {
        self.sizes().iter().filter(|&&s| s > 0).count()
    }

    /// Same partition with cluster ids renumbered by first appearance.
    pub fn canonical(&self) -> Self {
        let mut p = Self::from_labels(&self.assign);
        p.k = p.k.max(self.k);
        p
    }
}

/// Euclidean distance matrix between the rows of `x`.
pub fn pairwise_distances(x: &DMatrix<f64>) -> DMatrix<f64> {
    let sq = pairwise_sq_distances(x);
    sq.map(f64::sqrt)
}

pub(crate) fn pairwise_sq_distances(x: &DMatrix<f64>) -> DMatrix<f64> {
    let n = x.nrows();
    let mut d = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let v = sq_dist_rows(x, i, x, j);
            d[(i, j)] = v;
            d[(j, i)] = v;
        }
    }
    d
}

pub(crate) fn sq_dist_rows(a: &DMatrix<f64>, i: usize, b: &DMatrix<f64>, j: usize) -> f64 {
    (0..a.ncols()).map(|c| (a[(i, c)] - b[(j, c)]).powi(2)).sum()
}

/// Order in which rows are presented to the randomized algorithms. Sorting
/// by a permutation-invariant key makes results independent of input row
/// order; ties fall back to the lexicographic order of `tiebreak`.
pub(crate) fn canonical_order(keys: &[f64], tiebreak: &DMatrix<f64>) -> Vec<usize> {
    let mut order: Vec<usize> = (0..keys.len()).collect();
    order.sort_by(|&a, &b| {
        keys[a].total_cmp(&keys[b]).then_with(|| {
            let ra = tiebreak.row(a);
            let rb = tiebreak.row(b);
            ra.iter()
                .zip(rb.iter())
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        })
    });
    order
}

/// Squared distance of each row to the column means.
pub(crate) fn centroid_keys(x: &DMatrix<f64>) -> Vec<f64> {
    let p = x.ncols();
    let means: Vec<f64> = (0..p).map(|c| x.column(c).mean()).collect();
    (0..x.nrows())
        .map(|i| (0..p).map(|c| (x[(i, c)] - means[c]).powi(2)).sum())
        .collect()
}

pub(crate) fn permute_rows(x: &DMatrix<f64>, order: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(order.len(), x.ncols(), |i, c| x[(order[i], c)])
}

pub(crate) fn unpermute(assign_sorted: &[usize], order: &[usize]) -> Vec<usize> {
    let mut out = vec![0; order.len()];
    for (pos, &orig) in order.iter().enumerate() {
        out[orig] = assign_sorted[pos];
    }
    out
}

/// Means of the rows of `x` per cluster; empty clusters get a zero row.
pub(crate) fn cluster_means(x: &DMatrix<f64>, assign: &[usize], k: usize) -> DMatrix<f64> {
    let p = x.ncols();
    let mut sums = DMatrix::zeros(k, p);
    let mut counts = vec![0usize; k];
    for (i, &a) in assign.iter().enumerate() {
        counts[a] += 1;
        for c in 0..p {
            sums[(a, c)] += x[(i, c)];
        }
    }
    for (a, &cnt) in counts.iter().enumerate() {
        if cnt > 0 {
            for c in 0..p {
                sums[(a, c)] /= cnt as f64;
            }
        }
    }
    sums
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_four_five() {
        let x = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 3.0, 4.0]);
        let d = pairwise_distances(&x);
        assert_eq!(d[(0, 1)], 5.0);
        assert_eq!(d[(1, 0)], 5.0);
        assert_eq!(d[(0, 0)], 0.0);
    }

    #[test]
    fn identical_rows_are_at_zero() {
        let x = DMatrix::from_row_slice(3, 2, &[1.5, -2.0, 1.5, -2.0, 0.0, 1.0]);
        assert_eq!(pairwise_distances(&x)[(0, 1)], 0.0);
    }

    #[test]
    fn distances_match_direct_recomputation() {
        let vals = [
            0.3, -1.2, 2.2, 1.0, 0.0, 0.5, -0.7, 0.25, 1.9, 3.3, -2.1, 0.8, 0.0, 0.0, 0.0, 1.1,
            1.2, 1.3,
        ];
        let x = DMatrix::from_row_slice(6, 3, &vals);
        let d = pairwise_distances(&x);
        for i in 0..6 {
            for j in 0..6 {
                let direct = (0..3)
                    .map(|c| (vals[i * 3 + c] - vals[j * 3 + c]).powi(2))
                    .sum::<f64>()
                    .sqrt();
                assert_eq!(d[(i, j)], direct);
            }
        }
    }

    #[test]
    fn partition_validation_and_relabel() {
        assert!(Partition::new(vec![0, 2], 2).is_err());
        let p = Partition::from_labels(&[7, 7, 3, 9, 3]);
        assert_eq!(p.assign(), &[0, 0, 1, 2, 1]);
        assert_eq!(p.k(), 3);
        assert_eq!(p.sizes(), vec![2, 2, 1]);
    }
}
