//! Initialization strategies for the partitioning algorithms.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::seq::index::sample;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::{
    cluster_means, hcluster, kernel, kmeans, pairwise_distances, sq_dist_rows, LinkageKind,
};
use crate::error::{invalid, Error, Result};
use crate::rng::{rng_from, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum InitKind {
    /// Every item gets a uniformly random cluster.
    RandomPartition,
    /// `k` distinct items chosen uniformly as seeds.
    Forgy,
    /// D² sampling.
    KMeansPlusPlus,
    /// Ward.D2 partition cut at `k`.
    WardInit,
    /// Partition of a single k-means++ seeded k-means run.
    KMeansInit,
    /// Partition of a single Gaussian kernel k-means run.
    KernelKMeansInit,
}

impl InitKind {
    pub const ALL: [InitKind; 6] = [
        InitKind::RandomPartition,
        InitKind::Forgy,
        InitKind::KMeansPlusPlus,
        InitKind::WardInit,
        InitKind::KMeansInit,
        InitKind::KernelKMeansInit,
    ];

    pub fn name(self) -> &'static str {
        match self {
            InitKind::RandomPartition => "random-partition",
            InitKind::Forgy => "forgy",
            InitKind::KMeansPlusPlus => "kmeans++",
            InitKind::WardInit => "ward",
            InitKind::KMeansInit => "kmeans",
            InitKind::KernelKMeansInit => "kkmeans",
        }
    }

    /// Whether restarts would all produce the same starting point.
    pub fn is_deterministic(self) -> bool {
        matches!(self, InitKind::WardInit)
    }
}

impl fmt::Display for InitKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for InitKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        InitKind::ALL
            .into_iter()
            .find(|i| i.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown init `{s}`")))
    }
}

/// k-means++ seed indices for the rows of `x`.
pub fn kmeanspp_init(x: &DMatrix<f64>, k: usize, seed: u64) -> Result<Vec<usize>> {
    let n = x.nrows();
    if k == 0 || k > n {
        return invalid(format!("cannot choose {k} seeds from {n} rows"));
    }
    let mut rng = rng_from(seed);
    Ok(kmeanspp_with(&mut rng, n, k, |i, j| sq_dist_rows(x, i, x, j)))
}

/// D² sampling over `n` items given a squared dissimilarity.
pub(crate) fn kmeanspp_with(
    rng: &mut Rng,
    n: usize,
    k: usize,
    dist2: impl Fn(usize, usize) -> f64,
) -> Vec<usize> {
    let mut chosen = Vec::with_capacity(k);
    let mut taken = vec![false; n];
    let first = rng.random_range(0..n);
    chosen.push(first);
    taken[first] = true;
    let mut d2: Vec<f64> = (0..n).map(|i| dist2(i, first).max(0.0)).collect();
    while chosen.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 && total.is_finite() {
            let r = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (i, &w) in d2.iter().enumerate() {
                if w <= 0.0 {
                    continue;
                }
                acc += w;
                pick = Some(i);
                if acc > r {
                    break;
                }
            }
            pick.expect("positive total has a positive weight")
        } else {
            let free: Vec<usize> = (0..n).filter(|&i| !taken[i]).collect();
            free[rng.random_range(0..free.len())]
        };
        chosen.push(next);
        taken[next] = true;
        for (i, v) in d2.iter_mut().enumerate() {
            *v = v.min(dist2(i, next).max(0.0));
        }
    }
    chosen
}

pub(crate) fn forgy_indices(rng: &mut Rng, n: usize, k: usize) -> Vec<usize> {
    sample(rng, n, k).into_vec()
}

pub(crate) fn random_partition(rng: &mut Rng, n: usize, k: usize) -> Vec<usize> {
    (0..n).map(|_| rng.random_range(0..k)).collect()
}

/// Starting centers for Lloyd iterations on `x`.
pub(crate) fn initial_centers(
    x: &DMatrix<f64>,
    k: usize,
    init: InitKind,
    rng: &mut Rng,
) -> Result<DMatrix<f64>> {
    let n = x.nrows();
    let rows = |idx: &[usize]| DMatrix::from_fn(idx.len(), x.ncols(), |i, c| x[(idx[i], c)]);
    Ok(match init {
        InitKind::RandomPartition => {
            let assign = random_partition(rng, n, k);
            let mut means = cluster_means(x, &assign, k);
            // Empty random clusters start out of reach; the empty-cluster
            // repair of the first assignment step seeds them.
            let mut counts = vec![0usize; k];
            for &a in &assign {
                counts[a] += 1;
            }
            for (c, &cnt) in counts.iter().enumerate() {
                if cnt == 0 {
                    means.row_mut(c).fill(f64::INFINITY);
                }
            }
            means
        }
        InitKind::Forgy => rows(&forgy_indices(rng, n, k)),
        InitKind::KMeansPlusPlus => rows(&kmeanspp_with(rng, n, k, |i, j| sq_dist_rows(x, i, x, j))),
        InitKind::WardInit => {
            let p = hcluster(&pairwise_distances(x), LinkageKind::WardD2)?.cut(k)?;
            cluster_means(x, p.assign(), k)
        }
        InitKind::KMeansInit => {
            let seed = rng.random::<u64>();
            let cfg = kmeans::KMeansConfig { max_iter: 100, restarts: 1 };
            let fit = kmeans::lloyd_from(x, k, InitKind::KMeansPlusPlus, seed, &cfg)?;
            cluster_means(x, &fit.0, k)
        }
        InitKind::KernelKMeansInit => {
            let sigma = kernel::median_sigma(x);
            let km = kernel::kernel_matrix(x, &kernel::KernelSpec::Gaussian { sigma })?;
            let seed = rng.random::<u64>();
            let assign = kernel::single_run(&km, k, InitKind::KMeansPlusPlus, seed, 100)?;
            cluster_means(x, &assign, k)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kmeanspp_picks_distinct_rows() {
        let x = DMatrix::from_fn(20, 2, |i, j| (i * (j + 1)) as f64);
        for seed in 0..20 {
            let mut s = kmeanspp_init(&x, 5, seed).unwrap();
            s.sort_unstable();
            s.dedup();
            assert_eq!(s.len(), 5);
        }
    }

    #[test]
    fn kmeanspp_with_duplicates_still_distinct() {
        let x = DMatrix::from_element(6, 2, 1.0);
        let mut s = kmeanspp_init(&x, 3, 4).unwrap();
        s.sort_unstable();
        s.dedup();
        assert_eq!(s.len(), 3);
    }

    #[test]
    fn kmeanspp_rejects_too_many_seeds() {
        let x = DMatrix::from_element(3, 1, 0.0);
        assert!(kmeanspp_init(&x, 4, 0).is_err());
        assert!(kmeanspp_init(&x, 0, 0).is_err());
    }

    #[test]
    fn kmeanspp_never_picks_a_duplicate_of_a_seed_when_others_remain() {
        // Two copies of the origin and one far point: the second seed is the far point.
        let x = DMatrix::from_row_slice(3, 1, &[0.0, 0.0, 5.0]);
        for seed in 0..30 {
            let s = kmeanspp_init(&x, 2, seed).unwrap();
            let vals: Vec<f64> = s.iter().map(|&i| x[(i, 0)]).collect();
            assert!(vals.contains(&5.0) && vals.contains(&0.0));
        }
    }

    #[test]
    fn names_round_trip() {
        for i in InitKind::ALL {
            assert_eq!(i.name().parse::<InitKind>().unwrap(), i);
        }
    }
}
