//! Lloyd k-means with restarts, Euclidean or Mahalanobis.

use std::fmt;
use std::str::FromStr;

use nalgebra::{Cholesky, DMatrix};
use serde::{Deserialize, Serialize};

use super::init::initial_centers;
use super::{
    canonical_order, centroid_keys, cluster_means, permute_rows, sq_dist_rows, unpermute,
    InitKind, Partition,
};
use crate::error::{invalid, Error, Result};
use crate::rng::{derive_seed, rng_from};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Metric {
    Euclidean,
    /// Euclidean after whitening by the sample covariance.
    Mahalanobis,
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::Euclidean => "euclidean",
            Metric::Mahalanobis => "mahalanobis",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euclidean" => Ok(Metric::Euclidean),
            "mahalanobis" => Ok(Metric::Mahalanobis),
            _ => invalid(format!("unknown metric `{s}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct KMeansConfig {
    pub max_iter: usize,
    pub restarts: usize,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        Self {
            max_iter: 100,
            restarts: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansFit {
    pub partition: Partition,
    /// Cluster centers in the (possibly whitened) space the algorithm ran in.
    pub centers: DMatrix<f64>,
    /// Within-cluster sum of squares of the returned partition.
    pub objective: f64,
    /// Objective after every iteration of the winning restart.
    pub trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Whitens `x` by the Cholesky factor of its ridge-regularized covariance.
pub fn whiten(x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (n, p) = x.shape();
    if n < 2 || p == 0 {
        return invalid("whitening needs at least two rows and one column");
    }
    let means = x.row_mean();
    let mut xc = x.clone();
    for mut row in xc.row_iter_mut() {
        row -= &means;
    }
    let mut cov = xc.transpose() * &xc / (n as f64 - 1.0);
    let ridge = 1e-8 * cov.trace() / p as f64;
    for j in 0..p {
        cov[(j, j)] += ridge;
    }
    let chol = Cholesky::new(cov)
        .ok_or_else(|| Error::NumericalFailure("covariance is not positive definite".into()))?;
    let y = chol
        .l()
        .solve_lower_triangular(&xc.transpose())
        .ok_or_else(|| Error::NumericalFailure("singular Cholesky factor".into()))?;
    Ok(y.transpose())
}

/// Cluster labels of the best of `config.restarts` runs.
pub fn kmeans(
    x: &DMatrix<f64>,
    k: usize,
    init: InitKind,
    metric: Metric,
    seed: u64,
) -> Result<Partition> {
    Ok(kmeans_fit(x, k, init, metric, seed, &KMeansConfig::default())?.partition)
}

pub fn kmeans_fit(
    x: &DMatrix<f64>,
    k: usize,
    init: InitKind,
    metric: Metric,
    seed: u64,
    config: &KMeansConfig,
) -> Result<KMeansFit> {
    let n = x.nrows();
    if k == 0 || k > n {
        return invalid(format!("cannot form {k} clusters from {n} rows"));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return invalid("feature matrix contains non-finite values");
    }
    let space = match metric {
        Metric::Euclidean => x.clone(),
        Metric::Mahalanobis => whiten(x)?,
    };
    let order = canonical_order(&centroid_keys(&space), &space);
    let sorted = permute_rows(&space, &order);
    let run = lloyd_from(&sorted, k, init, seed, config)?;

    let assign = unpermute(&run.0, &order);
    let partition = Partition::from_labels(&assign);
    // Reorder centers to the relabelled ids.
    let mut map = vec![usize::MAX; k];
    for (&old, &new) in assign.iter().zip(partition.assign()) {
        map[old] = new;
    }
    let mut centers = DMatrix::zeros(partition.k(), space.ncols());
    for (old, &new) in map.iter().enumerate() {
        if new != usize::MAX {
            centers.set_row(new, &run.1.row(old));
        }
    }
    Ok(KMeansFit {
        partition,
        centers,
        objective: run.2,
        trace: run.3,
        iterations: run.4,
        converged: run.5,
    })
}

/// (assign, centers, objective, trace, iterations, converged)
pub(crate) type Run = (Vec<usize>, DMatrix<f64>, f64, Vec<f64>, usize, bool);

/// Best Lloyd run over the restarts, on rows in the given order.
pub(crate) fn lloyd_from(
    x: &DMatrix<f64>,
    k: usize,
    init: InitKind,
    seed: u64,
    config: &KMeansConfig,
) -> Result<Run> {
    let restarts = if init.is_deterministic() { 1 } else { config.restarts.max(1) };
    let mut best: Option<Run> = None;
    for r in 0..restarts {
        let mut rng = rng_from(derive_seed(seed, r as u64));
        let centers = initial_centers(x, k, init, &mut rng)?;
        let run = lloyd(x, centers, config.max_iter.max(1));
        if best.as_ref().is_none_or(|b| run.2 < b.2) {
            best = Some(run);
        }
    }
    Ok(best.expect("at least one restart"))
}

fn nearest(x: &DMatrix<f64>, centers: &DMatrix<f64>, i: usize) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for c in 0..centers.nrows() {
        let d = sq_dist_rows(x, i, centers, c);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

pub(crate) fn lloyd(x: &DMatrix<f64>, mut centers: DMatrix<f64>, max_iter: usize) -> Run {
    let n = x.nrows();
    let k = centers.nrows();
    let mut assign = vec![usize::MAX; n];
    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    for _ in 0..max_iter {
        iterations += 1;
        let mut next = Vec::with_capacity(n);
        let mut own = Vec::with_capacity(n);
        for i in 0..n {
            let (c, d) = nearest(x, &centers, i);
            next.push(c);
            own.push(d);
        }
        repair_empty(&mut next, &mut own, k);
        let changed = next != assign;
        assign = next;
        centers = cluster_means(x, &assign, k);
        trace.push(sse(x, &assign, &centers));
        if !changed {
            converged = true;
            break;
        }
    }
    let objective = *trace.last().expect("at least one iteration");
    (assign, centers, objective, trace, iterations, converged)
}

/// Moves the point farthest from its center into each empty cluster.
pub(crate) fn repair_empty(assign: &mut [usize], own: &mut [f64], k: usize) {
    loop {
        let mut counts = vec![0usize; k];
        for &a in assign.iter() {
            counts[a] += 1;
        }
        let Some(empty) = counts.iter().position(|&c| c == 0) else {
            return;
        };
        let donor = (0..assign.len())
            .filter(|&i| counts[assign[i]] > 1)
            .max_by(|&a, &b| own[a].total_cmp(&own[b]).then(b.cmp(&a)));
        let Some(i) = donor else {
            return;
        };
        assign[i] = empty;
        own[i] = 0.0;
    }
}

fn sse(x: &DMatrix<f64>, assign: &[usize], centers: &DMatrix<f64>) -> f64 {
    assign
        .iter()
        .enumerate()
        .map(|(i, &a)| sq_dist_rows(x, i, centers, a))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blobs() -> DMatrix<f64> {
        let mut v = Vec::new();
        for (cx, cy) in [(0.0, 0.0), (10.0, 0.0), (0.0, 10.0)] {
            for i in 0..5 {
                let t = i as f64;
                v.extend_from_slice(&[cx + 0.1 * t, cy - 0.07 * t]);
            }
        }
        DMatrix::from_row_slice(15, 2, &v)
    }

    #[test]
    fn separates_blobs_with_every_init() {
        let x = blobs();
        for init in InitKind::ALL {
            let p = kmeans(&x, 3, init, Metric::Euclidean, 3).unwrap();
            let a = p.assign();
            for g in 0..3 {
                assert!(a[5 * g..5 * g + 5].iter().all(|&v| v == a[5 * g]), "{init}");
            }
            assert_eq!(p.n_nonempty(), 3, "{init}");
        }
    }

    #[test]
    fn trace_is_non_increasing() {
        let x = DMatrix::from_fn(40, 3, |i, j| ((i * 13 + j * 7) % 11) as f64 + (i as f64).cos());
        let fit = kmeans_fit(&x, 4, InitKind::Forgy, Metric::Euclidean, 9, &KMeansConfig::default())
            .unwrap();
        for w in fit.trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-9);
        }
        assert!(fit.iterations <= 100);
    }

    #[test]
    fn k_equals_n_gives_singletons() {
        let x = DMatrix::from_row_slice(4, 1, &[1.0, 1.0, 3.0, 7.0]);
        let p = kmeans(&x, 4, InitKind::KMeansPlusPlus, Metric::Euclidean, 0).unwrap();
        assert_eq!(p.n_nonempty(), 4);
    }

    #[test]
    fn whitening_gives_identity_covariance() {
        let x = DMatrix::from_fn(50, 2, |i, j| {
            let t = i as f64 * 0.37;
            if j == 0 { t.sin() * 3.0 } else { t.sin() + 0.2 * t.cos() }
        });
        let y = whiten(&x).unwrap();
        let mut yc = y.clone();
        let m = y.row_mean();
        for mut r in yc.row_iter_mut() {
            r -= &m;
        }
        let cov = yc.transpose() * &yc / 49.0;
        // The ridge leaves a small bias on the nearly collinear column.
        assert!((cov[(0, 0)] - 1.0).abs() < 1e-5);
        assert!((cov[(1, 1)] - 1.0).abs() < 1e-5);
        assert!(cov[(0, 1)].abs() < 1e-5);
    }

    #[test]
    fn invalid_k_rejected() {
        let x = blobs();
        assert!(kmeans(&x, 0, InitKind::Forgy, Metric::Euclidean, 0).is_err());
        assert!(kmeans(&x, 16, InitKind::Forgy, Metric::Euclidean, 0).is_err());
    }

    #[test]
    fn constant_data_fails_mahalanobis() {
        let x = DMatrix::from_element(5, 2, 1.0);
        assert!(matches!(
            kmeans(&x, 2, InitKind::Forgy, Metric::Mahalanobis, 0),
            Err(Error::NumericalFailure(_))
        ));
    }
}
