//! Kernel k-means on a precomputed Gram matrix.

use std::fmt;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::init::{forgy_indices, kmeanspp_with, random_partition};
use super::kmeans::{lloyd_from, repair_empty};
use super::{
    canonical_order, hcluster, pairwise_distances, sq_dist_rows, InitKind, KMeansConfig,
    LinkageKind, Partition,
};
use crate::error::{invalid, Error, Result};
use crate::rng::{derive_seed, rng_from, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum KernelSpec {
    /// `exp(-|x - y|^2 / (2 sigma^2))`.
    Gaussian { sigma: f64 },
    /// `(scale <x, y> + offset)^degree`.
    Polynomial { degree: u32, scale: f64, offset: f64 },
    Linear,
}

impl KernelSpec {
    pub fn polynomial_default() -> Self {
        KernelSpec::Polynomial {
            degree: 2,
            scale: 1.0,
            offset: 1.0,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            KernelSpec::Gaussian { .. } => "gaussian",
            KernelSpec::Polynomial { .. } => "polynomial",
            KernelSpec::Linear => "linear",
        }
    }
}

impl fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Median of the non-zero pairwise distances between rows, or 1 if none.
pub fn median_sigma(x: &DMatrix<f64>) -> f64 {
    let n = x.nrows();
    let mut d: Vec<f64> = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            let v = sq_dist_rows(x, i, x, j).sqrt();
            if v > 0.0 {
                d.push(v);
            }
        }
    }
    if d.is_empty() {
        return 1.0;
    }
    d.sort_by(f64::total_cmp);
    let m = d.len();
    if m % 2 == 1 {
        d[m / 2]
    } else {
        0.5 * (d[m / 2 - 1] + d[m / 2])
    }
}

pub fn kernel_matrix(x: &DMatrix<f64>, spec: &KernelSpec) -> Result<DMatrix<f64>> {
    let n = x.nrows();
    let p = x.ncols();
    let dot = |i: usize, j: usize| (0..p).map(|c| x[(i, c)] * x[(j, c)]).sum::<f64>();
    let f: Box<dyn Fn(usize, usize) -> f64> = match *spec {
        KernelSpec::Gaussian { sigma } => {
            if !(sigma > 0.0 && sigma.is_finite()) {
                return invalid(format!("gaussian bandwidth must be positive, got {sigma}"));
            }
            let s2 = 2.0 * sigma * sigma;
            Box::new(move |i, j| (-sq_dist_rows(x, i, x, j) / s2).exp())
        }
        KernelSpec::Polynomial {
            degree,
            scale,
            offset,
        } => {
            if degree == 0 || !scale.is_finite() || !offset.is_finite() || offset < 0.0 {
                return invalid("polynomial kernel needs degree >= 1 and offset >= 0");
            }
            Box::new(move |i, j| (scale * dot(i, j) + offset).powi(degree as i32))
        }
        KernelSpec::Linear => Box::new(dot),
    };
    let mut k = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = f(i, j);
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    Ok(k)
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelFit {
    pub partition: Partition,
    /// Feature-space within-cluster sum of squares.
    pub objective: f64,
    /// Objective of every visited partition in the winning restart.
    pub trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

pub fn kernel_kmeans(kernel: &DMatrix<f64>, k: usize, init: InitKind, seed: u64) -> Result<Partition> {
    Ok(kernel_kmeans_fit(kernel, k, init, seed, &KMeansConfig::default())?.partition)
}

pub fn kernel_kmeans_fit(
    kernel: &DMatrix<f64>,
    k: usize,
    init: InitKind,
    seed: u64,
    config: &KMeansConfig,
) -> Result<KernelFit> {
    let n = kernel.nrows();
    check_kernel(kernel, k)?;
    let keys: Vec<f64> = (0..n)
        .map(|i| kernel[(i, i)] - 2.0 * kernel.row(i).mean())
        .collect();
    let order = canonical_order(&keys, kernel);
    let km = DMatrix::from_fn(n, n, |i, j| kernel[(order[i], order[j])]);
    let mut embed = None;
    let restarts = if init.is_deterministic() { 1 } else { config.restarts.max(1) };
    let mut best: Option<(Vec<usize>, f64, Vec<f64>, usize, bool)> = None;
    for r in 0..restarts {
        let mut rng = rng_from(derive_seed(seed, r as u64));
        let start = initial_partition(&km, &mut embed, k, init, &mut rng)?;
        let run = iterate(&km, start, k, config.max_iter.max(1));
        if best.as_ref().is_none_or(|b| run.1 < b.1) {
            best = Some(run);
        }
    }
    let (assign, objective, trace, iterations, converged) = best.expect("at least one restart");
    Ok(KernelFit {
        partition: Partition::from_labels(&super::unpermute(&assign, &order)),
        objective,
        trace,
        iterations,
        converged,
    })
}

fn check_kernel(kernel: &DMatrix<f64>, k: usize) -> Result<()> {
    let n = kernel.nrows();
    if kernel.ncols() != n || n == 0 {
        return invalid("kernel matrix must be square and non-empty");
    }
    if k == 0 || k > n {
        return invalid(format!("cannot form {k} clusters from {n} items"));
    }
    let scale = kernel.amax().max(f64::MIN_POSITIVE);
    for i in 0..n {
        for j in 0..n {
            let v = kernel[(i, j)];
            if !v.is_finite() || (v - kernel[(j, i)]).abs() > 1e-10 * scale {
                return invalid("kernel matrix must be finite and symmetric");
            }
        }
    }
    let eig = SymmetricEigen::new(kernel.clone());
    let max = eig.eigenvalues.amax();
    let min = eig.eigenvalues.min();
    if min < -1e-8 * max {
        return Err(Error::InvalidArgument(format!(
            "kernel matrix is not positive semi-definite (eigenvalue {min:.3e})"
        )));
    }
    Ok(())
}

/// Feature-space coordinates `V Λ^{1/2}` reproducing the Gram matrix.
fn embedding(km: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(km.clone());
    let mut phi = eig.eigenvectors;
    for (c, &l) in eig.eigenvalues.iter().enumerate() {
        let s = l.max(0.0).sqrt();
        phi.column_mut(c).scale_mut(s);
    }
    phi
}

fn feature_dist(km: &DMatrix<f64>, i: usize, j: usize) -> f64 {
    (km[(i, i)] - 2.0 * km[(i, j)] + km[(j, j)]).max(0.0)
}

fn nearest_seed(km: &DMatrix<f64>, seeds: &[usize]) -> Vec<usize> {
    (0..km.nrows())
        .map(|i| {
            let mut best = (0, f64::INFINITY);
            for (c, &s) in seeds.iter().enumerate() {
                let d = if i == s { -1.0 } else { feature_dist(km, i, s) };
                if d < best.1 {
                    best = (c, d);
                }
            }
            best.0
        })
        .collect()
}

fn initial_partition(
    km: &DMatrix<f64>,
    embed: &mut Option<DMatrix<f64>>,
    k: usize,
    init: InitKind,
    rng: &mut Rng,
) -> Result<Vec<usize>> {
    let n = km.nrows();
    Ok(match init {
        InitKind::RandomPartition => random_partition(rng, n, k),
        InitKind::Forgy => nearest_seed(km, &forgy_indices(rng, n, k)),
        InitKind::KMeansPlusPlus => {
            nearest_seed(km, &kmeanspp_with(rng, n, k, |i, j| feature_dist(km, i, j)))
        }
        InitKind::WardInit => {
            let phi = embed.get_or_insert_with(|| embedding(km));
            hcluster(&pairwise_distances(phi), LinkageKind::WardD2)?
                .cut(k)?
                .assign()
                .to_vec()
        }
        InitKind::KMeansInit => {
            let phi = embed.get_or_insert_with(|| embedding(km));
            let cfg = KMeansConfig {
                max_iter: 100,
                restarts: 1,
            };
            lloyd_from(phi, k, InitKind::KMeansPlusPlus, rng.random(), &cfg)?.0
        }
        InitKind::KernelKMeansInit => single_run(km, k, InitKind::KMeansPlusPlus, rng.random(), 100)?,
    })
}

/// One kernel k-means run on the matrix as given, without restarts.
pub(crate) fn single_run(
    km: &DMatrix<f64>,
    k: usize,
    init: InitKind,
    seed: u64,
    max_iter: usize,
) -> Result<Vec<usize>> {
    check_kernel(km, k)?;
    let mut rng = rng_from(seed);
    let start = initial_partition(km, &mut None, k, init, &mut rng)?;
    Ok(iterate(km, start, k, max_iter).0)
}

fn iterate(
    km: &DMatrix<f64>,
    mut assign: Vec<usize>,
    k: usize,
    max_iter: usize,
) -> (Vec<usize>, f64, Vec<f64>, usize, bool) {
    let n = km.nrows();
    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    loop {
        let dist = distances(km, &assign, k);
        let objective: f64 = (0..n).map(|i| dist[(i, assign[i])]).sum();
        trace.push(objective);
        if iterations >= max_iter {
            break;
        }
        iterations += 1;
        let mut next = Vec::with_capacity(n);
        let mut own = Vec::with_capacity(n);
        for i in 0..n {
            let mut best = (assign[i], dist[(i, assign[i])]);
            for c in 0..k {
                if dist[(i, c)] < best.1 {
                    best = (c, dist[(i, c)]);
                }
            }
            next.push(best.0);
            own.push(best.1);
        }
        repair_empty(&mut next, &mut own, k);
        if next == assign {
            converged = true;
            break;
        }
        assign = next;
    }
    let objective = *trace.last().expect("trace is non-empty");
    (assign, objective, trace, iterations, converged)
}

/// Squared feature-space distance of every item to every cluster mean.
fn distances(km: &DMatrix<f64>, assign: &[usize], k: usize) -> DMatrix<f64> {
    let n = km.nrows();
    let mut size = vec![0usize; k];
    for &a in assign {
        size[a] += 1;
    }
    let mut cross: DMatrix<f64> = DMatrix::zeros(n, k);
    for i in 0..n {
        for j in 0..n {
            cross[(i, assign[j])] += km[(i, j)];
        }
    }
    let mut within = vec![0.0f64; k];
    for j in 0..n {
        within[assign[j]] += cross[(j, assign[j])];
    }
    DMatrix::from_fn(n, k, |i, c| {
        if size[c] == 0 {
            return f64::INFINITY;
        }
        let s = size[c] as f64;
        (km[(i, i)] - 2.0 * cross[(i, c)] / s + within[c] / (s * s)).max(0.0)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mvclust::{kmeans, Metric};

    fn rings() -> DMatrix<f64> {
        let mut v = Vec::new();
        for i in 0..16 {
            let a = i as f64 * std::f64::consts::TAU / 16.0;
            v.extend_from_slice(&[0.3 * a.cos(), 0.3 * a.sin()]);
        }
        for i in 0..16 {
            let a = i as f64 * std::f64::consts::TAU / 16.0 + 0.1;
            v.extend_from_slice(&[3.0 * a.cos(), 3.0 * a.sin()]);
        }
        DMatrix::from_row_slice(32, 2, &v)
    }

    #[test]
    fn median_sigma_simple() {
        let x = DMatrix::from_row_slice(3, 1, &[0.0, 1.0, 3.0]);
        assert_eq!(median_sigma(&x), 2.0);
        assert_eq!(median_sigma(&DMatrix::from_element(3, 1, 2.0)), 1.0);
    }

    #[test]
    fn gaussian_kernel_has_unit_diagonal() {
        let x = rings();
        let k = kernel_matrix(&x, &KernelSpec::Gaussian { sigma: median_sigma(&x) }).unwrap();
        for i in 0..32 {
            assert_eq!(k[(i, i)], 1.0);
        }
    }

    #[test]
    fn non_psd_rejected() {
        let k = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(
            kernel_kmeans(&k, 2, InitKind::Forgy, 0),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn linear_kernel_matches_euclidean_kmeans() {
        let x = DMatrix::from_fn(30, 2, |i, j| {
            let t = i as f64;
            (t * (1.3 + j as f64)).sin() * 2.0 + if i < 15 { 0.0 } else { 4.0 }
        });
        let k = kernel_matrix(&x, &KernelSpec::Linear).unwrap();
        for seed in 0..5 {
            let a = kernel_kmeans(&k, 3, InitKind::KMeansPlusPlus, seed).unwrap();
            let b = kmeans(&x, 3, InitKind::KMeansPlusPlus, Metric::Euclidean, seed).unwrap();
            assert_eq!(a, b, "seed {seed}");
        }
    }

    #[test]
    fn gaussian_kernel_separates_rings_better_than_chance() {
        let x = rings();
        let k = kernel_matrix(&x, &KernelSpec::Gaussian { sigma: 0.5 }).unwrap();
        let fit = kernel_kmeans_fit(&k, 2, InitKind::KMeansPlusPlus, 1, &KMeansConfig::default())
            .unwrap();
        for w in fit.trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-9);
        }
        assert_eq!(fit.partition.n_nonempty(), 2);
    }

    #[test]
    fn every_init_runs() {
        let x = rings();
        let k = kernel_matrix(&x, &KernelSpec::polynomial_default()).unwrap();
        for init in InitKind::ALL {
            let p = kernel_kmeans(&k, 3, init, 2).unwrap();
            assert_eq!(p.len(), 32, "{init}");
        }
    }
}
