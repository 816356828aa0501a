//! Two functional k-means baselines: distance-based k-means under the L²
//! and truncated Mahalanobis distances, and the test-based k-means that
//! allocates curves with a parallelism statistic `T` and a mean statistic
//! `W`.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::curves::{FunctionalSample, Grid};
use crate::error::{invalid, Error, Result};
use crate::mvclust::init::{forgy_indices, kmeanspp_with, random_partition};
use crate::mvclust::{
    cluster_means, hcluster, kmeans_fit, pairwise_distances, sq_dist_rows, InitKind,
    KMeansConfig, KMeansFit, LinkageKind, Metric, Partition,
};
use crate::rng::rng_from;

/// Empirical functional principal components under trapezoidal quadrature.
#[derive(Debug, Clone)]
pub struct Fpca {
    mean: Vec<f64>,
    eigenvalues: Vec<f64>,
    /// Column `l` is `φ_l` on the grid.
    eigenfunctions: DMatrix<f64>,
    weights: Vec<f64>,
}

impl Fpca {
    pub fn new(sample: &FunctionalSample) -> Result<Self> {
        let x = sample.values();
        let (n, m) = x.shape();
        let weights = sample.grid().trapezoid_weights();
        let mean: Vec<f64> = (0..m).map(|j| x.column(j).mean()).collect();
        let xc = DMatrix::from_fn(n, m, |i, j| x[(i, j)] - mean[j]);
        let cov = xc.transpose() * &xc / (n as f64 - 1.0);
        let sw: Vec<f64> = weights.iter().map(|w| w.sqrt()).collect();
        let scaled = DMatrix::from_fn(m, m, |a, b| sw[a] * cov[(a, b)] * sw[b]);
        let eig = SymmetricEigen::new(scaled);
        let mut idx: Vec<usize> = (0..m).collect();
        idx.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
        let eigenvalues = idx.iter().map(|&l| eig.eigenvalues[l].max(0.0)).collect();
        let eigenfunctions =
            DMatrix::from_fn(m, m, |j, l| eig.eigenvectors[(j, idx[l])] / sw[j]);
        Ok(Self {
            mean,
            eigenvalues,
            eigenfunctions,
            weights,
        })
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenfunction(&self, l: usize) -> Vec<f64> {
        self.eigenfunctions.column(l).iter().copied().collect()
    }

    /// `∫ f g` under the grid quadrature.
    pub fn inner(&self, f: &[f64], g: &[f64]) -> f64 {
        self.weights.iter().zip(f).zip(g).map(|((w, a), b)| w * a * b).sum()
    }

    /// Scores `⟨x - mean, φ_l⟩` for `l < count`.
    pub fn scores(&self, x: &[f64], count: usize) -> Vec<f64> {
        let centered: Vec<f64> = x.iter().zip(&self.mean).map(|(a, b)| a - b).collect();
        (0..count)
            .map(|l| self.inner(&centered, self.eigenfunctions.column(l).as_slice()))
            .collect()
    }

    /// Mean plus the first `count` components of `x`.
    pub fn reconstruct(&self, x: &[f64], count: usize) -> Vec<f64> {
        let s = self.scores(x, count);
        let mut out = self.mean.clone();
        for (l, sl) in s.iter().enumerate() {
            for (j, o) in out.iter_mut().enumerate() {
                *o += sl * self.eigenfunctions[(j, l)];
            }
        }
        out
    }

    fn check_truncation(&self, k: usize) -> Result<()> {
        if k == 0 || k > self.eigenvalues.len() {
            return invalid(format!("number of components must be in 1..={}", self.eigenvalues.len()));
        }
        let l1 = self.eigenvalues[0];
        if !(l1 > 0.0) || self.eigenvalues[k - 1] < 1e-12 * l1 {
            return Err(Error::NumericalFailure(format!(
                "eigenvalue {k} is numerically zero; too many components"
            )));
        }
        Ok(())
    }

    /// Truncated Mahalanobis distance over the first `k` components.
    pub fn dk_distance(&self, a: &[f64], b: &[f64], k: usize) -> Result<f64> {
        self.check_truncation(k)?;
        let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
        Ok((0..k)
            .map(|l| {
                let p = self.inner(&diff, self.eigenfunctions.column(l).as_slice());
                p * p / self.eigenvalues[l]
            })
            .sum::<f64>()
            .sqrt())
    }
}

/// L² distance under trapezoidal quadrature.
pub fn l2_distance(grid: &Grid, a: &[f64], b: &[f64]) -> f64 {
    grid.trapezoid_weights()
        .iter()
        .zip(a.iter().zip(b))
        .map(|(w, (x, y))| w * (x - y).powi(2))
        .sum::<f64>()
        .sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FDistance {
    L2,
    /// Truncated Mahalanobis with this many components.
    TruncatedMahalanobis(usize),
}

/// Coordinates in which Euclidean distance equals the functional distance.
/// Both maps are linear, so pointwise-mean centroids map to coordinate means.
fn embed(sample: &FunctionalSample, distance: FDistance) -> Result<DMatrix<f64>> {
    let x = sample.values();
    let (n, m) = x.shape();
    match distance {
        FDistance::L2 => {
            let sw: Vec<f64> = sample.grid().trapezoid_weights().iter().map(|w| w.sqrt()).collect();
            Ok(DMatrix::from_fn(n, m, |i, j| x[(i, j)] * sw[j]))
        }
        FDistance::TruncatedMahalanobis(k) => {
            let f = Fpca::new(sample)?;
            f.check_truncation(k)?;
            let mut z = DMatrix::zeros(n, k);
            for i in 0..n {
                let s = f.scores(&sample.curve(i), k);
                for l in 0..k {
                    z[(i, l)] = s[l] / f.eigenvalues[l].sqrt();
                }
            }
            Ok(z)
        }
    }
}

/// Functional k-means with pointwise-mean centroids.
pub fn fkmeans(sample: &FunctionalSample, k: usize, distance: FDistance, seed: u64) -> Result<Partition> {
    Ok(fkmeans_fit(sample, k, distance, seed, &KMeansConfig::default())?.partition)
}

pub fn fkmeans_fit(
    sample: &FunctionalSample,
    k: usize,
    distance: FDistance,
    seed: u64,
    config: &KMeansConfig,
) -> Result<KMeansFit> {
    let z = embed(sample, distance)?;
    kmeans_fit(&z, k, InitKind::KMeansPlusPlus, Metric::Euclidean, seed, config)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TbConfig {
    /// Odd number of grid points per ANOVA cell.
    pub window: usize,
    /// Rejection threshold shared by both statistics.
    pub gamma: f64,
    pub max_iter: usize,
}

impl Default for TbConfig {
    fn default() -> Self {
        Self {
            window: 5,
            gamma: 1.65,
            max_iter: 50,
        }
    }
}

impl TbConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window < 3 || self.window % 2 == 0 {
            return invalid(format!("window must be odd and at least 3, got {}", self.window));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return invalid("gamma must be positive");
        }
        if self.max_iter == 0 {
            return invalid("max_iter must be positive");
        }
        Ok(())
    }
}

/// Parallelism statistic on the residuals `curve - center`.
pub fn tb_parallelism_t(curve: &[f64], center: &[f64], config: &TbConfig) -> Result<f64> {
    config.validate()?;
    let r = curve.len();
    if center.len() != r {
        return invalid("curve and center lengths differ");
    }
    let m = config.window;
    if r < m + 4 {
        return invalid(format!("{r} grid points are too few for a window of {m}"));
    }
    let xi: Vec<f64> = curve.iter().zip(center).map(|(a, b)| a - b).collect();
    let half = m / 2;
    let grand = xi.iter().sum::<f64>() / r as f64;
    let mut sst = 0.0;
    let mut sse = 0.0;
    let mut cells = 0.0;
    for j in 0..r {
        let start = j.saturating_sub(half).min(r - m);
        let cell = &xi[start..start + m];
        let cm = cell.iter().sum::<f64>() / m as f64;
        sst += m as f64 * (cm - grand).powi(2);
        sse += cell.iter().map(|v| (v - cm).powi(2)).sum::<f64>();
        cells += 1.0;
    }
    let mst = sst / (cells - 1.0);
    let mse = sse / (cells * (m as f64 - 1.0));
    let mut tau2 = 0.0;
    for s in 1..(r - 2) {
        tau2 += (xi[s] - xi[s - 1]).powi(2) * (xi[s + 2] - xi[s + 1]).powi(2);
    }
    tau2 /= 4.0 * (r as f64 - 3.0);
    let num = (r as f64).sqrt() * (mst - mse);
    let den = tau2.sqrt() * (2.0 * m as f64 * (2.0 * m as f64 - 1.0) / (3.0 * (m as f64 - 1.0))).sqrt();
    let scale = xi.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if den <= 1e-300 || tau2.sqrt() <= 1e-24 * (1.0 + scale * scale) {
        return Ok(if num.abs() <= 1e-12 * (1.0 + scale * scale) { 0.0 } else { f64::INFINITY });
    }
    Ok((num / den).abs())
}

fn unbiased_var(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
}

/// Two-sample statistic for equal means of a curve and a center.
pub fn tb_mean_w(curve: &[f64], center: &[f64]) -> Result<f64> {
    let r = curve.len();
    if center.len() != r || r < 2 {
        return invalid("curve and center must share a grid of at least two points");
    }
    let diff = curve.iter().sum::<f64>() / r as f64 - center.iter().sum::<f64>() / r as f64;
    let den = ((unbiased_var(curve) + unbiased_var(center)) / r as f64).sqrt();
    if !(den > 0.0) {
        return Err(Error::DegeneratePair("both curve and center are constant".into()));
    }
    Ok((diff / den).abs())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PsiBranch {
    /// At least two centers look parallel and at most one has an equal mean.
    Mean,
    /// At least two centers have equal means and at most one looks parallel.
    Parallelism,
    Combined,
}

/// Allocation scores `Ψ_p` of one curve against every center.
pub fn psi(t: &[f64], w: &[f64], gamma: f64) -> (PsiBranch, Vec<f64>) {
    let t_low = t.iter().filter(|&&v| v < gamma).count();
    let w_low = w.iter().filter(|&&v| v < gamma).count();
    if t_low >= 2 && w_low <= 1 {
        return (PsiBranch::Mean, w.to_vec());
    }
    if w_low >= 2 && t_low <= 1 {
        return (PsiBranch::Parallelism, t.to_vec());
    }
    let max_t = t.iter().fold(0.0f64, |a, &b| a.max(b));
    let max_w = w.iter().fold(0.0f64, |a, &b| a.max(b));
    let ratio = |v: f64, max: f64| {
        if max == 0.0 {
            0.0
        } else if max.is_infinite() {
            if v.is_infinite() { 1.0 } else { 0.0 }
        } else {
            v / max
        }
    };
    let scores = t
        .iter()
        .zip(w)
        .map(|(&a, &b)| 0.5 * ratio(a, max_t) + 0.5 * ratio(b, max_w))
        .collect();
    (PsiBranch::Combined, scores)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TbFit {
    /// Keeps `k` clusters; some may be empty when centers collapse.
    pub partition: Partition,
    pub centers: DMatrix<f64>,
    pub iterations: usize,
    /// Stopped at a fixpoint rather than an oscillation or the cap.
    pub converged: bool,
}

impl TbFit {
    pub fn empty_clusters(&self) -> usize {
        self.partition.k() - self.partition.n_nonempty()
    }
}

pub fn tb_kmeans(
    sample: &FunctionalSample,
    k: usize,
    init: InitKind,
    config: &TbConfig,
    seed: u64,
) -> Result<Partition> {
    Ok(tb_kmeans_fit(sample, k, init, config, seed)?.partition)
}

pub fn tb_kmeans_fit(
    sample: &FunctionalSample,
    k: usize,
    init: InitKind,
    config: &TbConfig,
    seed: u64,
) -> Result<TbFit> {
    config.validate()?;
    let x = sample.values();
    let (n, r) = x.shape();
    if k == 0 || k > n {
        return invalid(format!("cannot form {k} clusters from {n} curves"));
    }
    if r < config.window + 4 {
        return invalid(format!("{r} grid points are too few for a window of {}", config.window));
    }
    let mut centers = tb_initial_centers(x, k, init, seed)?;
    let curves: Vec<Vec<f64>> = (0..n).map(|i| sample.curve(i)).collect();
    let mut history: Vec<Vec<usize>> = Vec::new();
    let mut assign = vec![0usize; n];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < config.max_iter {
        iterations += 1;
        let rows: Vec<Vec<f64>> = (0..k).map(|p| centers.row(p).iter().copied().collect()).collect();
        let mut degenerate = 0usize;
        let mut next = Vec::with_capacity(n);
        for curve in &curves {
            let mut t = Vec::with_capacity(k);
            let mut w = Vec::with_capacity(k);
            for c in &rows {
                t.push(tb_parallelism_t(curve, c, config)?);
                w.push(match tb_mean_w(curve, c) {
                    Ok(v) => v,
                    Err(Error::DegeneratePair(_)) => {
                        degenerate += 1;
                        let same = (curve.iter().sum::<f64>() - c.iter().sum::<f64>()).abs()
                            <= 1e-12 * (1.0 + curve.iter().map(|v| v.abs()).sum::<f64>());
                        if same { 0.0 } else { f64::INFINITY }
                    }
                    Err(e) => return Err(e),
                });
            }
            let (_, scores) = psi(&t, &w, config.gamma);
            let best = (0..k)
                .min_by(|&a, &b| scores[a].total_cmp(&scores[b]).then(a.cmp(&b)))
                .expect("k >= 1");
            next.push(best);
        }
        if degenerate == n * k {
            return Err(Error::NumericalFailure(
                "every curve-center pair is degenerate".into(),
            ));
        }
        let repeat = history.iter().position(|h| *h == next);
        assign = next;
        if let Some(pos) = repeat {
            converged = pos + 1 == history.len();
            break;
        }
        history.push(assign.clone());
        let means = cluster_means(x, &assign, k);
        let mut counts = vec![0usize; k];
        for &a in &assign {
            counts[a] += 1;
        }
        for p in 0..k {
            if counts[p] > 0 {
                centers.set_row(p, &means.row(p));
            }
        }
    }
    Ok(TbFit {
        partition: Partition::new(assign, k)?,
        centers,
        iterations,
        converged,
    })
}

/// Starting centers: `Forgy` picks random curves, `KMeansInit` runs one
/// assignment step from random curves, `WardInit` averages a Ward.D2 cut and
/// `KMeansPlusPlus` uses D² seeding.
fn tb_initial_centers(x: &DMatrix<f64>, k: usize, init: InitKind, seed: u64) -> Result<DMatrix<f64>> {
    let n = x.nrows();
    let mut rng = rng_from(seed);
    let rows = |idx: &[usize]| DMatrix::from_fn(idx.len(), x.ncols(), |i, c| x[(idx[i], c)]);
    Ok(match init {
        InitKind::Forgy => rows(&forgy_indices(&mut rng, n, k)),
        InitKind::KMeansPlusPlus => rows(&kmeanspp_with(&mut rng, n, k, |i, j| sq_dist_rows(x, i, x, j))),
        InitKind::KMeansInit => {
            let seeds = rows(&forgy_indices(&mut rng, n, k));
            let assign: Vec<usize> = (0..n)
                .map(|i| {
                    (0..k)
                        .min_by(|&a, &b| {
                            sq_dist_rows(x, i, &seeds, a).total_cmp(&sq_dist_rows(x, i, &seeds, b))
                        })
                        .expect("k >= 1")
                })
                .collect();
            let mut means = cluster_means(x, &assign, k);
            let mut counts = vec![0usize; k];
            for &a in &assign {
                counts[a] += 1;
            }
            for p in 0..k {
                if counts[p] == 0 {
                    means.set_row(p, &seeds.row(p));
                }
            }
            means
        }
        InitKind::WardInit => {
            let p = hcluster(&pairwise_distances(x), LinkageKind::WardD2)?.cut(k)?;
            cluster_means(x, p.assign(), k)
        }
        InitKind::RandomPartition => {
            let assign = random_partition(&mut rng, n, k);
            cluster_means(x, &assign, k)
        }
        InitKind::KernelKMeansInit => {
            return invalid("test-based k-means does not support kernel k-means initialization")
        }
    })
}

/// Baseline methods by report name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BenchMethod {
    Fkm(FDistance),
    Tbkm(InitKind),
}

impl BenchMethod {
    pub fn default_set() -> Vec<BenchMethod> {
        vec![
            BenchMethod::Fkm(FDistance::L2),
            BenchMethod::Fkm(FDistance::TruncatedMahalanobis(2)),
            BenchMethod::Tbkm(InitKind::Forgy),
            BenchMethod::Tbkm(InitKind::KMeansInit),
            BenchMethod::Tbkm(InitKind::WardInit),
            BenchMethod::Tbkm(InitKind::KMeansPlusPlus),
        ]
    }

    /// Runs the method. Distance-based k-means should receive smoothed
    /// curves; the test-based procedure works on raw grid values.
    pub fn cluster(
        &self,
        sample: &FunctionalSample,
        k: usize,
        tb: &TbConfig,
        seed: u64,
    ) -> Result<Partition> {
        match *self {
            BenchMethod::Fkm(d) => fkmeans(sample, k, d, seed),
            BenchMethod::Tbkm(init) => tb_kmeans(sample, k, init, tb, seed),
        }
    }

    pub fn uses_smoothing(&self) -> bool {
        matches!(self, BenchMethod::Fkm(_))
    }
}

fn tb_init_name(init: InitKind) -> &'static str {
    match init {
        InitKind::Forgy => "random",
        InitKind::KMeansInit => "kmeans",
        InitKind::WardInit => "hclust",
        InitKind::KMeansPlusPlus => "kmeans++",
        InitKind::RandomPartition => "random-partition",
        InitKind::KernelKMeansInit => "kkmeans",
    }
}

impl fmt::Display for BenchMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BenchMethod::Fkm(FDistance::L2) => f.write_str("fkm-L2"),
            BenchMethod::Fkm(FDistance::TruncatedMahalanobis(k)) => write!(f, "fkm-dK:{k}"),
            BenchMethod::Tbkm(init) => write!(f, "tbkm-{}", tb_init_name(*init)),
        }
    }
}

impl FromStr for BenchMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "fkm-L2" {
            return Ok(BenchMethod::Fkm(FDistance::L2));
        }
        if let Some(k) = s.strip_prefix("fkm-dK:") {
            let k: usize = k
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("bad component count in `{s}`")))?;
            return Ok(BenchMethod::Fkm(FDistance::TruncatedMahalanobis(k)));
        }
        if let Some(name) = s.strip_prefix("tbkm-") {
            let init = [
                InitKind::Forgy,
                InitKind::KMeansInit,
                InitKind::WardInit,
                InitKind::KMeansPlusPlus,
                InitKind::RandomPartition,
            ]
            .into_iter()
            .find(|i| tb_init_name(*i) == name);
            if let Some(init) = init {
                return Ok(BenchMethod::Tbkm(init));
            }
        }
        invalid(format!("unknown benchmark method `{s}`"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(values: DMatrix<f64>) -> FunctionalSample {
        let m = values.ncols();
        FunctionalSample::new(values, Grid::uniform(0.0, 1.0, m).unwrap(), None).unwrap()
    }

    #[test]
    fn l2_of_sine_against_zero() {
        let grid = Grid::uniform(0.0, 1.0, 1000).unwrap();
        let s: Vec<f64> = grid.points().iter().map(|t| (2.0 * std::f64::consts::PI * t).sin()).collect();
        let z = vec![0.0; 1000];
        assert!((l2_distance(&grid, &s, &z) - 0.5f64.sqrt()).abs() < 1e-3);
        assert_eq!(l2_distance(&grid, &s, &s), 0.0);
    }

    fn wiggly(n: usize, m: usize) -> DMatrix<f64> {
        DMatrix::from_fn(n, m, |i, j| {
            let t = j as f64 / (m - 1) as f64;
            let a = (i as f64 * 0.7).sin();
            let b = (i as f64 * 1.3).cos();
            a * (3.0 * t).sin() + b * t * t + 0.1 * (i as f64) * t + 0.05 * ((i * j) % 7) as f64
        })
    }

    #[test]
    fn fpca_orthonormal_and_reconstructs() {
        let s = sample(wiggly(25, 12));
        let f = Fpca::new(&s).unwrap();
        for a in 0..12 {
            for b in 0..12 {
                let ip = f.inner(&f.eigenfunction(a), &f.eigenfunction(b));
                let target = if a == b { 1.0 } else { 0.0 };
                assert!((ip - target).abs() < 1e-8, "{a} {b} {ip}");
            }
        }
        for w in f.eigenvalues().windows(2) {
            assert!(w[0] >= w[1]);
        }
        let c = s.curve(3);
        let back = f.reconstruct(&c, 12);
        for (x, y) in c.iter().zip(&back) {
            assert!((x - y).abs() < 1e-6);
        }
    }

    #[test]
    fn dk_is_a_pseudo_metric() {
        let s = sample(wiggly(25, 12));
        let f = Fpca::new(&s).unwrap();
        let (a, b, c) = (s.curve(0), s.curve(5), s.curve(9));
        assert_eq!(f.dk_distance(&a, &a, 3).unwrap(), 0.0);
        assert_eq!(f.dk_distance(&a, &b, 3).unwrap(), f.dk_distance(&b, &a, 3).unwrap());
        let ab = f.dk_distance(&a, &b, 3).unwrap();
        let bc = f.dk_distance(&b, &c, 3).unwrap();
        let ac = f.dk_distance(&a, &c, 3).unwrap();
        assert!(ac <= ab + bc + 1e-12);
    }

    #[test]
    fn dk_too_many_components_fails() {
        // Rank-one sample: only one non-zero eigenvalue.
        let v = DMatrix::from_fn(6, 10, |i, j| i as f64 * (j as f64 * 0.3).sin());
        let f = Fpca::new(&sample(v.clone())).unwrap();
        assert!(matches!(
            f.dk_distance(&v.row(0).iter().copied().collect::<Vec<_>>(), &[0.0; 10], 3),
            Err(Error::NumericalFailure(_))
        ));
    }

    #[test]
    fn fkmeans_constant_levels() {
        let v = DMatrix::from_fn(10, 20, |i, j| {
            if i < 5 { 0.01 * ((i + j) % 3) as f64 } else { 10.0 + 0.01 * ((i * j) % 4) as f64 }
        });
        let s = sample(v);
        for d in [FDistance::L2, FDistance::TruncatedMahalanobis(2)] {
            let p = fkmeans(&s, 2, d, 1).unwrap();
            let a = p.assign();
            assert!(a[..5].iter().all(|&x| x == a[0]));
            assert!(a[5..].iter().all(|&x| x == a[5]));
            assert_ne!(a[0], a[5]);
        }
    }

    #[test]
    fn w_statistic() {
        let c: Vec<f64> = (0..100).map(|j| (j as f64 * 0.1).sin()).collect();
        assert_eq!(tb_mean_w(&c, &c).unwrap(), 0.0);
        let shifted: Vec<f64> = c.iter().map(|v| v + 0.5).collect();
        let w = tb_mean_w(&shifted, &c).unwrap();
        let var = unbiased_var(&c);
        assert!((w - 0.5 / (2.0 * var / 100.0).sqrt()).abs() < 1e-9);
        assert!(matches!(
            tb_mean_w(&[1.0; 10], &[2.0; 10]),
            Err(Error::DegeneratePair(_))
        ));
    }

    #[test]
    fn t_statistic_shift_invariant_and_small_for_parallel() {
        let cfg = TbConfig::default();
        let c: Vec<f64> = (0..100).map(|j| (j as f64 * 0.1).sin()).collect();
        let noise: Vec<f64> = (0..100).map(|j| 0.01 * ((j * 37 % 11) as f64 - 5.0)).collect();
        let x: Vec<f64> = c.iter().zip(&noise).map(|(a, b)| a + b + 3.0).collect();
        let t1 = tb_parallelism_t(&x, &c, &cfg).unwrap();
        let x2: Vec<f64> = x.iter().map(|v| v + 7.0).collect();
        let c2: Vec<f64> = c.iter().map(|v| v + 7.0).collect();
        let t2 = tb_parallelism_t(&x2, &c2, &cfg).unwrap();
        assert!((t1 - t2).abs() <= 1e-10 * t1);
        // A non-parallel curve has a much larger statistic.
        let bent: Vec<f64> = (0..100).map(|j| x[j] + 0.02 * j as f64).collect();
        assert!(tb_parallelism_t(&bent, &c, &cfg).unwrap() > t1);
        assert!(tb_parallelism_t(&c[..8], &c[..8], &cfg).is_err());
        assert_eq!(tb_parallelism_t(&c, &c, &cfg).unwrap(), 0.0);
    }

    #[test]
    fn psi_branches() {
        let g = 1.65;
        // Two parallel, one equal mean: mean branch.
        let (b, s) = psi(&[0.1, 0.2, 5.0], &[3.0, 0.5, 4.0], g);
        assert_eq!(b, PsiBranch::Mean);
        assert_eq!(s, vec![3.0, 0.5, 4.0]);
        // One parallel, two equal means: parallelism branch.
        let (b, s) = psi(&[0.1, 3.0, 5.0], &[0.2, 0.5, 4.0], g);
        assert_eq!(b, PsiBranch::Parallelism);
        assert_eq!(s, vec![0.1, 3.0, 5.0]);
        // Otherwise the normalized average.
        let (b, s) = psi(&[1.0, 4.0], &[2.0, 8.0], g);
        assert_eq!(b, PsiBranch::Combined);
        assert_eq!(s, vec![0.25, 1.0]);
    }

    #[test]
    fn tb_kmeans_k1_and_shift_invariance() {
        let v = DMatrix::from_fn(12, 30, |i, j| {
            let t = j as f64 / 29.0;
            (6.0 * t).sin() + if i < 6 { 0.0 } else { 2.0 } + 0.05 * (((i * 7 + j * 3) % 5) as f64 - 2.0)
        });
        let s = sample(v.clone());
        let cfg = TbConfig::default();
        assert_eq!(tb_kmeans(&s, 1, InitKind::Forgy, &cfg, 0).unwrap().assign(), &[0; 12]);
        let shifted = sample(v.map(|x| x + 4.0));
        for init in [InitKind::Forgy, InitKind::KMeansInit, InitKind::WardInit, InitKind::KMeansPlusPlus] {
            let a = tb_kmeans(&s, 2, init, &cfg, 3).unwrap();
            let b = tb_kmeans(&shifted, 2, init, &cfg, 3).unwrap();
            assert_eq!(a, b, "{init}");
        }
        assert!(tb_kmeans(&s, 2, InitKind::KernelKMeansInit, &cfg, 0).is_err());
    }

    #[test]
    fn bench_names_round_trip() {
        for m in BenchMethod::default_set() {
            assert_eq!(m.to_string().parse::<BenchMethod>().unwrap(), m);
        }
        assert_eq!(BenchMethod::Tbkm(InitKind::WardInit).to_string(), "tbkm-hclust");
        assert!("fkm-L3".parse::<BenchMethod>().is_err());
    }
}
