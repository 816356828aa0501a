//! External validation against known classes, silhouette widths and
//! silhouette-based choice of the number of clusters.

use std::collections::HashMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::method::Method;
use crate::mvclust::{pairwise_distances, Partition};
use crate::rng::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub purity: f64,
    pub fmeasure: f64,
    /// Pair-counting F score; see [`pairwise_fmeasure`].
    pub pairwise_f: f64,
    pub rand: f64,
    pub time_seconds: f64,
}

impl EvalReport {
    pub fn evaluate(pred: &Partition, truth: &[usize], time_seconds: f64) -> Result<Self> {
        let table = Contingency::new(pred, truth)?;
        Ok(Self {
            purity: table.purity(),
            fmeasure: table.fmeasure(),
            pairwise_f: table.pairwise_f(),
            rand: table.rand(),
            time_seconds,
        })
    }
}

/// Cluster-by-class counts.
struct Contingency {
    n: usize,
    counts: Vec<Vec<usize>>,
    cluster_sizes: Vec<usize>,
    class_sizes: Vec<usize>,
}

impl Contingency {
    fn new(pred: &Partition, truth: &[usize]) -> Result<Self> {
        let n = pred.len();
        if truth.len() != n {
            return invalid(format!("partition has {n} items but truth has {}", truth.len()));
        }
        if n == 0 {
            return invalid("cannot evaluate an empty partition");
        }
        let mut class_ids = HashMap::new();
        let classes: Vec<usize> = truth
            .iter()
            .map(|t| {
                let next = class_ids.len();
                *class_ids.entry(*t).or_insert(next)
            })
            .collect();
        let kc = class_ids.len();
        let kp = pred.k();
        let mut counts = vec![vec![0usize; kc]; kp];
        for (&p, &c) in pred.assign().iter().zip(&classes) {
            counts[p][c] += 1;
        }
        let cluster_sizes = counts.iter().map(|r| r.iter().sum()).collect();
        let class_sizes = (0..kc).map(|c| counts.iter().map(|r| r[c]).sum()).collect();
        Ok(Self {
            n,
            counts,
            cluster_sizes,
            class_sizes,
        })
    }

    fn purity(&self) -> f64 {
        let hits: usize = self
            .counts
            .iter()
            .map(|r| r.iter().copied().max().unwrap_or(0))
            .sum();
        hits as f64 / self.n as f64
    }

    fn fmeasure(&self) -> f64 {
        let n = self.n as f64;
        (0..self.class_sizes.len())
            .map(|c| {
                let class = self.class_sizes[c] as f64;
                let best = (0..self.counts.len())
                    .filter(|&p| self.counts[p][c] > 0)
                    .map(|p| {
                        let hit = self.counts[p][c] as f64;
                        let precision = hit / self.cluster_sizes[p] as f64;
                        let recall = hit / class;
                        2.0 * precision * recall / (precision + recall)
                    })
                    .fold(0.0, f64::max);
                class / n * best
            })
            .sum()
    }

    fn pair_counts(&self) -> (u128, u128, u128) {
        let pairs = |m: usize| (m as u128) * (m as u128).saturating_sub(1) / 2;
        let both = self.counts.iter().flatten().map(|&m| pairs(m)).sum();
        let same_cluster = self.cluster_sizes.iter().map(|&m| pairs(m)).sum();
        let same_class = self.class_sizes.iter().map(|&m| pairs(m)).sum();
        (both, same_cluster, same_class)
    }

    fn pairwise_f(&self) -> f64 {
        let (both, same_cluster, same_class) = self.pair_counts();
        if same_cluster + same_class == 0 {
            return 1.0;
        }
        (2 * both) as f64 / (same_cluster + same_class) as f64
    }

    fn rand(&self) -> f64 {
        let pairs = |m: usize| (m as u128) * (m as u128).saturating_sub(1) / 2;
        let total = pairs(self.n);
        if total == 0 {
            return 1.0;
        }
        let (both, same_cluster, same_class) = self.pair_counts();
        let agree = total + 2 * both - same_cluster - same_class;
        agree as f64 / total as f64
    }
}

/// F score over item pairs: precision and recall of the pairs placed
/// together by `pred` against the pairs sharing a class. Equals 1 when
/// neither side groups any pair.
pub fn pairwise_fmeasure(pred: &Partition, truth: &[usize]) -> Result<f64> {
    Ok(Contingency::new(pred, truth)?.pairwise_f())
}

/// Fraction of items that belong to the majority class of their cluster.
pub fn purity(pred: &Partition, truth: &[usize]) -> Result<f64> {
    Ok(Contingency::new(pred, truth)?.purity())
}

/// Class-size weighted best-match F score.
pub fn fmeasure(pred: &Partition, truth: &[usize]) -> Result<f64> {
    Ok(Contingency::new(pred, truth)?.fmeasure())
}

/// Fraction of item pairs on which the partition and the classes agree.
pub fn rand_index(pred: &Partition, truth: &[usize]) -> Result<f64> {
    if pred.len() < 2 {
        return invalid("the Rand index needs at least two items");
    }
    Ok(Contingency::new(pred, truth)?.rand())
}

/// Per-item silhouette widths and their mean, from a distance matrix.
/// Items in singleton clusters get 0.
pub fn silhouette(d: &DMatrix<f64>, part: &Partition) -> Result<(Vec<f64>, f64)> {
    let n = part.len();
    if d.nrows() != n || d.ncols() != n {
        return invalid("distance matrix does not match the partition");
    }
    if part.n_nonempty() < 2 {
        return invalid("silhouette needs at least two non-empty clusters");
    }
    let sizes = part.sizes();
    let assign = part.assign();
    let mut s = Vec::with_capacity(n);
    for i in 0..n {
        let own = assign[i];
        if sizes[own] == 1 {
            s.push(0.0);
            continue;
        }
        let mut sums = vec![0.0; part.k()];
        for j in 0..n {
            if j != i {
                sums[assign[j]] += d[(i, j)];
            }
        }
        let a = sums[own] / (sizes[own] - 1) as f64;
        let b = (0..part.k())
            .filter(|&c| c != own && sizes[c] > 0)
            .map(|c| sums[c] / sizes[c] as f64)
            .fold(f64::INFINITY, f64::min);
        let m = a.max(b);
        s.push(if m > 0.0 { (b - a) / m } else { 0.0 });
    }
    let mean = s.iter().sum::<f64>() / n as f64;
    Ok((s, mean))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KSelection {
    pub candidates: Vec<usize>,
    /// Mean silhouette per candidate; `None` where clustering failed.
    pub mean_silhouettes: Vec<Option<f64>>,
    /// Error message per failed candidate.
    pub failures: Vec<(usize, String)>,
    pub chosen: usize,
}

pub const DEFAULT_CANDIDATES: [usize; 5] = [2, 3, 4, 5, 6];

/// Runs `method` at every candidate `k` and keeps the one with the largest
/// mean silhouette; ties go to the smallest `k`.
pub fn select_k(
    x: &DMatrix<f64>,
    method: &Method,
    candidates: &[usize],
    seed: u64,
) -> Result<KSelection> {
    let n = x.nrows();
    if candidates.is_empty() {
        return invalid("no candidate cluster counts");
    }
    if let Some(&k) = candidates.iter().find(|&&k| k < 2 || k + 1 > n) {
        return invalid(format!("candidate k = {k} outside [2, {}]", n.saturating_sub(1)));
    }
    let mut candidates = candidates.to_vec();
    candidates.sort_unstable();
    candidates.dedup();
    let d = pairwise_distances(x);
    let mut means = Vec::with_capacity(candidates.len());
    let mut failures = Vec::new();
    for &k in &candidates {
        let outcome = method
            .cluster(x, k, derive_seed(seed, k as u64))
            .and_then(|p| silhouette(&d, &p));
        match outcome {
            Ok((_, m)) => means.push(Some(m)),
            Err(e) => {
                failures.push((k, e.to_string()));
                means.push(None);
            }
        }
    }
    let mut chosen = None;
    let mut best = f64::NEG_INFINITY;
    for (&k, m) in candidates.iter().zip(&means) {
        if let Some(m) = *m {
            if m > best {
                best = m;
                chosen = Some(k);
            }
        }
    }
    let Some(chosen) = chosen else {
        return Err(crate::Error::NumericalFailure(
            "clustering failed at every candidate k".into(),
        ));
    };
    Ok(KSelection {
        candidates,
        mean_silhouettes: means,
        failures,
        chosen,
    })
}
