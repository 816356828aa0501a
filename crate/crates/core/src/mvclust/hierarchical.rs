//! Agglomerative clustering with Lance–Williams updates.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::Partition;
use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LinkageKind {
    Single,
    Complete,
    Average,
    /// Lance–Williams on squared Euclidean distances; may produce inversions.
    Centroid,
    /// Ward on squared distances with square-rooted merge heights (`ward.D2`).
    WardD2,
}

impl LinkageKind {
    pub const ALL: [LinkageKind; 5] = [
        LinkageKind::Single,
        LinkageKind::Complete,
        LinkageKind::Average,
        LinkageKind::Centroid,
        LinkageKind::WardD2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LinkageKind::Single => "single",
            LinkageKind::Complete => "complete",
            LinkageKind::Average => "average",
            LinkageKind::Centroid => "centroid",
            LinkageKind::WardD2 => "ward.D2",
        }
    }

    fn on_squared(self) -> bool {
        matches!(self, LinkageKind::Centroid | LinkageKind::WardD2)
    }
}

impl fmt::Display for LinkageKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LinkageKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        LinkageKind::ALL
            .into_iter()
            .find(|l| l.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown linkage `{s}`")))
    }
}

/// One agglomeration step. Leaves are nodes `0..n`; merge `s` creates node
/// `n + s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Merge {
    pub left: usize,
    pub right: usize,
    pub height: f64,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dendrogram {
    n: usize,
    merges: Vec<Merge>,
}

impl Dendrogram {
    pub fn merges(&self) -> &[Merge] {
        &self.merges
    }

    pub fn n_leaves(&self) -> usize {
        self.n
    }

    /// Partition into `k` clusters obtained by removing the `k − 1` tallest
    /// merges (later merges first among equal heights).
    pub fn cut(&self, k: usize) -> Result<Partition> {
        let n = self.n;
        if k == 0 || k > n {
            return invalid(format!("cannot cut {n} leaves into {k} clusters"));
        }
        let mut by_height: Vec<usize> = (0..self.merges.len()).collect();
        by_height.sort_by(|&a, &b| {
            self.merges[b]
                .height
                .total_cmp(&self.merges[a].height)
                .then(b.cmp(&a))
        });
        let mut removed = vec![false; self.merges.len()];
        for &s in by_height.iter().take(k - 1) {
            removed[s] = true;
        }

        // A leaf representing every node.
        let mut rep = vec![0usize; n + self.merges.len()];
        for (i, r) in rep.iter_mut().enumerate().take(n) {
            *r = i;
        }
        for (s, m) in self.merges.iter().enumerate() {
            rep[n + s] = rep[m.left];
        }
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for (s, m) in self.merges.iter().enumerate() {
            if removed[s] {
                continue;
            }
            let a = find(&mut parent, rep[m.left]);
            let b = find(&mut parent, rep[m.right]);
            if a != b {
                parent[b] = a;
            }
        }
        let roots: Vec<usize> = (0..n).map(|i| find(&mut parent, i)).collect();
        Ok(Partition::from_labels(&roots))
    }
}

/// Agglomerates the items of distance matrix `d` under `linkage`.
pub fn hcluster(d: &DMatrix<f64>, linkage: LinkageKind) -> Result<Dendrogram> {
    let n = d.nrows();
    if n == 0 || d.ncols() != n {
        return invalid("distance matrix must be square and non-empty");
    }
    for i in 0..n {
        for j in 0..n {
            let v = d[(i, j)];
            if !v.is_finite() || v < 0.0 || (v - d[(j, i)]).abs() > 1e-12 * (1.0 + v.abs()) {
                return invalid(format!("invalid distance at ({i}, {j})"));
            }
        }
    }
    let squared = linkage.on_squared();
    let mut w = if squared { d.map(|v| v * v) } else { d.clone() };
    let mut active: Vec<bool> = vec![true; n];
    let mut node: Vec<usize> = (0..n).collect();
    let mut size: Vec<usize> = vec![1; n];
    let mut merges = Vec::with_capacity(n.saturating_sub(1));

    for step in 0..n.saturating_sub(1) {
        let mut best = (usize::MAX, usize::MAX, f64::INFINITY);
        for i in 0..n {
            if !active[i] {
                continue;
            }
            for j in (i + 1)..n {
                if active[j] && w[(i, j)] < best.2 {
                    best = (i, j, w[(i, j)]);
                }
            }
        }
        let (i, j, dij) = best;
        let (ni, nj) = (size[i] as f64, size[j] as f64);
        for k in 0..n {
            if !active[k] || k == i || k == j {
                continue;
            }
            let (dik, djk) = (w[(i, k)], w[(j, k)]);
            let nk = size[k] as f64;
            let v = match linkage {
                LinkageKind::Single => dik.min(djk),
                LinkageKind::Complete => dik.max(djk),
                LinkageKind::Average => (ni * dik + nj * djk) / (ni + nj),
                LinkageKind::Centroid => {
                    (ni * dik + nj * djk) / (ni + nj) - ni * nj * dij / ((ni + nj) * (ni + nj))
                }
                LinkageKind::WardD2 => ((ni + nk) * dik + (nj + nk) * djk - nk * dij) / (ni + nj + nk),
            };
            w[(i, k)] = v;
            w[(k, i)] = v;
        }
        let height = if squared { dij.max(0.0).sqrt() } else { dij };
        let (a, b) = (node[i].min(node[j]), node[i].max(node[j]));
        merges.push(Merge {
            left: a,
            right: b,
            height,
            size: size[i] + size[j],
        });
        size[i] += size[j];
        node[i] = n + step;
        active[j] = false;
    }
    Ok(Dendrogram { n, merges })
}
