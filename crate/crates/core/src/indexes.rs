//! Epigraph and hypograph indexes and the feature matrices built from them.
//!
//! For a sample `x_1, …, x_n` on a grid of `m` points:
//!
//! * `EI(x)  = 1 − #{j : x_j(t) ≥ x(t) for every t} / n`
//! * `HI(x)  = #{j : x_j(t) ≤ x(t) for every t} / n`
//! * `MEI(x) = 1 − Σ_j #{t : x_j(t) ≥ x(t)} / (n·m)`
//! * `MHI(x) = Σ_j #{t : x_j(t) ≤ x(t)} / (n·m)`
//!
//! Comparisons are inclusive, so every curve lies in its own epigraph and
//! hypograph, and the time measure is uniform grid-point counting. On samples
//! without pointwise ties `MHI − MEI = 1/n`, which is why MHI is never used as
//! a feature.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::curves::{FunctionalSample, SmoothedTriple};
use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum IndexKind {
    Ei,
    Hi,
    Mei,
    Mhi,
}

impl IndexKind {
    pub fn name(self) -> &'static str {
        match self {
            IndexKind::Ei => "EI",
            IndexKind::Hi => "HI",
            IndexKind::Mei => "MEI",
            IndexKind::Mhi => "MHI",
        }
    }
}

impl fmt::Display for IndexKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Which curves an index is applied to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum DataSource {
    Original,
    FirstDerivative,
    SecondDerivative,
}

impl DataSource {
    pub const ALL: [DataSource; 3] = [
        DataSource::Original,
        DataSource::FirstDerivative,
        DataSource::SecondDerivative,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            DataSource::Original => "_",
            DataSource::FirstDerivative => "d",
            DataSource::SecondDerivative => "d2",
        }
    }

    pub fn select(self, triple: &SmoothedTriple) -> &FunctionalSample {
        match self {
            DataSource::Original => &triple.data,
            DataSource::FirstDerivative => &triple.d1,
            DataSource::SecondDerivative => &triple.d2,
        }
    }
}

/// Which indexes a combination applies to each of its sources.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum IndexFamily {
    EiHi,
    Mei,
    EiHiMei,
}

impl IndexFamily {
    pub fn tag(self) -> &'static str {
        match self {
            IndexFamily::EiHi => "EIHI",
            IndexFamily::Mei => "MEI",
            IndexFamily::EiHiMei => "EIHIMEI",
        }
    }

    pub fn kinds(self) -> &'static [IndexKind] {
        match self {
            IndexFamily::EiHi => &[IndexKind::Ei, IndexKind::Hi],
            IndexFamily::Mei => &[IndexKind::Mei],
            IndexFamily::EiHiMei => &[IndexKind::Ei, IndexKind::Hi, IndexKind::Mei],
        }
    }
}

impl FromStr for IndexFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "EIHI" => Ok(IndexFamily::EiHi),
            "MEI" => Ok(IndexFamily::Mei),
            "EIHIMEI" => Ok(IndexFamily::EiHiMei),
            _ => invalid(format!("unknown index family `{s}`")),
        }
    }
}

/// A `(b).(c)` combination: data sources and the index family applied to
/// each of them, e.g. `_dd2.EIHIMEI` or `dd2.MEI`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ComboSpec {
    sources: Vec<DataSource>,
    family: IndexFamily,
}

impl ComboSpec {
    /// Sources are stored in `_`, `d`, `d2` order. A combination of MEI alone
    /// needs at least two sources.
    pub fn new(mut sources: Vec<DataSource>, family: IndexFamily) -> Result<Self> {
        sources.sort();
        sources.dedup();
        if sources.is_empty() {
            return invalid("a combination needs at least one data source");
        }
        if family == IndexFamily::Mei && sources.len() < 2 {
            return invalid("MEI-only combinations need at least two data sources");
        }
        Ok(Self { sources, family })
    }

    pub fn sources(&self) -> &[DataSource] {
        &self.sources
    }

    pub fn family(&self) -> IndexFamily {
        self.family
    }

    /// Column descriptors in feature order: per source, EI, HI, then MEI.
    pub fn columns(&self) -> Vec<(IndexKind, DataSource)> {
        self.sources
            .iter()
            .flat_map(|&s| self.family.kinds().iter().map(move |&k| (k, s)))
            .collect()
    }

    pub fn n_columns(&self) -> usize {
        self.sources.len() * self.family.kinds().len()
    }

    pub fn sources_tag(&self) -> String {
        self.sources.iter().map(|s| s.tag()).collect()
    }
}

impl fmt::Display for ComboSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.sources_tag(), self.family.tag())
    }
}

pub(crate) fn parse_sources(s: &str) -> Result<Vec<DataSource>> {
    let mut rest = s;
    let mut out: Vec<DataSource> = Vec::new();
    while !rest.is_empty() {
        let (src, len) = if rest.starts_with('_') {
            (DataSource::Original, 1)
        } else if rest.starts_with("d2") {
            (DataSource::SecondDerivative, 2)
        } else if rest.starts_with('d') {
            (DataSource::FirstDerivative, 1)
        } else {
            return invalid(format!("cannot parse data sources `{s}`"));
        };
        if out.last().is_some_and(|&last| last >= src) {
            return invalid(format!("data sources `{s}` are repeated or out of order"));
        }
        out.push(src);
        rest = &rest[len..];
    }
    Ok(out)
}

impl FromStr for ComboSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (sources, family) = s
            .rsplit_once('.')
            .ok_or_else(|| Error::InvalidArgument(format!("`{s}` is not of the form sources.FAMILY")))?;
        ComboSpec::new(parse_sources(sources)?, family.parse()?)
    }
}

/// All 18 combinations: EIHI and EIHIMEI on each of the seven non-empty
/// source subsets, and MEI on the four subsets with at least two sources.
pub fn enumerate_combos() -> Vec<ComboSpec> {
    use DataSource::*;
    let subsets: [&[DataSource]; 7] = [
        &[Original],
        &[FirstDerivative],
        &[SecondDerivative],
        &[Original, FirstDerivative],
        &[Original, SecondDerivative],
        &[FirstDerivative, SecondDerivative],
        &[Original, FirstDerivative, SecondDerivative],
    ];
    let mut out = Vec::with_capacity(18);
    for family in [IndexFamily::EiHi, IndexFamily::EiHiMei, IndexFamily::Mei] {
        for s in subsets {
            if family == IndexFamily::Mei && s.len() < 2 {
                continue;
            }
            out.push(ComboSpec::new(s.to_vec(), family).expect("valid by construction"));
        }
    }
    out
}

/// Relative tolerance under which two values at the same grid point count as
/// tied in [`IndexTable`].
pub const TIE_TOLERANCE: f64 = 1e-9;

/// Merges values of each grid column that lie within `TIE_TOLERANCE` times the
/// largest absolute value of the sample, chaining through sorted neighbours.
/// Curves that differ by a vertical shift have derivatives that agree only up
/// to rounding error, and those spurious orderings would otherwise feed the
/// indexes.
pub fn snap_ties(sample: &FunctionalSample) -> FunctionalSample {
    let x = sample.values();
    let (n, m) = x.shape();
    let tol = TIE_TOLERANCE * x.amax();
    let mut out = x.clone();
    let mut order: Vec<usize> = (0..n).collect();
    for t in 0..m {
        order.sort_by(|&a, &b| x[(a, t)].total_cmp(&x[(b, t)]));
        let mut anchor = x[(order[0], t)];
        let mut prev = anchor;
        for &i in &order {
            let v = x[(i, t)];
            if v - prev > tol {
                anchor = v;
            }
            out[(i, t)] = anchor;
            prev = v;
        }
    }
    FunctionalSample::new(out, sample.grid().clone(), sample.labels().map(<[usize]>::to_vec))
        .expect("same shape and grid as a valid sample")
}

/// Index of every curve of `sample` with respect to the sample itself.
pub fn compute_index(kind: IndexKind, sample: &FunctionalSample) -> Vec<f64> {
    let x = sample.values();
    let (n, m) = x.shape();
    match kind {
        IndexKind::Ei | IndexKind::Hi => {
            let mut out = Vec::with_capacity(n);
            for i in 0..n {
                let count = (0..n)
                    .filter(|&j| match kind {
                        IndexKind::Ei => (0..m).all(|t| x[(j, t)] >= x[(i, t)]),
                        _ => (0..m).all(|t| x[(j, t)] <= x[(i, t)]),
                    })
                    .count();
                out.push(if kind == IndexKind::Ei {
                    1.0 - count as f64 / n as f64
                } else {
                    count as f64 / n as f64
                });
            }
            out
        }
        IndexKind::Mei | IndexKind::Mhi => {
            // Per grid point, rank counts via binary search in the sorted column.
            let mut counts = vec![0u64; n];
            let mut col = vec![0.0; n];
            for t in 0..m {
                for (j, c) in col.iter_mut().enumerate() {
                    *c = x[(j, t)];
                }
                col.sort_by(f64::total_cmp);
                for (i, cnt) in counts.iter_mut().enumerate() {
                    let v = x[(i, t)];
                    *cnt += if kind == IndexKind::Mei {
                        // #{j : x_j(t) >= v}
                        (n - col.partition_point(|&c| c < v)) as u64
                    } else {
                        // #{j : x_j(t) <= v}
                        col.partition_point(|&c| c <= v) as u64
                    };
                }
            }
            let total = (n * m) as f64;
            counts
                .into_iter()
                .map(|c| {
                    if kind == IndexKind::Mei {
                        1.0 - c as f64 / total
                    } else {
                        c as f64 / total
                    }
                })
                .collect()
        }
    }
}

/// Multivariate projection of a smoothed sample: `n` rows, one column per
/// `(index, source)` pair of the combination.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub values: DMatrix<f64>,
    pub columns: Vec<(IndexKind, DataSource)>,
    pub combo: ComboSpec,
}

impl FeatureMatrix {
    pub fn n_rows(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_cols(&self) -> usize {
        self.values.ncols()
    }
}

/// Builds the feature matrix of `combo` directly from a smoothed triple.
pub fn assemble_features(triple: &SmoothedTriple, combo: &ComboSpec) -> FeatureMatrix {
    let columns = combo.columns();
    let n = triple.data.n_curves();
    let mut values = DMatrix::zeros(n, columns.len());
    for (c, &(kind, source)) in columns.iter().enumerate() {
        let idx = compute_index(kind, source.select(triple));
        values.set_column(c, &nalgebra::DVector::from_vec(idx));
    }
    FeatureMatrix {
        values,
        columns,
        combo: combo.clone(),
    }
}

/// EI, HI and MEI of all three data sources, computed once and sliced into
/// any number of combinations.
#[derive(Debug, Clone)]
pub struct IndexTable {
    n: usize,
    // [source][EI, HI, MEI]
    table: [[Vec<f64>; 3]; 3],
}

impl IndexTable {
    pub fn new(triple: &SmoothedTriple) -> Self {
        let per_source = |s: DataSource| {
            let sample = snap_ties(s.select(triple));
            [
                compute_index(IndexKind::Ei, &sample),
                compute_index(IndexKind::Hi, &sample),
                compute_index(IndexKind::Mei, &sample),
            ]
        };
        Self {
            n: triple.data.n_curves(),
            table: DataSource::ALL.map(per_source),
        }
    }

    pub fn index(&self, kind: IndexKind, source: DataSource) -> &[f64] {
        let k = match kind {
            IndexKind::Ei => 0,
            IndexKind::Hi => 1,
            IndexKind::Mei => 2,
            IndexKind::Mhi => panic!("MHI is not stored; it is MEI + 1/n on tie-free samples"),
        };
        &self.table[source as usize][k]
    }

    pub fn features(&self, combo: &ComboSpec) -> FeatureMatrix {
        let columns = combo.columns();
        let values = DMatrix::from_fn(self.n, columns.len(), |i, c| {
            let (kind, source) = columns[c];
            self.index(kind, source)[i]
        });
        FeatureMatrix {
            values,
            columns,
            combo: combo.clone(),
        }
    }
}

/// Outcome of the admissibility check `|det(cov(Y))| > 1e-5`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Admissibility {
    Admissible { det: f64 },
    IllConditioned { det: f64 },
    InsufficientRows { rows: usize, cols: usize },
}

impl Admissibility {
    pub const THRESHOLD: f64 = 1e-5;

    pub fn is_admissible(&self) -> bool {
        matches!(self, Admissibility::Admissible { .. })
    }

    pub fn reason(&self) -> String {
        match self {
            Admissibility::Admissible { det } => format!("admissible (det {det:.3e})"),
            Admissibility::IllConditioned { det } => {
                format!("ill-conditioned: |det(cov)| = {:.3e} <= 1e-5", det.abs())
            }
            Admissibility::InsufficientRows { rows, cols } => {
                format!("insufficient rows: {rows} rows for {cols} columns")
            }
        }
    }
}

/// Unbiased (divisor `n − 1`) sample covariance of the columns of `x`.
pub fn covariance(x: &DMatrix<f64>) -> DMatrix<f64> {
    let (n, p) = x.shape();
    let means: Vec<f64> = (0..p).map(|c| x.column(c).mean()).collect();
    let centered = DMatrix::from_fn(n, p, |i, c| x[(i, c)] - means[c]);
    (centered.transpose() * &centered) / (n as f64 - 1.0)
}

pub fn admissible(features: &FeatureMatrix) -> Admissibility {
    let (n, p) = features.values.shape();
    if n <= p {
        return Admissibility::InsufficientRows { rows: n, cols: p };
    }
    let det = covariance(&features.values).determinant();
    if det.abs() > Admissibility::THRESHOLD {
        Admissibility::Admissible { det }
    } else {
        Admissibility::IllConditioned { det }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curves::Grid;

    fn sample(rows: &[&[f64]]) -> FunctionalSample {
        let m = rows[0].len();
        let grid = Grid::uniform(0.0, 1.0, m).unwrap();
        let vals = DMatrix::from_fn(rows.len(), m, |i, j| rows[i][j]);
        FunctionalSample::new(vals, grid, None).unwrap()
    }

    fn nested() -> FunctionalSample {
        sample(&[
            &[0.0, 0.1, 0.2, 0.1, 0.0],
            &[1.0, 1.1, 1.2, 1.1, 1.0],
            &[2.0, 2.5, 2.2, 2.1, 2.0],
        ])
    }

    #[test]
    fn nested_curves_closed_forms() {
        let s = nested();
        let close = |a: Vec<f64>, b: [f64; 3]| {
            a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-12)
        };
        assert!(close(compute_index(IndexKind::Ei, &s), [0.0, 1.0 / 3.0, 2.0 / 3.0]));
        assert!(close(compute_index(IndexKind::Hi, &s), [1.0 / 3.0, 2.0 / 3.0, 1.0]));
        assert!(close(compute_index(IndexKind::Mei, &s), [0.0, 1.0 / 3.0, 2.0 / 3.0]));
        assert!(close(compute_index(IndexKind::Mhi, &s), [1.0 / 3.0, 2.0 / 3.0, 1.0]));
    }

    #[test]
    fn crossing_curves() {
        // x0 and x1 cross once; x2 lies above both.
        let s = sample(&[&[0.0, 0.0, 1.0, 1.0], &[1.0, 1.0, 0.0, 0.0], &[2.0, 2.0, 2.0, 2.0]]);
        // Only x2 (and itself) lies fully above x0.
        assert_eq!(compute_index(IndexKind::Ei, &s), vec![1.0 - 2.0 / 3.0, 1.0 - 2.0 / 3.0, 1.0 - 1.0 / 3.0]);
        // x0: at each point counts of curves >= x0 are 3,3,2,2 -> 10 of 12.
        let mei = compute_index(IndexKind::Mei, &s);
        assert!((mei[0] - (1.0 - 10.0 / 12.0)).abs() < 1e-15);
        assert!((mei[2] - (1.0 - 4.0 / 12.0)).abs() < 1e-15);
    }

    #[test]
    fn combo_round_trip_and_columns() {
        for text in ["_.EIHI", "dd2.MEI", "_dd2.EIHIMEI", "d2.EIHI", "_d.MEI"] {
            let c: ComboSpec = text.parse().unwrap();
            assert_eq!(c.to_string(), text);
        }
        let c: ComboSpec = "_dd2.EIHIMEI".parse().unwrap();
        let names: Vec<String> = c
            .columns()
            .iter()
            .map(|(k, s)| format!("{}{}", if *s == DataSource::Original { "" } else { s.tag() }, k))
            .collect();
        assert_eq!(names, ["EI", "HI", "MEI", "dEI", "dHI", "dMEI", "d2EI", "d2HI", "d2MEI"]);
        let c: ComboSpec = "dd2.MEI".parse().unwrap();
        assert_eq!(
            c.columns(),
            vec![
                (IndexKind::Mei, DataSource::FirstDerivative),
                (IndexKind::Mei, DataSource::SecondDerivative)
            ]
        );
        for bad in ["d.MEI", "_.MEI", "d_.EIHI", "dd.EIHI", "x.EIHI", "_.FOO", "EIHI", ".EIHI"] {
            assert!(bad.parse::<ComboSpec>().is_err(), "{bad} should not parse");
        }
    }

    #[test]
    fn eighteen_combos() {
        let combos = enumerate_combos();
        assert_eq!(combos.len(), 18);
        let names: Vec<String> = combos.iter().map(|c| c.to_string()).collect();
        assert!(names.contains(&"_.EIHI".to_string()));
        assert!(names.contains(&"dd2.MEI".to_string()));
        for single in ["_.MEI", "d.MEI", "d2.MEI"] {
            assert!(!names.contains(&single.to_string()));
        }
        let mut dedup = names.clone();
        dedup.sort();
        dedup.dedup();
        assert_eq!(dedup.len(), 18);
        for c in &combos {
            let p = c.n_columns();
            let expected = c.sources().len() * c.family().kinds().len();
            assert_eq!(p, expected);
        }
    }

    #[test]
    fn admissibility_cases() {
        let fm = |rows: Vec<[f64; 2]>| FeatureMatrix {
            values: DMatrix::from_fn(rows.len(), 2, |i, j| rows[i][j]),
            columns: vec![],
            combo: "_.EIHI".parse().unwrap(),
        };
        // constant column
        assert!(!admissible(&fm(vec![[1.0, 0.0], [2.0, 0.0], [3.0, 0.0], [4.0, 0.0]])).is_admissible());
        // uncorrelated, unit variance: cov = I
        let a = admissible(&fm(vec![[1.0, 1.0], [1.0, -1.0], [-1.0, 1.0], [-1.0, -1.0]]));
        match a {
            Admissibility::Admissible { det } => assert!((det - 16.0 / 9.0).abs() < 1e-12),
            other => panic!("{other:?}"),
        }
        let b = admissible(&fm(vec![[1.0, 1.0], [2.0, 2.0], [0.0, 0.0], [5.0, 5.0]]));
        assert!(!b.is_admissible());
        assert_eq!(
            admissible(&fm(vec![[1.0, 1.0], [2.0, 3.0]])),
            Admissibility::InsufficientRows { rows: 2, cols: 2 }
        );
    }
}
