//! Clustering method descriptors and the `(a).(b).(c)` configuration names
//! used in reports.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::indexes::ComboSpec;
use crate::mvclust::{
    hcluster, kernel_kmeans, kernel_matrix, kmeans, median_sigma, pairwise_distances,
    spectral_cluster, InitKind, KernelSpec, LinkageKind, Metric, Partition,
};

/// Kernel family whose parameters are fixed from the data at run time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum KernelChoice {
    /// Bandwidth set to the median pairwise distance.
    Gaussian,
    /// Degree 2, scale 1, offset 1.
    Polynomial,
    Linear,
}

impl KernelChoice {
    pub fn name(self) -> &'static str {
        match self {
            KernelChoice::Gaussian => "gaussian",
            KernelChoice::Polynomial => "polynomial",
            KernelChoice::Linear => "linear",
        }
    }

    pub fn spec_for(self, x: &DMatrix<f64>) -> KernelSpec {
        match self {
            KernelChoice::Gaussian => KernelSpec::Gaussian {
                sigma: median_sigma(x),
            },
            KernelChoice::Polynomial => KernelSpec::polynomial_default(),
            KernelChoice::Linear => KernelSpec::Linear,
        }
    }
}

impl FromStr for KernelChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(KernelChoice::Gaussian),
            "polynomial" => Ok(KernelChoice::Polynomial),
            "linear" => Ok(KernelChoice::Linear),
            _ => invalid(format!("unknown kernel `{s}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Algorithm {
    Hierarchical(LinkageKind),
    KMeans(Metric),
    KernelKMeans(KernelChoice),
    Spectral(KernelChoice),
}

/// A multivariate clustering method applied to feature matrices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Method {
    pub algorithm: Algorithm,
    /// Ignored by the hierarchical methods.
    pub init: InitKind,
}

impl Method {
    pub fn new(algorithm: Algorithm) -> Self {
        Self {
            algorithm,
            init: InitKind::KMeansPlusPlus,
        }
    }

    pub fn with_init(mut self, init: InitKind) -> Self {
        self.init = init;
        self
    }

    /// Method tag `(a)` as printed in configuration names.
    pub fn tag(&self) -> &'static str {
        match self.algorithm {
            Algorithm::Hierarchical(l) => l.name(),
            Algorithm::KMeans(_) => "kmeans",
            Algorithm::KernelKMeans(_) => "kkmeans",
            Algorithm::Spectral(_) => "spc",
        }
    }

    /// Geometry or kernel; empty for hierarchical methods.
    pub fn variant(&self) -> &'static str {
        match self.algorithm {
            Algorithm::Hierarchical(_) => "",
            Algorithm::KMeans(m) => m.name(),
            Algorithm::KernelKMeans(c) | Algorithm::Spectral(c) => c.name(),
        }
    }

    /// Name used in configuration names: the bare tag for hierarchical
    /// methods, Euclidean k-means and Gaussian kernels, `tag:variant` otherwise.
    pub fn short_name(&self) -> String {
        match self.algorithm {
            Algorithm::Hierarchical(_)
            | Algorithm::KMeans(Metric::Euclidean)
            | Algorithm::KernelKMeans(KernelChoice::Gaussian)
            | Algorithm::Spectral(KernelChoice::Gaussian) => self.tag().to_string(),
            _ => self.to_string(),
        }
    }

    /// The grid run by default: five linkages, k-means in both geometries,
    /// kernel k-means with Gaussian and polynomial kernels and Gaussian
    /// spectral clustering.
    pub fn default_grid() -> Vec<Method> {
        let mut v: Vec<Method> = LinkageKind::ALL
            .into_iter()
            .map(|l| Method::new(Algorithm::Hierarchical(l)))
            .collect();
        v.extend([
            Method::new(Algorithm::KMeans(Metric::Euclidean)),
            Method::new(Algorithm::KMeans(Metric::Mahalanobis)),
            Method::new(Algorithm::KernelKMeans(KernelChoice::Gaussian)),
            Method::new(Algorithm::KernelKMeans(KernelChoice::Polynomial)),
            Method::new(Algorithm::Spectral(KernelChoice::Gaussian)),
        ]);
        v
    }

    pub fn cluster(&self, x: &DMatrix<f64>, k: usize, seed: u64) -> Result<Partition> {
        match self.algorithm {
            Algorithm::Hierarchical(l) => hcluster(&pairwise_distances(x), l)?.cut(k),
            Algorithm::KMeans(m) => kmeans(x, k, self.init, m, seed),
            Algorithm::KernelKMeans(c) => {
                kernel_kmeans(&kernel_matrix(x, &c.spec_for(x))?, k, self.init, seed)
            }
            Algorithm::Spectral(c) => spectral_cluster(x, k, &c.spec_for(x), seed),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.algorithm {
            Algorithm::Hierarchical(_) => f.write_str(self.tag()),
            _ => write!(f, "{}:{}", self.tag(), self.variant()),
        }
    }
}

/// Parses `tag` or `tag:variant`, e.g. `ward.D2`, `kmeans:mahalanobis`,
/// `kkmeans:polynomial`. Kernel methods default to the Gaussian kernel and
/// k-means to Euclidean geometry.
impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (tag, variant) = match s.split_once(':') {
            Some((t, v)) => (t, Some(v)),
            None => (s, None),
        };
        let algorithm = match tag {
            "kmeans" => Algorithm::KMeans(variant.unwrap_or("euclidean").parse()?),
            "kkmeans" => Algorithm::KernelKMeans(variant.unwrap_or("gaussian").parse()?),
            "spc" => Algorithm::Spectral(variant.unwrap_or("gaussian").parse()?),
            _ => {
                if variant.is_some() {
                    return invalid(format!("method `{tag}` takes no variant"));
                }
                Algorithm::Hierarchical(tag.parse()?)
            }
        };
        Ok(Method::new(algorithm))
    }
}

/// Full configuration name `(a).(b).(c)`: method, data sources and index
/// family, e.g. `kmeans._d.MEI`, `ward.D2.dd2.EIHI` or
/// `kmeans:mahalanobis._.EIHI`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ConfigName {
    pub method: String,
    pub combo: ComboSpec,
}

impl ConfigName {
    pub fn new(method: &Method, combo: ComboSpec) -> Self {
        Self {
            method: method.short_name(),
            combo,
        }
    }
}

impl fmt::Display for ConfigName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.method, self.combo)
    }
}

impl FromStr for ConfigName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut parts = s.rsplitn(3, '.');
        let (Some(family), Some(sources), Some(method)) = (parts.next(), parts.next(), parts.next())
        else {
            return invalid(format!("configuration name `{s}` is not of the form a.b.c"));
        };
        let tag_ok = method
            .parse::<Method>()
            .map(|m| m.short_name() == method)
            .unwrap_or(false);
        if !tag_ok {
            return invalid(format!("unknown method `{method}`"));
        }
        Ok(Self {
            method: method.to_string(),
            combo: format!("{sources}.{family}").parse()?,
        })
    }
}
