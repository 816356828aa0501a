//! Clustering of functional data by way of epigraph and hypograph indexes.
//!
//! A sample of curves is smoothed with a cubic B-spline basis, the smoothed
//! curves and their first two derivatives are mapped to a small multivariate
//! feature matrix through the epigraph (EI), hypograph (HI) and modified
//! epigraph (MEI) indexes, and any multivariate clustering method is then run
//! on those features.
//!
//! The crate also carries the pieces needed to benchmark that pipeline:
//! seeded generators for the simulation models in [`simgen`], external and
//! internal validation in [`metrics`], and two functional k-means baselines in
//! [`benchkm`].

pub mod benchkm;
pub mod curves;
mod error;
pub mod indexes;
pub mod method;
pub mod metrics;
pub mod mvclust;
pub mod rng;
pub mod simgen;

pub use curves::{make_basis, smooth, smooth_penalized, BSplineBasis, FunctionalSample, Grid, SmoothedTriple, Smoother};
pub use error::{Error, Result};
pub use indexes::{
    admissible, assemble_features, compute_index, enumerate_combos, Admissibility, ComboSpec,
    DataSource, FeatureMatrix, IndexKind,
};
pub use method::{ConfigName, Method};
pub use mvclust::Partition;
