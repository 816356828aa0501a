//! Batch front-end for `epiclust`: scenario generation, the method by index
//! combination grid, baseline benchmarks, cluster-count selection and the
//! report and plot writers behind the `epiclust` binary.

pub mod config;
pub mod ingest;
pub mod plot;
pub mod report;
pub mod runner;
