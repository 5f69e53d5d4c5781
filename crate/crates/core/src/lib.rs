//! Co-authorship network centrality features and beta-regression models of
//! same-year citation percentiles.

pub mod aggregation;
pub mod centrality;
pub mod cli;
pub mod data_model;
pub mod error;
pub mod features;
pub mod graph;
pub mod predictive;
pub mod regression;
pub mod stats;
pub mod synth;
pub mod tuning;

pub use error::{Error, Result};
