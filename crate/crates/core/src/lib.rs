//! Expected search times for two searchers sweeping a truncated line with
//! deleted gaps, under normal, Cauchy, skew-normal and gamma priors.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod distributions;
pub mod error;
pub mod format;
pub mod montecarlo;
pub mod optimizer;
pub mod piecewise;
pub mod search_model;
pub mod special_fn;
pub mod truncation;

pub use distributions::DistributionSpec;
pub use error::{Error, Result};
pub use optimizer::{NewtonOptions, OptimizationResult, PenaltyParams, PenaltyTriple};
pub use search_model::{expected_time, expected_time_table, SearchSpeeds};
pub use truncation::{make_truncated, Gap, Side, TruncatedDistribution, TruncationClass, TruncationLayout};
