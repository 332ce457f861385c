//! Estimation of treatment effects under local interference.
//!
//! A unit's outcome may depend on other units' treatments through an
//! *interference signature* `I`, a per-unit summary of the treatments it is
//! exposed to. When the outcome is additive in the signature, conditioning
//! the propensity on both covariates and signature, `P(T | X, I)`, removes
//! the interference bias from inverse propensity weighting.
//!
//! Modules:
//! - [`data`]: datasets, adjacency graphs, CSV ingestion
//! - [`signature`]: signature builders (context share, adjacency, distance)
//! - [`propensity`]: cell and logistic propensity models, overlap audit
//! - [`estimators`]: IPW / stratified TACE, naive difference, TACRR
//! - [`inference`]: bootstrap intervals and dependence-based inflation
//! - [`simgen`]: simulation generators and toy demonstrators

pub mod data;
pub mod error;
pub mod estimators;
pub mod inference;
pub mod propensity;
pub mod rng;
pub mod signature;
pub mod simgen;
mod sum;

pub use data::{AdjacencyFormat, AdjacencyGraph, ColumnSelect, Dataset, Schema, UnitRecord};
pub use error::{Error, Result};
pub use estimators::{EstimateReport, Estimand, EstimatorSpec, PropensityKind, TaceMethod};
pub use inference::{DependenceSummary, InflationMethod, IntervalReport};
pub use propensity::{Adjustment, FeatureSet, OverlapReport, PropensityModel};
pub use signature::SignatureSpec;
