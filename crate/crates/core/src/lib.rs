//! Causal effects of algorithmic recommendations via the approximate
//! propensity score (APS).
//!
//! The workflow has two steps. First, [`aps::simulate_aps`] averages a
//! decision rule over uniform draws from a small ball around each
//! observation's (standardized) covariates. Second, the estimators in
//! [`estimators`] run 2SLS of the outcome on the treatment, instrumented by
//! the recommendation and controlling for the simulated score, on the
//! observations whose score lies strictly between 0 and 1.
//!
//! [`simulation`] contains a data-generating process with known potential
//! outcomes and a Monte Carlo harness that scores the estimators.

pub mod algorithms;
pub mod aps;
pub mod data;
pub mod error;
pub mod estimators;
pub mod report;
pub mod rng;
pub mod simulation;
pub mod special;
pub mod stats;

pub use algorithms::{DecisionRule, RuleSpec};
pub use aps::{simulate_aps, ApsConfig, ApsResult};
pub use data::{standardize, Dataset, PotentialOutcomes, StandardizationMap, TreatmentKind};
pub use error::{Error, Result};
pub use estimators::{EstimateReport, Mode};
