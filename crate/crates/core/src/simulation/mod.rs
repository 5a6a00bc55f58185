//! Simulated data with known potential outcomes, and the Monte Carlo harness.

mod dgp;
mod monte_carlo;
mod oracle;
mod tree;

pub use dgp::{
    fit_tau_pred, generate_sample, v_support, Dgp, DgpConfig, Model, Sample, TauPredictor,
    TauSignRule, TauSource, MIN_SURROGATE,
};
pub use monte_carlo::{
    run_monte_carlo, run_monte_carlo_with, Column, Draw, Estimand, McCell, McConfig, McEstimator,
    McSummary,
};
pub use oracle::{oracle_estimands, population_estimands, OracleEstimands};
pub use tree::{RegressionTree, TreeParams};
