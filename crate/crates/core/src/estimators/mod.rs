//! APS-controlled 2SLS and OLS with heteroskedasticity-robust (HC0) standard
//! errors, the uncontrolled benchmarks, and bandwidth sweeps.
//!
//! APS-controlled modes use only observations with `0 < p^s < 1`.

mod linear;
mod sweep;

use serde::{Deserialize, Serialize};

pub use linear::RCOND_MIN;
pub use sweep::{bandwidth_sweep, bandwidth_sweep_with, SweepEntry};

use crate::aps::ApsResult;
use crate::data::Dataset;
use crate::error::{Error, Result};
use linear::{iv_fit, Singular};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// `Y` on `(1, D, p^s)` instrumented by `(1, Z, p^s)`.
    TslsAps,
    /// OLS of `Y` on `(1, Z, p^s)`.
    OlsRecommendation,
    /// OLS of a covariate `W` on `(1, Z, p^s)`.
    OlsBalance,
    /// OLS of `Y` on `(1, D)`, full sample.
    NaiveOls,
    /// `Y` on `(1, D)` instrumented by `(1, Z)`, full sample.
    NaiveTsls,
}

impl Mode {
    pub const ALL: [Mode; 5] = [
        Mode::TslsAps,
        Mode::OlsRecommendation,
        Mode::OlsBalance,
        Mode::NaiveOls,
        Mode::NaiveTsls,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Mode::TslsAps => "tsls_aps",
            Mode::OlsRecommendation => "ols_recommendation",
            Mode::OlsBalance => "ols_balance",
            Mode::NaiveOls => "naive_ols",
            Mode::NaiveTsls => "naive_tsls",
        }
    }

    pub fn uses_aps(self) -> bool {
        !matches!(self, Mode::NaiveOls | Mode::NaiveTsls)
    }

    fn is_iv(self) -> bool {
        matches!(self, Mode::TslsAps | Mode::NaiveTsls)
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Mode::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown estimator '{s}'")))
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InterceptPolicy {
    /// Drop the intercept when every used `p^s` takes the same value.
    #[default]
    Auto,
    /// Always include it; a constant score then makes the design singular.
    Forced,
}

/// What to regress and how.
#[derive(Debug, Clone, Copy)]
pub struct RegressionSpec<'a> {
    pub mode: Mode,
    pub intercept: InterceptPolicy,
    /// Required for the APS-controlled modes, ignored otherwise.
    pub aps: Option<&'a ApsResult>,
    /// Replaces `Y` as the dependent variable (the covariate in balance mode).
    pub outcome: Option<&'a [f64]>,
}

impl<'a> RegressionSpec<'a> {
    pub fn new(mode: Mode) -> Self {
        Self {
            mode,
            intercept: InterceptPolicy::Auto,
            aps: None,
            outcome: None,
        }
    }

    pub fn with_aps(mut self, aps: &'a ApsResult) -> Self {
        self.aps = Some(aps);
        self
    }

    pub fn with_outcome(mut self, outcome: &'a [f64]) -> Self {
        self.outcome = Some(outcome);
        self
    }

    pub fn with_intercept(mut self, policy: InterceptPolicy) -> Self {
        self.intercept = policy;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coefficient {
    pub name: String,
    pub estimate: f64,
    pub se: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FirstStage {
    pub gamma1: f64,
    pub se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub mode: Mode,
    /// Coefficient on `D` (2SLS and naive OLS) or on `Z` (recommendation and balance).
    pub beta1: f64,
    pub se_robust: f64,
    pub coefficients: Vec<Coefficient>,
    /// HC0 covariance of all coefficients, row-major.
    pub covariance: Vec<Vec<f64>>,
    /// Coefficient on `Z` in the regression of `D` on the instruments.
    pub first_stage: Option<FirstStage>,
    pub n_total: usize,
    pub n_used: usize,
    pub intercept_dropped: bool,
    pub delta: Option<f64>,
    pub draws: Option<usize>,
}

impl EstimateReport {
    /// Nominal 95% normal interval for `beta1`.
    pub fn ci95(&self) -> (f64, f64) {
        (
            self.beta1 - 1.96 * self.se_robust,
            self.beta1 + 1.96 * self.se_robust,
        )
    }

    pub fn covers(&self, value: f64) -> bool {
        let (lo, hi) = self.ci95();
        lo <= value && value <= hi
    }
}

/// Runs one regression described by `spec`.
pub fn estimate(dataset: &Dataset, spec: &RegressionSpec<'_>) -> Result<EstimateReport> {
    let n_total = dataset.n();
    let y_all = spec.outcome.unwrap_or(dataset.y());
    if y_all.len() != n_total {
        return Err(Error::DimensionMismatch {
            what: "dependent variable",
            expected: n_total,
            found: y_all.len(),
        });
    }
    let (d_all, z_all) = (dataset.d(), dataset.z());

    let aps = if spec.mode.uses_aps() {
        let aps = spec.aps.ok_or_else(|| {
            Error::InvalidParameter(format!("{} requires an APS result", spec.mode))
        })?;
        if aps.n() != n_total {
            return Err(Error::DimensionMismatch {
                what: "APS values",
                expected: n_total,
                found: aps.n(),
            });
        }
        Some(aps)
    } else {
        None
    };

    let rows: Vec<usize> = match aps {
        Some(a) => (0..n_total).filter(|&i| a.nondegenerate[i]).collect(),
        None => (0..n_total).collect(),
    };
    if rows.is_empty() {
        return Err(if aps.is_some() {
            Error::NoNondegenerateRows
        } else {
            Error::EmptyDataset { n: 0, min: 1 }
        });
    }

    let intercept_dropped = match (aps, spec.intercept) {
        (Some(a), InterceptPolicy::Auto) => {
            let first = a.values[rows[0]];
            rows.iter().all(|&i| a.values[i] == first)
        }
        _ => false,
    };

    // Column layout: [const], main regressor, [aps].
    let main_name = match spec.mode {
        Mode::TslsAps | Mode::NaiveOls | Mode::NaiveTsls => "D",
        Mode::OlsRecommendation | Mode::OlsBalance => "Z",
    };
    let mut names = Vec::new();
    if !intercept_dropped {
        names.push("const");
    }
    names.push(main_name);
    if aps.is_some() {
        names.push("aps");
    }
    let k = names.len();
    let main_idx = usize::from(!intercept_dropped);

    let mut x = Vec::with_capacity(rows.len() * k);
    let mut z = Vec::with_capacity(rows.len() * k);
    let mut y = Vec::with_capacity(rows.len());
    let mut d = Vec::with_capacity(rows.len());
    for &i in &rows {
        let main = match spec.mode {
            Mode::TslsAps | Mode::NaiveOls | Mode::NaiveTsls => d_all[i],
            _ => z_all[i],
        };
        let inst = if spec.mode.is_iv() { z_all[i] } else { main };
        if !intercept_dropped {
            x.push(1.0);
            z.push(1.0);
        }
        x.push(main);
        z.push(inst);
        if let Some(a) = aps {
            x.push(a.values[i]);
            z.push(a.values[i]);
        }
        y.push(y_all[i]);
        d.push(d_all[i]);
    }

    let singular = if aps.is_some() {
        Singular::Weak
    } else {
        Singular::Design
    };
    let fit = iv_fit(&x, &z, &y, k, singular)?;

    let first_stage = if spec.mode.is_iv() {
        let fs = iv_fit(&z, &z, &d, k, singular)?;
        Some(FirstStage {
            gamma1: fs.coef[main_idx],
            se: fs.cov[(main_idx, main_idx)].max(0.0).sqrt(),
        })
    } else {
        None
    };

    let se = |j: usize| fit.cov[(j, j)].max(0.0).sqrt();
    let coefficients = names
        .iter()
        .enumerate()
        .map(|(j, name)| Coefficient {
            name: (*name).to_string(),
            estimate: fit.coef[j],
            se: se(j),
        })
        .collect();
    let covariance = (0..k)
        .map(|a| (0..k).map(|b| fit.cov[(a, b)]).collect())
        .collect();

    Ok(EstimateReport {
        mode: spec.mode,
        beta1: fit.coef[main_idx],
        se_robust: se(main_idx),
        coefficients,
        covariance,
        first_stage,
        n_total,
        n_used: rows.len(),
        intercept_dropped,
        delta: aps.map(|a| a.config.delta),
        draws: aps.map(|a| a.config.draws),
    })
}

/// 2SLS of `Y` on `(1, D, p^s)` instrumented by `(1, Z, p^s)` over the
/// nondegenerate observations.
pub fn tsls_aps(dataset: &Dataset, aps: &ApsResult) -> Result<EstimateReport> {
    estimate(dataset, &RegressionSpec::new(Mode::TslsAps).with_aps(aps))
}

/// OLS of `Y` on `(1, Z, p^s)` over the nondegenerate observations.
pub fn ols_recommendation(dataset: &Dataset, aps: &ApsResult) -> Result<EstimateReport> {
    estimate(dataset, &RegressionSpec::new(Mode::OlsRecommendation).with_aps(aps))
}

/// OLS of the covariate `w` on `(1, Z, p^s)` over the nondegenerate observations.
pub fn ols_balance(dataset: &Dataset, w: &[f64], aps: &ApsResult) -> Result<EstimateReport> {
    estimate(
        dataset,
        &RegressionSpec::new(Mode::OlsBalance)
            .with_aps(aps)
            .with_outcome(w),
    )
}

/// OLS of `Y` on `(1, D)` with no controls.
pub fn naive_ols(dataset: &Dataset) -> Result<EstimateReport> {
    estimate(dataset, &RegressionSpec::new(Mode::NaiveOls))
}

/// 2SLS of `Y` on `(1, D)` instrumented by `(1, Z)` with no controls.
pub fn naive_tsls(dataset: &Dataset) -> Result<EstimateReport> {
    estimate(dataset, &RegressionSpec::new(Mode::NaiveTsls))
}
