//! Monte Carlo replications of the estimators on the simulated process.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dgp::{Dgp, DgpConfig};
use super::oracle::{population_estimands, OracleEstimands};
use crate::aps::{simulate_aps, ApsConfig, ApsResult};
use crate::data::standardize;
use crate::error::{Error, Result};
use crate::estimators::{naive_ols, naive_tsls, tsls_aps, EstimateReport};
use crate::report::{fmt3, render_table};
use crate::rng::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum McEstimator {
    /// 2SLS with simulated APS controls, once per bandwidth.
    ApsTsls,
    /// 2SLS controlling for the true `A(X)` on `A(X) ∈ (0, 1)`.
    ExactTsls,
    NaiveOls,
    NaiveTsls,
}

impl McEstimator {
    pub fn name(self) -> &'static str {
        match self {
            McEstimator::ApsTsls => "aps_tsls",
            McEstimator::ExactTsls => "exact_tsls",
            McEstimator::NaiveOls => "naive_ols",
            McEstimator::NaiveTsls => "naive_tsls",
        }
    }
}

impl std::str::FromStr for McEstimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            McEstimator::ApsTsls,
            McEstimator::ExactTsls,
            McEstimator::NaiveOls,
            McEstimator::NaiveTsls,
        ]
        .into_iter()
        .find(|e| e.name() == s)
        .ok_or_else(|| Error::Config(format!("unknown Monte Carlo estimator '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimand {
    Ate,
    AteRct,
    Late,
    LateRct,
}

impl Estimand {
    pub const ALL: [Estimand; 4] = [Estimand::Ate, Estimand::AteRct, Estimand::Late, Estimand::LateRct];

    pub fn name(self) -> &'static str {
        match self {
            Estimand::Ate => "ATE",
            Estimand::AteRct => "ATE(RCT)",
            Estimand::Late => "LATE",
            Estimand::LateRct => "LATE(RCT)",
        }
    }

    fn value(self, e: &OracleEstimands) -> Option<f64> {
        match self {
            Estimand::Ate => Some(e.ate),
            Estimand::AteRct => e.ate_rct,
            Estimand::Late => Some(e.late),
            Estimand::LateRct => e.late_rct,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct McConfig {
    pub dgp: DgpConfig,
    pub deltas: Vec<f64>,
    pub draws: usize,
    pub replications: usize,
    pub estimators: Vec<McEstimator>,
    pub seed: u64,
    /// Draws used to approximate the population estimands.
    pub oracle_n: usize,
    /// Largest tolerated share of failed replications in any column.
    pub max_failure_rate: f64,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            dgp: DgpConfig::default(),
            deltas: vec![0.01, 0.05, 0.1, 0.25, 0.5, 1.0],
            draws: 400,
            replications: 1000,
            estimators: vec![
                McEstimator::ApsTsls,
                McEstimator::ExactTsls,
                McEstimator::NaiveOls,
            ],
            seed: 0,
            oracle_n: 2_000_000,
            max_failure_rate: 0.1,
        }
    }
}

/// One estimator column of the summary: an estimator at one bandwidth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Column {
    pub estimator: McEstimator,
    pub delta: Option<f64>,
}

impl Column {
    pub fn label(&self) -> String {
        match self.delta {
            Some(d) => format!("{} d={d}", self.estimator.name()),
            None => self.estimator.name().to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McCell {
    pub column: Column,
    pub estimand: Estimand,
    pub target: f64,
    pub bias: f64,
    /// Spread with denominator `R`, so `rmse² = bias² + sd²`.
    pub sd: f64,
    pub rmse: f64,
    /// Share of nominal 95% intervals containing the target.
    pub coverage: f64,
    pub avg_n_used: f64,
    pub replications: usize,
    pub failures: usize,
}

/// A replication's outcome for one column.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Draw {
    pub beta1: f64,
    pub se: f64,
    pub n_used: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McSummary {
    pub columns: Vec<Column>,
    pub estimands: OracleEstimands,
    pub cells: Vec<McCell>,
    /// `draws[r][c]`: replication `r`, column `c`; `None` for a failure.
    #[serde(skip)]
    pub draws: Vec<Vec<Option<Draw>>>,
}

fn columns(config: &McConfig) -> Vec<Column> {
    let mut cols = Vec::new();
    for &e in &config.estimators {
        if e == McEstimator::ApsTsls {
            cols.extend(config.deltas.iter().map(|&d| Column {
                estimator: e,
                delta: Some(d),
            }));
        } else {
            cols.push(Column {
                estimator: e,
                delta: None,
            });
        }
    }
    cols
}

fn validate(config: &McConfig) -> Result<()> {
    config.dgp.validate()?;
    if config.replications < 2 {
        return Err(Error::Config("at least two replications are required".into()));
    }
    if config.estimators.is_empty() {
        return Err(Error::Config("no estimators selected".into()));
    }
    if config.estimators.contains(&McEstimator::ApsTsls) {
        if config.deltas.is_empty() {
            return Err(Error::Config("no bandwidths given".into()));
        }
        for &d in &config.deltas {
            ApsConfig::new(d, config.draws, 0)?;
        }
    }
    if config.oracle_n == 0 {
        return Err(Error::Config("oracle_n must be positive".into()));
    }
    Ok(())
}

/// Fits the process and runs the replications.
pub fn run_monte_carlo(config: &McConfig) -> Result<McSummary> {
    validate(config)?;
    let dgp = Dgp::new(config.dgp.clone())?;
    run_monte_carlo_with(&dgp, config)
}

/// Runs the replications on an already fitted process.
pub fn run_monte_carlo_with(dgp: &Dgp, config: &McConfig) -> Result<McSummary> {
    validate(config)?;
    let estimands = population_estimands(dgp, config.oracle_n, derive_seed(config.seed, u64::MAX))?;
    let cols = columns(config);

    let draws: Vec<Vec<Option<Draw>>> = (0..config.replications)
        .into_par_iter()
        .map(|r| replicate(dgp, config, &cols, derive_seed(config.seed, r as u64)))
        .collect::<Result<_>>()?;

    let mut cells = Vec::new();
    for (c, col) in cols.iter().enumerate() {
        let ok: Vec<Draw> = draws.iter().filter_map(|row| row[c]).collect();
        let failures = draws.len() - ok.len();
        if failures as f64 > config.max_failure_rate * draws.len() as f64 || ok.is_empty() {
            return Err(Error::TooManyFailures {
                cell: col.label(),
                failed: failures,
                total: draws.len(),
            });
        }
        for estimand in Estimand::ALL {
            let Some(target) = estimand.value(&estimands) else {
                continue;
            };
            cells.push(summarize(*col, estimand, target, &ok, failures));
        }
    }
    Ok(McSummary {
        columns: cols,
        estimands,
        cells,
        draws,
    })
}

fn summarize(column: Column, estimand: Estimand, target: f64, ok: &[Draw], failures: usize) -> McCell {
    let r = ok.len() as f64;
    let mean = ok.iter().map(|d| d.beta1).sum::<f64>() / r;
    let sd = (ok.iter().map(|d| (d.beta1 - mean).powi(2)).sum::<f64>() / r).sqrt();
    let bias = mean - target;
    let covered = ok
        .iter()
        .filter(|d| (d.beta1 - target).abs() <= 1.96 * d.se)
        .count();
    McCell {
        column,
        estimand,
        target,
        bias,
        sd,
        rmse: (bias * bias + sd * sd).sqrt(),
        coverage: covered as f64 / r,
        avg_n_used: ok.iter().map(|d| d.n_used as f64).sum::<f64>() / r,
        replications: ok.len(),
        failures,
    }
}

fn to_draw(r: Result<EstimateReport>) -> Option<Draw> {
    match r {
        Ok(rep) if rep.beta1.is_finite() && rep.se_robust.is_finite() => Some(Draw {
            beta1: rep.beta1,
            se: rep.se_robust,
            n_used: rep.n_used,
        }),
        Ok(_) => None,
        Err(e) => {
            log::debug!("replication failed: {e}");
            None
        }
    }
}

fn replicate(dgp: &Dgp, config: &McConfig, cols: &[Column], seed: u64) -> Result<Vec<Option<Draw>>> {
    let sample = dgp.sample(seed)?;
    let (std_data, _) = standardize(&sample.dataset)?;
    let mut out = Vec::with_capacity(cols.len());
    let mut aps_index = 0u64;
    for col in cols {
        let draw = match (col.estimator, col.delta) {
            (McEstimator::ApsTsls, Some(delta)) => {
                aps_index += 1;
                let cfg = ApsConfig::new(delta, config.draws, derive_seed(seed, aps_index))?;
                let aps = simulate_aps(&std_data, sample.rule.as_ref(), &cfg)?;
                to_draw(tsls_aps(&std_data, &aps))
            }
            (McEstimator::ExactTsls, _) => {
                let values = (0..std_data.n())
                    .map(|i| sample.rule.evaluate(sample.dataset.x_cont_row(i), &[]))
                    .collect();
                let cfg = ApsConfig {
                    delta: 0.0,
                    draws: 0,
                    seed,
                };
                to_draw(tsls_aps(&std_data, &ApsResult::from_values(values, cfg)))
            }
            (McEstimator::NaiveOls, _) => to_draw(naive_ols(&std_data)),
            (McEstimator::NaiveTsls, _) => to_draw(naive_tsls(&std_data)),
            (McEstimator::ApsTsls, None) => unreachable!("APS columns carry a bandwidth"),
        };
        out.push(draw);
    }
    Ok(out)
}

impl McSummary {
    pub fn cell(&self, column: usize, estimand: Estimand) -> Option<&McCell> {
        let col = self.columns.get(column)?;
        self.cells
            .iter()
            .find(|c| c.column == *col && c.estimand == estimand)
    }

    /// Long-format CSV, one line per (column, estimand).
    pub fn to_csv(&self) -> String {
        let mut s = String::from(
            "estimator,delta,estimand,target,bias,sd,rmse,coverage,avg_n_used,replications,failures\n",
        );
        for c in &self.cells {
            let delta = c.column.delta.map(|d| d.to_string()).unwrap_or_default();
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{},{},{}",
                c.column.estimator.name(),
                delta,
                c.estimand.name(),
                c.target,
                c.bias,
                c.sd,
                c.rmse,
                c.coverage,
                c.avg_n_used,
                c.replications,
                c.failures
            );
        }
        s
    }

    /// Panels of bias / SD / RMSE per estimand, then coverage for
    /// LATE(RCT) and the average estimation sample size.
    pub fn to_table(&self) -> String {
        let header: Vec<String> = self.columns.iter().map(Column::label).collect();
        let mut rows = Vec::new();
        let per_col = |estimand: Estimand, f: &dyn Fn(&McCell) -> String| -> Vec<String> {
            (0..self.columns.len())
                .map(|c| self.cell(c, estimand).map(f).unwrap_or_else(|| "-".into()))
                .collect()
        };
        for estimand in Estimand::ALL {
            let Some(first) = self.cells.iter().find(|c| c.estimand == estimand) else {
                continue;
            };
            rows.push((format!("{} = {}", estimand.name(), fmt3(first.target)), vec![]));
            rows.push(("  Bias".into(), per_col(estimand, &|c| fmt3(c.bias))));
            rows.push(("  SD".into(), per_col(estimand, &|c| fmt3(c.sd))));
            rows.push(("  RMSE".into(), per_col(estimand, &|c| fmt3(c.rmse))));
        }
        rows.push((
            "Coverage".into(),
            per_col(Estimand::LateRct, &|c| format!("{:.1}%", 100.0 * c.coverage)),
        ));
        rows.push((
            "Avg N".into(),
            per_col(Estimand::LateRct, &|c| format!("{:.0}", c.avg_n_used)),
        ));
        render_table(&header, &rows)
    }
}
