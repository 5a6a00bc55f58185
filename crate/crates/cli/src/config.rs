//! Run configuration and config-file loading.

use std::path::{Path, PathBuf};

use aps_iv::simulation::{DgpConfig, McEstimator};
use aps_iv::{Mode, RuleSpec};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};
use crate::ingest::Schema;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Json,
    Csv,
    Table,
}

impl Format {
    pub const ALL: [Format; 3] = [Format::Json, Format::Csv, Format::Table];
}

impl std::str::FromStr for Format {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            "table" => Ok(Format::Table),
            _ => Err(CliError::Config(format!("unknown format '{s}' (json, csv, table)"))),
        }
    }
}

/// Monte Carlo settings, given as a `[monte_carlo]` table in a DGP file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MonteCarloSection {
    pub replications: usize,
    pub estimators: Vec<McEstimator>,
    pub oracle_n: usize,
    pub max_failure_rate: f64,
}

impl Default for MonteCarloSection {
    fn default() -> Self {
        let d = aps_iv::simulation::McConfig::default();
        Self {
            replications: d.replications,
            estimators: d.estimators,
            oracle_n: d.oracle_n,
            max_failure_rate: d.max_failure_rate,
        }
    }
}

/// Contents of a `--dgp` file: the DGP fields at top level and an optional
/// Monte Carlo section.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DgpFile {
    #[serde(flatten)]
    pub dgp: DgpConfig,
    #[serde(default)]
    pub monte_carlo: Option<MonteCarloSection>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Source {
    Csv { path: PathBuf, schema: Schema },
    Dgp(DgpFile),
}

/// Everything one invocation needs.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub source: Source,
    /// Required for CSV input; a simulated sample brings its own rule.
    pub rule: Option<RuleSpec>,
    pub deltas: Vec<f64>,
    /// `None` picks `max(1000, ⌈n^0.6⌉)`.
    pub draws: Option<usize>,
    pub seed: u64,
    /// Empty selects the defaults for the mode.
    pub estimators: Vec<Mode>,
    pub out: PathBuf,
    pub formats: Vec<Format>,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.deltas.is_empty() {
            return Err(CliError::Config("at least one bandwidth is required".into()));
        }
        if let Some(d) = self.deltas.iter().find(|d| !(d.is_finite() && **d > 0.0)) {
            return Err(CliError::Config(format!("bandwidth must be positive, got {d}")));
        }
        if self.draws == Some(0) {
            return Err(CliError::Config("draws must be at least 1".into()));
        }
        if self.formats.is_empty() {
            return Err(CliError::Config("no output format selected".into()));
        }
        match &self.source {
            Source::Csv { .. } if self.rule.is_none() => {
                Err(CliError::Config("--rule is required with --input".into()))
            }
            Source::Dgp(f) => {
                f.dgp.validate()?;
                if f.monte_carlo.is_some() && !self.estimators.is_empty() {
                    return Err(CliError::Config(
                        "Monte Carlo estimators are set in the [monte_carlo] table".into(),
                    ));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

/// Parses TOML, or JSON when the extension is `.json`.
pub fn load_file<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let parsed = if path.extension().is_some_and(|e| e == "json") {
        serde_json::from_str(&text).map_err(|e| e.to_string())
    } else {
        toml::from_str(&text).map_err(|e| e.to_string())
    };
    parsed.map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

/// Splits a comma-separated list and parses each item.
pub fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<T>()
                .map_err(|e| CliError::Config(format!("invalid {what} '{t}': {e}")))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rule_file_parses_from_toml() {
        let spec: RuleSpec = toml::from_str(
            r#"
            kind = "threshold"
            dim = 1
            coord = 0
            cutoff = 0.5
            "#,
        )
        .unwrap();
        assert!(matches!(spec, RuleSpec::Threshold { cutoff, .. } if cutoff == 0.5));
    }

    #[test]
    fn dgp_file_with_monte_carlo_section() {
        let f: DgpFile = toml::from_str(
            r#"
            n = 500
            p = 10
            model = "B"
            [monte_carlo]
            replications = 7
            estimators = ["aps_tsls", "naive_ols"]
            "#,
        )
        .unwrap();
        assert_eq!(f.dgp.n, 500);
        assert_eq!(f.dgp.band, DgpConfig::default().band);
        let mc = f.monte_carlo.unwrap();
        assert_eq!(mc.replications, 7);
        assert_eq!(mc.estimators, vec![McEstimator::ApsTsls, McEstimator::NaiveOls]);
    }

    #[test]
    fn lists_parse_and_reject_garbage() {
        assert_eq!(parse_list::<f64>("0.01, 0.05", "delta").unwrap(), vec![0.01, 0.05]);
        assert!(parse_list::<f64>("0.01,abc", "delta").is_err());
        assert_eq!(
            parse_list::<Mode>("tsls_aps,naive_ols", "estimator").unwrap(),
            vec![Mode::TslsAps, Mode::NaiveOls]
        );
    }
}
