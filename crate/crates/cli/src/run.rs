//! End-to-end orchestration: data, APS at each bandwidth, estimates, artifacts.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use aps_iv::algorithms::SharedRule;
use aps_iv::aps::default_draws;
use aps_iv::estimators::{self, bandwidth_sweep_with};
use aps_iv::report::{estimates_table, to_json_string};
use aps_iv::simulation::{generate_sample, run_monte_carlo, McConfig};
use aps_iv::{standardize, ApsResult, Dataset, EstimateReport, Mode, RuleSpec};
use serde::Serialize;

use crate::config::{DgpFile, Format, MonteCarloSection, RunConfig, Source};
use crate::error::{CliError, Result};
use crate::ingest::{fmt_real, ingest_csv};

/// One estimator outcome; exactly one of `report` and `error` is set.
#[derive(Debug, Clone, Serialize)]
pub struct EstimateEntry {
    pub label: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<EstimateReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl EstimateEntry {
    fn new(label: String, result: aps_iv::Result<EstimateReport>) -> Self {
        match result {
            Ok(r) => Self {
                label,
                report: Some(r),
                error: None,
            },
            Err(e) => Self {
                label,
                report: None,
                error: Some(e.to_string()),
            },
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BandwidthResult {
    pub delta: f64,
    pub seed: u64,
    pub n_nondegenerate: usize,
    pub estimates: Vec<EstimateEntry>,
}

/// Contents of `estimates.json`.
#[derive(Debug, Clone, Serialize)]
pub struct Estimates {
    pub n: usize,
    pub draws: usize,
    pub seed: u64,
    pub rule: Option<RuleSpec>,
    /// APS-controlled estimators, one block per bandwidth.
    pub sweep: Vec<BandwidthResult>,
    /// Estimators that do not use the APS.
    pub unadjusted: Vec<EstimateEntry>,
}

/// Executes `config` and returns the paths written, in order.
pub fn run(config: &RunConfig) -> Result<Vec<PathBuf>> {
    config.validate()?;
    std::fs::create_dir_all(&config.out).map_err(|e| CliError::io(&config.out, e))?;
    match &config.source {
        Source::Dgp(DgpFile {
            dgp,
            monte_carlo: Some(mc),
        }) => run_mc(config, dgp, mc),
        Source::Dgp(DgpFile { dgp, .. }) => {
            let sample = generate_sample(dgp)?;
            let rule_spec = sample.rule.descriptor();
            run_estimation(config, &sample.dataset, &sample.rule, rule_spec)
        }
        Source::Csv { path, schema } => {
            let dataset = ingest_csv(path, schema)?;
            let spec = config.rule.clone().expect("validated");
            let rule = spec.build()?;
            run_estimation(config, &dataset, &rule, Some(spec))
        }
    }
}

fn default_modes(dataset: &Dataset) -> Vec<Mode> {
    let mut modes = vec![Mode::TslsAps, Mode::OlsRecommendation];
    if !dataset.aux_columns().is_empty() {
        modes.push(Mode::OlsBalance);
    }
    modes.extend([Mode::NaiveOls, Mode::NaiveTsls]);
    modes
}

fn run_estimation(
    config: &RunConfig,
    raw: &Dataset,
    rule: &SharedRule,
    rule_spec: Option<RuleSpec>,
) -> Result<Vec<PathBuf>> {
    let modes = if config.estimators.is_empty() {
        default_modes(raw)
    } else {
        config.estimators.clone()
    };
    if modes.contains(&Mode::OlsBalance) && raw.aux_columns().is_empty() {
        return Err(CliError::Config("ols_balance needs at least one balance column".into()));
    }
    let (dataset, _) = standardize(raw)?;
    let draws = config.draws.unwrap_or_else(|| default_draws(dataset.n()));

    let aps_estimate = |ds: &Dataset, aps: &ApsResult| -> aps_iv::Result<Vec<EstimateEntry>> {
        let mut out = Vec::new();
        for &mode in modes.iter().filter(|m| m.uses_aps()) {
            match mode {
                Mode::OlsBalance => {
                    for (name, w) in ds.aux_columns() {
                        out.push(EstimateEntry::new(
                            format!("{mode}:{name}"),
                            estimators::ols_balance(ds, w, aps),
                        ));
                    }
                }
                _ => {
                    let spec = estimators::RegressionSpec::new(mode).with_aps(aps);
                    out.push(EstimateEntry::new(mode.to_string(), estimators::estimate(ds, &spec)));
                }
            }
        }
        Ok(out)
    };
    let entries = bandwidth_sweep_with(&dataset, rule.as_ref(), &config.deltas, draws, config.seed, aps_estimate)?;

    let mut aps_results = Vec::with_capacity(entries.len());
    let mut sweep = Vec::with_capacity(entries.len());
    for entry in entries {
        // Estimation failures are recorded per estimator; anything else is fatal.
        let estimates = entry.result?;
        sweep.push(BandwidthResult {
            delta: entry.delta,
            seed: entry.seed,
            n_nondegenerate: entry.aps.as_ref().map_or(0, ApsResult::n_nondegenerate),
            estimates,
        });
        aps_results.push(entry.aps);
    }
    let unadjusted: Vec<EstimateEntry> = modes
        .iter()
        .filter(|m| !m.uses_aps())
        .map(|&m| {
            let spec = estimators::RegressionSpec::new(m);
            EstimateEntry::new(m.to_string(), estimators::estimate(&dataset, &spec))
        })
        .collect();

    let estimates = Estimates {
        n: dataset.n(),
        draws,
        seed: config.seed,
        rule: rule_spec,
        sweep,
        unadjusted,
    };

    let mut written = Vec::new();
    for format in Format::ALL.into_iter().filter(|f| config.formats.contains(f)) {
        match format {
            Format::Csv => {
                written.push(write(&config.out, "aps.csv", &aps_csv(&config.deltas, &aps_results))?);
                written.push(write(&config.out, "sweep.csv", &sweep_csv(&estimates))?);
            }
            Format::Json => {
                let json = to_json_string(&estimates).map_err(|e| CliError::Config(e.to_string()))?;
                written.push(write(&config.out, "estimates.json", &json)?);
            }
            Format::Table => written.push(write(&config.out, "table.txt", &estimates_text(&estimates))?),
        }
    }

    let mut first_error = None;
    let mut any_ok = false;
    for e in estimates.sweep.iter().flat_map(|b| &b.estimates).chain(&estimates.unadjusted) {
        match &e.error {
            Some(msg) => {
                log::warn!("{} failed: {msg}", e.label);
                first_error.get_or_insert_with(|| format!("{}: {msg}", e.label));
            }
            None => any_ok = true,
        }
    }
    match (any_ok, first_error) {
        (false, Some(msg)) => Err(CliError::Estimation(msg)),
        _ => Ok(written),
    }
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|e| CliError::io(&path, e))?;
    Ok(path)
}

/// Long format: one line per observation and bandwidth. Rows count from 1.
fn aps_csv(deltas: &[f64], results: &[Option<ApsResult>]) -> String {
    let mut s = String::from("row,delta,aps,nondegenerate\n");
    for (delta, aps) in deltas.iter().zip(results) {
        let Some(aps) = aps else { continue };
        for (i, (v, nd)) in aps.values.iter().zip(&aps.nondegenerate).enumerate() {
            let _ = writeln!(s, "{},{},{},{}", i + 1, fmt_real(*delta), fmt_real(*v), u8::from(*nd));
        }
    }
    s
}

/// One row per bandwidth with estimate, robust SE and sample size per estimator.
fn sweep_csv(est: &Estimates) -> String {
    let labels: Vec<&str> = est
        .sweep
        .iter()
        .find(|b| !b.estimates.is_empty())
        .map(|b| b.estimates.iter().map(|e| e.label.as_str()).collect())
        .unwrap_or_default();
    let mut s = String::from("delta,n_nondegenerate");
    for l in &labels {
        let _ = write!(s, ",{l}_estimate,{l}_se,{l}_n");
    }
    s.push('\n');
    for b in &est.sweep {
        let _ = write!(s, "{},{}", fmt_real(b.delta), b.n_nondegenerate);
        for l in &labels {
            match b.estimates.iter().find(|e| e.label == *l).and_then(|e| e.report.as_ref()) {
                Some(r) => {
                    let _ = write!(s, ",{},{},{}", fmt_real(r.beta1), fmt_real(r.se_robust), r.n_used);
                }
                None => s.push_str(",,,"),
            }
        }
        s.push('\n');
    }
    s
}

fn estimates_text(est: &Estimates) -> String {
    let mut columns: Vec<(String, Option<&EstimateReport>)> = Vec::new();
    for b in &est.sweep {
        for e in &b.estimates {
            columns.push((format!("{} d={}", e.label, fmt_real(b.delta)), e.report.as_ref()));
        }
    }
    for e in &est.unadjusted {
        columns.push((e.label.clone(), e.report.as_ref()));
    }
    estimates_table(&columns)
}

fn run_mc(config: &RunConfig, dgp: &aps_iv::simulation::DgpConfig, mc: &MonteCarloSection) -> Result<Vec<PathBuf>> {
    let mc_config = McConfig {
        dgp: dgp.clone(),
        deltas: config.deltas.clone(),
        draws: config.draws.unwrap_or_else(|| default_draws(dgp.n)),
        replications: mc.replications,
        estimators: mc.estimators.clone(),
        seed: config.seed,
        oracle_n: mc.oracle_n,
        max_failure_rate: mc.max_failure_rate,
    };
    let summary = run_monte_carlo(&mc_config)?;
    let mut written = Vec::new();
    for format in Format::ALL.into_iter().filter(|f| config.formats.contains(f)) {
        match format {
            Format::Csv => written.push(write(&config.out, "mc_summary.csv", &summary.to_csv())?),
            Format::Json => {
                let json = to_json_string(&summary).map_err(|e| CliError::Config(e.to_string()))?;
                written.push(write(&config.out, "mc_summary.json", &json)?);
            }
            Format::Table => written.push(write(&config.out, "mc_table.txt", &summary.to_table())?),
        }
    }
    Ok(written)
}
