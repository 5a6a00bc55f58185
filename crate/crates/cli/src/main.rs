use std::path::PathBuf;
use std::process::ExitCode;

use aps_iv::RuleSpec;
use aps_iv_cli::config::{load_file, parse_list, DgpFile};
use aps_iv_cli::{configure_threads, run, CliError, Format, RunConfig, Schema, Source};
use clap::Parser;

/// Estimate treatment effects of algorithmic recommendations with
/// APS-controlled instrumental variables.
#[derive(Debug, Parser)]
#[command(name = "aps-iv", version)]
struct Args {
    /// CSV file with one row per observation.
    #[arg(long, conflicts_with = "dgp", required_unless_present = "dgp")]
    input: Option<PathBuf>,

    /// Column roles (TOML). Defaults to y, d, z with all other columns continuous.
    #[arg(long, requires = "input")]
    schema: Option<PathBuf>,

    /// Simulation design (TOML); a [monte_carlo] table switches to Monte Carlo mode.
    #[arg(long)]
    dgp: Option<PathBuf>,

    /// Decision rule descriptor (TOML, or JSON by extension).
    #[arg(long)]
    rule: Option<PathBuf>,

    /// Comma-separated bandwidths.
    #[arg(long, default_value = "0.05")]
    deltas: String,

    /// Draws per observation; defaults to max(1000, ceil(n^0.6)).
    #[arg(long)]
    draws: Option<usize>,

    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Comma-separated estimators: tsls_aps, ols_recommendation, ols_balance, naive_ols, naive_tsls.
    #[arg(long)]
    estimators: Option<String>,

    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,

    /// Comma-separated report formats: json, csv, table.
    #[arg(long, default_value = "json,csv,table")]
    format: String,
}

fn build_config(args: Args) -> Result<RunConfig, CliError> {
    let source = match (args.input, args.dgp) {
        (Some(path), None) => {
            let schema = match &args.schema {
                Some(p) => load_file::<Schema>(p)?,
                None => Schema::default(),
            };
            Source::Csv { path, schema }
        }
        (None, Some(p)) => Source::Dgp(load_file::<DgpFile>(&p)?),
        _ => return Err(CliError::Config("exactly one of --input and --dgp is required".into())),
    };
    let rule = args.rule.as_deref().map(load_file::<RuleSpec>).transpose()?;
    Ok(RunConfig {
        source,
        rule,
        deltas: parse_list(&args.deltas, "bandwidth")?,
        draws: args.draws,
        seed: args.seed,
        estimators: match &args.estimators {
            Some(s) => parse_list(s, "estimator")?,
            None => Vec::new(),
        },
        out: args.out,
        formats: parse_list::<Format>(&args.format, "format")?,
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let err = CliError::Config(e.to_string().trim_end().to_string());
            eprintln!("{}", err.to_json());
            return ExitCode::from(2);
        }
    };
    let result = configure_threads()
        .and_then(|()| build_config(args))
        .and_then(|config| run(&config));
    match result {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
