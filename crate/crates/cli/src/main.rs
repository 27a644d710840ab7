//! `wmlg` command-line front end.

mod commands;
mod config;
mod error;

use clap::{Args, Parser, Subcommand};
use config::RunConfig;
use error::CliError;
use std::path::PathBuf;

#[derive(Debug, Parser)]
#[command(name = "wmlg", version, about = "Threshold-based weighted mean loss statistics over panel data")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Emit machine-readable JSON.
    #[arg(long, global = true)]
    json: bool,

    /// Write the report to this file instead of standard output.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,

    /// `key = value` configuration file; flags take precedence.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Index value at each requested time.
    Compute(DataArgs),
    /// Index value at every panel time as CSV.
    Series(DataArgs),
    /// Asymptotic covariance matrix, plug-in or analytic.
    Cov {
        #[command(flatten)]
        data: DataArgs,
        /// Analytic covariance under these marginals (`;`-separated, one per time or one for all).
        #[arg(long)]
        marginals: Option<String>,
        /// Gaussian-copula dependence for the analytic covariance.
        #[arg(long)]
        dependence: Option<String>,
    },
    /// Absolute and relative variation between two times with intervals.
    Variation {
        #[command(flatten)]
        data: DataArgs,
        /// Significance level of the intervals.
        #[arg(long)]
        level: Option<f64>,
        /// Target relative change for the verdict.
        #[arg(long, allow_negative_numbers = true)]
        target: Option<f64>,
    },
    /// Monte Carlo experiment; exits 1 when a pass criterion fails.
    Simulate(SimulateArgs),
    /// Diagnostics of the regularity hypotheses on a panel.
    Check {
        #[command(flatten)]
        data: DataArgs,
        /// Hölder exponent in (0, 1/2).
        #[arg(long)]
        r: Option<f64>,
    },
}

#[derive(Debug, Args)]
struct DataArgs {
    /// Long-format panel CSV.
    #[arg(long, value_name = "PATH")]
    input: Option<PathBuf>,
    /// Column names as `id,time,value`.
    #[arg(long)]
    columns: Option<String>,
    /// general, kakwani, sen, shorrocks, thon or fgt.
    #[arg(long)]
    index: Option<String>,
    /// Kakwani exponent.
    #[arg(long)]
    k: Option<u32>,
    /// FGT exponent.
    #[arg(long, alias = "alpha")]
    alpha_exp: Option<f64>,
    /// Weights of the general index: unit, thon, shorrocks or kakwani:K.
    #[arg(long)]
    weights: Option<String>,
    /// identity, power:A or pwl:PATH.
    #[arg(long)]
    cost: Option<String>,
    /// Constant threshold.
    #[arg(long)]
    z: Option<f64>,
    /// Per-time thresholds as a `time,z` CSV.
    #[arg(long, value_name = "PATH")]
    z_file: Option<PathBuf>,
    /// Comma-separated times.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    times: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// clt, representation, quantile-form, coverage, consistency, plugin or arbitration.
    #[arg(long)]
    experiment: Option<String>,
    /// Master seed; required here or in the configuration file.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    replications: Option<usize>,
    #[arg(long)]
    index: Option<String>,
    /// Extra configuration entries.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl DataArgs {
    fn into_config(self) -> RunConfig {
        RunConfig {
            input: self.input,
            columns: self.columns,
            index: self.index,
            k: self.k,
            alpha_exp: self.alpha_exp,
            weights: self.weights,
            cost: self.cost,
            z: self.z,
            z_file: self.z_file,
            times: self.times,
            ..Default::default()
        }
    }
}

fn merged(file: &Option<PathBuf>, flags: RunConfig) -> Result<RunConfig, CliError> {
    let base = match file {
        Some(path) => {
            if !path.is_file() {
                return Err(CliError::Usage(format!("file not found: {}", path.display())));
            }
            RunConfig::from_file(path)?
        }
        None => RunConfig::default(),
    };
    let cfg = base.overridden_by(flags);
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), CliError> {
    let out = commands::Output {
        json: cli.json,
        path: cli.out,
    };
    match cli.command {
        Command::Compute(data) => commands::compute(&merged(&cli.config, data.into_config())?, &out),
        Command::Series(data) => commands::series(&merged(&cli.config, data.into_config())?, &out),
        Command::Cov {
            data,
            marginals,
            dependence,
        } => {
            let flags = RunConfig {
                marginals,
                dependence,
                ..data.into_config()
            };
            commands::cov(&merged(&cli.config, flags)?, &out)
        }
        Command::Variation { data, level, target } => {
            let flags = RunConfig {
                level,
                target,
                ..data.into_config()
            };
            commands::variation(&merged(&cli.config, flags)?, &out)
        }
        Command::Check { data, r } => {
            let flags = RunConfig {
                r,
                ..data.into_config()
            };
            commands::check(&merged(&cli.config, flags)?, &out)
        }
        Command::Simulate(args) => {
            let mut overrides: Vec<(String, String)> = Vec::new();
            let mut push = |k: &str, v: Option<String>| {
                if let Some(v) = v {
                    overrides.push((k.to_string(), v));
                }
            };
            push("experiment", args.experiment);
            push("seed", args.seed.map(|s| s.to_string()));
            push("n", args.n.map(|n| n.to_string()));
            push("replications", args.replications.map(|r| r.to_string()));
            push("index", args.index);
            for entry in &args.set {
                let (k, v) = entry
                    .split_once('=')
                    .ok_or_else(|| CliError::Usage(format!("--set expects KEY=VALUE, got `{entry}`")))?;
                overrides.push((k.trim().replace('-', "_"), v.trim().to_string()));
            }
            commands::simulate(cli.config.as_deref(), &overrides, &out)
        }
    }
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
