use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use gwsfs::estimate::{SizeBasis, DEFAULT_INVERSION_TOL};
use gwsfs::sim::StopCondition;

use crate::config::RunConfig;
use crate::converge::{cmd_converge, ScaleKind};
use crate::error::{CliError, Result, EXIT_FAILURE, EXIT_OK};
use crate::estimate::cmd_estimate;
use crate::limits::{cmd_limits, LimitMethod};
use crate::output::{write_record, write_rows, Format};
use crate::simulate::cmd_simulate;
use crate::validate::{cmd_validate, ValidateOptions};

#[derive(Debug, Parser)]
#[command(
    name = "gwsfs",
    version,
    about = "Site frequency spectra of supercritical branching processes"
)]
pub struct Cli {
    /// TOML file with model parameters and an optional [run] table.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Output directory for files written by `simulate`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Table format; `estimate` defaults to json, everything else to csv.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run replicates; write replicates.jsonl and aggregate.csv.
    Simulate {
        #[arg(long)]
        replicates: Option<usize>,
        #[arg(long, conflicts_with = "time")]
        size: Option<u64>,
        #[arg(long)]
        time: Option<f64>,
        /// Clone sizes to track with enter/exit counters, e.g. 1,2,3.
        #[arg(long, value_delimiter = ',')]
        instrument: Vec<u64>,
        #[arg(long)]
        y_extension: Option<f64>,
    },
    /// Print large-population limits of N^-1 S_j.
    Limits {
        #[arg(long, default_value_t = 10)]
        j_max: u64,
        #[arg(long, value_enum, default_value_t = LimitMethod::Auto)]
        method: LimitMethod,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
    /// Estimate p and nu/lambda from an SFS CSV (header j,count).
    Estimate {
        #[arg(long)]
        sfs: PathBuf,
        #[arg(long, conflicts_with_all = ["time", "lambda", "y_hat"])]
        population_size: Option<f64>,
        #[arg(long, requires_all = ["lambda", "y_hat"])]
        time: Option<f64>,
        #[arg(long, requires = "time")]
        lambda: Option<f64>,
        #[arg(long, requires = "time")]
        y_hat: Option<f64>,
        #[arg(long, default_value_t = 1)]
        j: u64,
        #[arg(long, default_value_t = DEFAULT_INVERSION_TOL)]
        tol: f64,
    },
    /// Compare simulated spectra with their limits across scales.
    Converge {
        /// Strictly increasing sizes or times, e.g. 100,1000,10000.
        #[arg(long, value_delimiter = ',', required = true)]
        scales: Vec<f64>,
        /// Defaults to the stop kind of the configuration.
        #[arg(long, value_enum)]
        kind: Option<ScaleKind>,
        #[arg(long, default_value_t = 5)]
        j_max: u64,
        /// Surviving replicates per scale.
        #[arg(long)]
        replicates: Option<usize>,
    },
    /// Run the invariant suite; exit status 1 if any check fails.
    Validate {
        #[arg(long, hide = true)]
        tamper: bool,
    },
}

impl Cli {
    /// Configuration file (or defaults) with the global flags applied.
    pub fn run_config(&self) -> Result<RunConfig> {
        let mut config = match &self.config {
            Some(path) => RunConfig::from_toml_file(path)?,
            None => RunConfig::default(),
        };
        if let Some(seed) = self.seed {
            config.master_seed = seed;
        }
        if let Some(workers) = self.workers {
            config.workers = workers;
        }
        if let Some(out) = &self.out {
            config.output_dir = out.clone();
        }
        Ok(config)
    }
}

/// Runs the parsed command, writing tables to `stdout`. Returns the exit status.
pub fn execute(cli: &Cli, stdout: &mut dyn Write) -> Result<u8> {
    let mut config = cli.run_config()?;
    let table_format = cli.format.unwrap_or(Format::Csv);
    let io = |e| CliError::Io {
        path: PathBuf::from("<stdout>"),
        source: e,
    };
    match &cli.command {
        Command::Simulate {
            replicates,
            size,
            time,
            instrument,
            y_extension,
        } => {
            if let Some(r) = replicates {
                config.replicates = *r;
            }
            if let Some(n) = size {
                config.stop = StopCondition::FixedSize(*n);
            }
            if let Some(t) = time {
                config.stop = StopCondition::FixedTime(*t);
            }
            if !instrument.is_empty() {
                config.instrument_js = instrument.clone();
            }
            if y_extension.is_some() {
                config.y_extension = *y_extension;
            }
            let summary = cmd_simulate(&config)?;
            write_record(&summary, table_format, stdout).map_err(io)?;
        }
        Command::Limits { j_max, method, tol } => {
            config.model.validate()?;
            let rows = cmd_limits(&config.model, *j_max, *method, *tol)?;
            write_rows(&rows, table_format, stdout).map_err(io)?;
        }
        Command::Estimate {
            sfs,
            population_size,
            time,
            lambda,
            y_hat,
            j,
            tol,
        } => {
            let basis = match (population_size, time, lambda, y_hat) {
                (Some(size), None, None, None) => SizeBasis::FixedSize { size: *size },
                (None, Some(time), Some(growth_rate), Some(y_hat)) => SizeBasis::FixedTime {
                    time: *time,
                    growth_rate: *growth_rate,
                    y_hat: *y_hat,
                },
                _ => {
                    return Err(CliError::InvalidConfig(
                        "give --population-size, or all of --time, --lambda and --y-hat".into(),
                    ))
                }
            };
            let report = cmd_estimate(sfs, basis, *j, *tol)?;
            write_record(&report, cli.format.unwrap_or(Format::Json), stdout).map_err(io)?;
        }
        Command::Converge {
            scales,
            kind,
            j_max,
            replicates,
        } => {
            if let Some(r) = replicates {
                config.replicates = *r;
            }
            let kind = kind.unwrap_or(match config.stop {
                StopCondition::FixedSize(_) => ScaleKind::Size,
                StopCondition::FixedTime(_) => ScaleKind::Time,
            });
            let table = cmd_converge(&config, kind, scales, *j_max)?;
            write_rows(&table.rows, table_format, stdout).map_err(io)?;
        }
        Command::Validate { tamper } => {
            let opts = ValidateOptions {
                tamper: *tamper,
                ..ValidateOptions::default()
            };
            let report = cmd_validate(&config, &opts);
            write_rows(&report.checks, table_format, stdout).map_err(io)?;
            if !report.passed() {
                return Ok(EXIT_FAILURE);
            }
        }
    }
    Ok(EXIT_OK)
}
