//! Run configuration: model parameters plus a `[run]` table in one TOML file.
//!
//! ```toml
//! lifetime_rate = 1.0
//! mutation_rate = 1.0
//! [offspring]
//! 0 = "1/4"
//! 2 = "3/4"
//!
//! [run]
//! size = 10000          # or: time = 18.4
//! replicates = 1000
//! seed = 42
//! workers = 4
//! instrument_js = [1, 2, 3]
//! y_extension = 2.0
//! output_dir = "out"
//! ```

use std::path::{Path, PathBuf};

use serde::Deserialize;

use gwsfs::model::{ModelParams, OffspringDistribution};
use gwsfs::sim::{RunOptions, StopCondition};

use crate::error::{CliError, Result};

pub const DEFAULT_SIZE: u64 = 1000;
pub const DEFAULT_REPLICATES: usize = 100;
pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_OUTPUT_DIR: &str = "gwsfs-out";

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub model: ModelParams,
    pub stop: StopCondition,
    pub replicates: usize,
    pub master_seed: u64,
    pub workers: usize,
    pub instrument_js: Vec<u64>,
    /// `None` uses the simulator default of `4 / lambda`.
    pub y_extension: Option<f64>,
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    /// Birth-death with `u = {0: 1/4, 2: 3/4}`, `a = nu = 1`, stopped at `N = 1000`.
    fn default() -> Self {
        Self {
            model: ModelParams::new(1.0, 1.0, OffspringDistribution::birth_death(0.25)),
            stop: StopCondition::FixedSize(DEFAULT_SIZE),
            replicates: DEFAULT_REPLICATES,
            master_seed: DEFAULT_SEED,
            workers: default_workers(),
            instrument_js: Vec::new(),
            y_extension: None,
            output_dir: PathBuf::from(DEFAULT_OUTPUT_DIR),
        }
    }
}

pub fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRun {
    size: Option<u64>,
    time: Option<f64>,
    replicates: Option<usize>,
    seed: Option<u64>,
    workers: Option<usize>,
    instrument_js: Option<Vec<u64>>,
    y_extension: Option<f64>,
    output_dir: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
struct RawFile {
    #[serde(default)]
    run: RawRun,
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let model = ModelParams::from_toml_str(text)?;
        let raw: RawFile =
            toml::from_str(text).map_err(|e| CliError::InvalidConfig(e.to_string()))?;
        let run = raw.run;
        let defaults = Self::default();
        let stop = match (run.size, run.time) {
            (Some(_), Some(_)) => {
                return Err(CliError::InvalidConfig(
                    "set only one of run.size and run.time".into(),
                ));
            }
            (Some(n), None) => StopCondition::FixedSize(n),
            (None, Some(t)) => StopCondition::FixedTime(t),
            (None, None) => defaults.stop,
        };
        let config = Self {
            model,
            stop,
            replicates: run.replicates.unwrap_or(defaults.replicates),
            master_seed: run.seed.unwrap_or(defaults.master_seed),
            workers: run.workers.unwrap_or(defaults.workers),
            instrument_js: run.instrument_js.unwrap_or_default(),
            y_extension: run.y_extension,
            output_dir: run.output_dir.unwrap_or(defaults.output_dir),
        };
        config.validate()?;
        Ok(config)
    }

    pub fn from_toml_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        if self.replicates == 0 {
            return Err(CliError::InvalidConfig(
                "replicates must be at least 1".into(),
            ));
        }
        if self.workers == 0 {
            return Err(CliError::InvalidConfig("workers must be at least 1".into()));
        }
        match self.stop {
            StopCondition::FixedSize(0) => {
                return Err(CliError::InvalidConfig("size must be at least 1".into()))
            }
            StopCondition::FixedTime(t) if !(t > 0.0 && t.is_finite()) => {
                return Err(CliError::InvalidConfig(format!(
                    "time must be positive, got {t}"
                )));
            }
            _ => {}
        }
        if let Some(d) = self.y_extension {
            if !(d >= 0.0 && d.is_finite()) {
                return Err(CliError::InvalidConfig(format!(
                    "y_extension must be >= 0, got {d}"
                )));
            }
        }
        if self.instrument_js.contains(&0) {
            return Err(CliError::InvalidConfig(
                "instrumented sizes must be at least 1".into(),
            ));
        }
        Ok(())
    }

    pub fn run_options(&self) -> RunOptions {
        RunOptions {
            instrument_js: self.instrument_js.clone(),
            y_extension: self.y_extension,
        }
    }

    /// Runs `f` on a thread pool with `self.workers` threads.
    pub fn with_pool<T: Send>(&self, f: impl FnOnce() -> T + Send) -> Result<T> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers)
            .build()
            .map_err(|e| {
                CliError::InvalidConfig(format!("cannot start {} workers: {e}", self.workers))
            })?;
        Ok(pool.install(f))
    }
}
