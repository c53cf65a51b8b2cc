use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use gwsfs::sfs::{aggregate, AggregateTable, Normalization, SfsError};
use gwsfs::sim::{run_replicates, ReplicateResult, StopCondition};

use crate::config::RunConfig;
use crate::error::{CliError, Result};

pub const REPLICATES_FILE: &str = "replicates.jsonl";
pub const AGGREGATE_FILE: &str = "aggregate.csv";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulateSummary {
    pub replicates: usize,
    pub survivors: usize,
    pub replicates_path: PathBuf,
    pub aggregate_path: PathBuf,
}

/// Normalization used for the aggregate table of a run.
pub fn normalization(config: &RunConfig) -> Normalization {
    match config.stop {
        StopCondition::FixedSize(size) => Normalization::FixedSize { size },
        StopCondition::FixedTime(time) => Normalization::FixedTimePerYHat {
            time,
            growth_rate: config.model.growth_rate(),
        },
    }
}

/// Runs all replicates and writes the replicate stream and the aggregate
/// over surviving replicates into `config.output_dir`.
pub fn cmd_simulate(config: &RunConfig) -> Result<SimulateSummary> {
    config.validate()?;
    let opts = config.run_options();
    let results = config.with_pool(|| {
        run_replicates(
            &config.model,
            config.stop,
            &opts,
            config.master_seed,
            config.replicates,
        )
    })??;

    let dir = &config.output_dir;
    fs::create_dir_all(dir).map_err(CliError::io(dir))?;
    let replicates_path = dir.join(REPLICATES_FILE);
    write_replicates(&replicates_path, &results)?;

    let survivors: Vec<ReplicateResult> =
        results.iter().filter(|r| r.survived()).cloned().collect();
    let table = match aggregate(&survivors, normalization(config)) {
        Ok(t) => t,
        Err(SfsError::NoSurvivors) => AggregateTable { rows: Vec::new() },
        Err(e) => return Err(e.into()),
    };
    let aggregate_path = dir.join(AGGREGATE_FILE);
    let file = File::create(&aggregate_path).map_err(CliError::io(&aggregate_path))?;
    table.write_csv(BufWriter::new(file))?;

    Ok(SimulateSummary {
        replicates: results.len(),
        survivors: survivors.len(),
        replicates_path,
        aggregate_path,
    })
}

/// One JSON object per line, in replicate index order.
pub fn write_replicates(path: &Path, results: &[ReplicateResult]) -> Result<()> {
    let file = File::create(path).map_err(CliError::io(path))?;
    let mut w = BufWriter::new(file);
    for r in results {
        serde_json::to_writer(&mut w, r).map_err(|source| CliError::Json {
            path: path.to_path_buf(),
            line: 0,
            source,
        })?;
        w.write_all(b"\n").map_err(CliError::io(path))?;
    }
    w.flush().map_err(CliError::io(path))
}

pub fn read_replicates(path: &Path) -> Result<Vec<ReplicateResult>> {
    let file = File::open(path).map_err(CliError::io(path))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(CliError::io(path))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line).map_err(|source| CliError::Json {
                path: path.to_path_buf(),
                line: i + 1,
                source,
            })?,
        );
    }
    Ok(out)
}
