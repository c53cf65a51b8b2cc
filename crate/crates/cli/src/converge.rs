use std::io::{Read, Write};

use clap::ValueEnum;
use serde::{Deserialize, Serialize};

use gwsfs::limits::{bd_sfs_limit, general_sfs_limits, BirthDeathModel, GeneralLimitOptions};
use gwsfs::sfs::{aggregate, Normalization, SfsError};
use gwsfs::sim::{replicate_seed, run_until_survivors, ReplicateResult, StopCondition};

use crate::config::RunConfig;
use crate::error::{CliError, Result};

/// Series tolerance for birth-death limits; other laws use the default ODE options.
pub const LIMIT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScaleKind {
    /// Scales are target sizes `N`.
    Size,
    /// Scales are observation times `t`.
    Time,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub scale: f64,
    pub j: u64,
    pub mean: f64,
    pub std_error: Option<f64>,
    pub limit: f64,
    pub abs_error: f64,
    pub n_replicates: usize,
    /// Median `|tau_N - t_N_hat|`, fixed-size scales only.
    pub median_hitting_gap: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceTable {
    pub fn scales(&self) -> Vec<f64> {
        let mut out: Vec<f64> = Vec::new();
        for r in &self.rows {
            if out.last() != Some(&r.scale) {
                out.push(r.scale);
            }
        }
        out
    }

    /// One median gap per scale, in scale order.
    pub fn median_hitting_gaps(&self) -> Vec<Option<f64>> {
        let scales = self.scales();
        scales
            .iter()
            .map(|s| {
                self.rows
                    .iter()
                    .find(|r| r.scale == *s)
                    .and_then(|r| r.median_hitting_gap)
            })
            .collect()
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), SfsError> {
        let mut w = csv::Writer::from_writer(writer);
        for r in &self.rows {
            w.serialize(r)?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self, SfsError> {
        let mut r = csv::Reader::from_reader(reader);
        let rows = r
            .deserialize()
            .collect::<Result<Vec<ConvergenceRow>, _>>()?;
        Ok(Self { rows })
    }
}

/// Runs `config.replicates` surviving replicates at every scale and
/// compares per-`j` means with the large-population limits.
pub fn cmd_converge(
    config: &RunConfig,
    kind: ScaleKind,
    scales: &[f64],
    j_max: u64,
) -> Result<ConvergenceTable> {
    config.validate()?;
    if scales.is_empty() {
        return Err(CliError::InvalidConfig(
            "at least one scale is required".into(),
        ));
    }
    if scales
        .windows(2)
        .any(|w| w[1].partial_cmp(&w[0]) != Some(std::cmp::Ordering::Greater))
    {
        return Err(CliError::InvalidConfig(
            "scales must be strictly increasing".into(),
        ));
    }
    if j_max == 0 {
        return Err(CliError::InvalidConfig("j-max must be at least 1".into()));
    }
    let stops = scales
        .iter()
        .map(|&s| match kind {
            ScaleKind::Size if s >= 1.0 && s.fract() == 0.0 => {
                Ok(StopCondition::FixedSize(s as u64))
            }
            ScaleKind::Size => Err(CliError::InvalidConfig(format!(
                "size scale {s} is not a positive integer"
            ))),
            ScaleKind::Time if s > 0.0 && s.is_finite() => Ok(StopCondition::FixedTime(s)),
            ScaleKind::Time => Err(CliError::InvalidConfig(format!(
                "time scale {s} is not positive"
            ))),
        })
        .collect::<Result<Vec<_>>>()?;

    let js: Vec<u64> = (1..=j_max).collect();
    let limits = theoretical_limits(config, &js)?;
    let lambda = config.model.growth_rate();
    let opts = config.run_options();

    let mut rows = Vec::with_capacity(scales.len() * js.len());
    for (i, (&scale, &stop)) in scales.iter().zip(&stops).enumerate() {
        let seed = replicate_seed(config.master_seed, i as u64);
        let (results, _) = config.with_pool(|| {
            run_until_survivors(&config.model, stop, &opts, seed, config.replicates)
        })??;
        let mode = match stop {
            StopCondition::FixedSize(size) => Normalization::FixedSize { size },
            StopCondition::FixedTime(time) => Normalization::FixedTimePerYHat {
                time,
                growth_rate: lambda,
            },
        };
        let table = aggregate(&results, mode)?;
        let gap = matches!(kind, ScaleKind::Size)
            .then(|| median_gap(&results))
            .flatten();
        for (&j, &limit) in js.iter().zip(&limits) {
            let (mean, std_error, n) = match table.row(j) {
                Some(r) => (r.mean, r.std_error, r.n_replicates),
                None => {
                    let n = table.rows.first().map_or(0, |r| r.n_replicates);
                    (0.0, (n >= 2).then_some(0.0), n)
                }
            };
            rows.push(ConvergenceRow {
                scale,
                j,
                mean,
                std_error,
                limit,
                abs_error: (mean - limit).abs(),
                n_replicates: n,
                median_hitting_gap: gap,
            });
        }
    }
    Ok(ConvergenceTable { rows })
}

fn theoretical_limits(config: &RunConfig, js: &[u64]) -> Result<Vec<f64>> {
    if config.model.offspring.is_birth_death() {
        let bd = BirthDeathModel::from_params(&config.model)?;
        Ok(js
            .iter()
            .map(|&j| bd_sfs_limit(&bd, j, LIMIT_TOL).value)
            .collect())
    } else {
        Ok(
            general_sfs_limits(&config.model, js, &GeneralLimitOptions::default())?
                .into_iter()
                .map(|v| v.value)
                .collect(),
        )
    }
}

fn median_gap(results: &[ReplicateResult]) -> Option<f64> {
    let mut gaps: Vec<f64> = results
        .iter()
        .filter_map(|r| Some((r.tau_n? - r.t_n_hat?).abs()))
        .collect();
    if gaps.is_empty() {
        return None;
    }
    gaps.sort_by(f64::total_cmp);
    let n = gaps.len();
    Some(if n % 2 == 1 {
        gaps[n / 2]
    } else {
        0.5 * (gaps[n / 2 - 1] + gaps[n / 2])
    })
}
