//! Site frequency spectra and their summaries.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sim::ReplicateResult;

#[derive(Debug, Error)]
pub enum SfsError {
    #[error("spectrum has no mutations")]
    EmptySpectrum,
    #[error("no surviving replicates to aggregate")]
    NoSurvivors,
    #[error("clone size must be at least 1")]
    ZeroCloneSize,
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

/// `j -> S_j`, the number of mutations carried by exactly `j` live
/// individuals. Zero entries are never stored.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SiteFrequencySpectrum {
    counts: BTreeMap<u64, u64>,
}

#[derive(Serialize, Deserialize)]
struct SfsRow {
    j: u64,
    count: u64,
}

impl SiteFrequencySpectrum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_counts<I: IntoIterator<Item = (u64, u64)>>(counts: I) -> Result<Self, SfsError> {
        let mut sfs = Self::new();
        for (j, c) in counts {
            if j == 0 {
                return Err(SfsError::ZeroCloneSize);
            }
            sfs.add(j, c);
        }
        Ok(sfs)
    }

    /// Adds `count` mutations of clone size `j >= 1`.
    pub(crate) fn add(&mut self, j: u64, count: u64) {
        debug_assert!(j >= 1);
        if count > 0 {
            *self.counts.entry(j).or_insert(0) += count;
        }
    }

    pub fn get(&self, j: u64) -> u64 {
        self.counts.get(&j).copied().unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, u64)> + '_ {
        self.counts.iter().map(|(&j, &c)| (j, c))
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn max_clone_size(&self) -> u64 {
        self.counts.keys().next_back().copied().unwrap_or(0)
    }

    /// Total number of mutations `M`.
    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    /// `M_j = sum_{k >= j} S_k`.
    pub fn tail(&self, j: u64) -> u64 {
        self.counts.range(j..).map(|(_, &c)| c).sum()
    }

    /// `sum_j j S_j`: number of (mutation, carrier) pairs.
    pub fn carrier_pairs(&self) -> u64 {
        self.counts.iter().map(|(&j, &c)| j * c).sum()
    }

    /// Multiplies every count by `factor`.
    pub fn scaled(&self, factor: u64) -> Self {
        let mut out = Self::new();
        for (j, c) in self.iter() {
            out.add(j, c * factor);
        }
        out
    }

    pub fn summarize(&self) -> Result<SpectrumSummary, SfsError> {
        let total = self.total();
        if total == 0 {
            return Err(SfsError::EmptySpectrum);
        }
        let max_j = self.max_clone_size() as usize;
        // tails[j - 1] = M_j for j = 1..=max_j
        let mut tails = vec![0u64; max_j];
        let mut acc = 0;
        for j in (1..=max_j).rev() {
            acc += self.get(j as u64);
            tails[j - 1] = acc;
        }
        Ok(SpectrumSummary {
            counts: self.clone(),
            tails,
        })
    }

    /// Writes `j,count` CSV.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), SfsError> {
        let mut w = csv::Writer::from_writer(writer);
        for (j, count) in self.iter() {
            w.serialize(SfsRow { j, count })?;
        }
        if self.is_empty() {
            w.write_record(["j", "count"])?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    /// Reads `j,count` CSV. Rows with zero count are dropped.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self, SfsError> {
        let mut r = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut rows = Vec::new();
        for row in r.deserialize() {
            let row: SfsRow = row?;
            rows.push((row.j, row.count));
        }
        Self::from_counts(rows)
    }
}

/// Integer tail sums and proportions of a nonempty spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumSummary {
    counts: SiteFrequencySpectrum,
    tails: Vec<u64>,
}

impl SpectrumSummary {
    pub fn m_total(&self) -> u64 {
        self.tails[0]
    }

    /// `M_j` for `j >= 1`.
    pub fn m_tail(&self, j: u64) -> u64 {
        assert!(j >= 1, "tail sums are indexed from j = 1");
        self.tails.get(j as usize - 1).copied().unwrap_or(0)
    }

    /// `S_j / M`.
    pub fn prop(&self, j: u64) -> f64 {
        self.counts.get(j) as f64 / self.m_total() as f64
    }

    /// `S_j / M_j`, or `None` when no mutation has clone size `>= j`.
    pub fn prop_tail(&self, j: u64) -> Option<f64> {
        let tail = self.m_tail(j);
        (tail > 0).then(|| self.counts.get(j) as f64 / tail as f64)
    }
}

/// How per-replicate spectra are normalized before averaging.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Normalization {
    /// `N^{-1} S_j(tau_N)`.
    FixedSize { size: u64 },
    /// `e^{-lambda t} S_j(t)`.
    FixedTime { time: f64, growth_rate: f64 },
    /// `e^{-lambda t} S_j(t) / Y_hat`, using each replicate's own `Y_hat`.
    /// Replicates whose extension died out (`Y_hat = 0`) are left out.
    FixedTimePerYHat { time: f64, growth_rate: f64 },
}

impl Normalization {
    /// Whether a replicate enters the average under this normalization.
    pub fn includes(&self, result: &ReplicateResult) -> bool {
        !matches!(self, Normalization::FixedTimePerYHat { .. }) || result.y_hat > 0.0
    }

    fn scale(&self, result: &ReplicateResult) -> f64 {
        match *self {
            Normalization::FixedSize { size } => 1.0 / size as f64,
            Normalization::FixedTime { time, growth_rate } => (-growth_rate * time).exp(),
            Normalization::FixedTimePerYHat { time, growth_rate } => {
                (-growth_rate * time).exp() / result.y_hat
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub j: u64,
    pub mean: f64,
    /// `None` when fewer than two replicates were averaged.
    pub std_error: Option<f64>,
    pub n_replicates: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateTable {
    pub rows: Vec<AggregateRow>,
}

impl AggregateTable {
    pub fn row(&self, j: u64) -> Option<&AggregateRow> {
        self.rows.iter().find(|r| r.j == j)
    }

    /// Writes `j,mean,std_error,n_replicates` CSV; undefined SEs are empty.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), SfsError> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["j", "mean", "std_error", "n_replicates"])?;
        for r in &self.rows {
            w.serialize((r.j, r.mean, r.std_error, r.n_replicates))?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self, SfsError> {
        let mut r = csv::Reader::from_reader(reader);
        let mut rows = Vec::new();
        for row in r.deserialize() {
            let (j, mean, std_error, n_replicates): (u64, f64, Option<f64>, usize) = row?;
            rows.push(AggregateRow {
                j,
                mean,
                std_error,
                n_replicates,
            });
        }
        Ok(Self { rows })
    }
}

/// Sample mean and standard error (unbiased variance). The SE is `None`
/// for fewer than two values.
pub fn mean_and_se(values: &[f64]) -> (f64, Option<f64>) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, None);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, None);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, Some((var / n as f64).sqrt()))
}

/// Per-`j` mean and SE of the normalized spectrum across replicates, for
/// `j = 1..=max clone size seen`. Replicates lacking a `j` contribute 0.
///
/// Values are accumulated in input order, so the result depends on order
/// only through floating-point summation. Work is linear in the number of
/// stored spectrum entries plus the largest clone size.
pub fn aggregate(
    results: &[ReplicateResult],
    mode: Normalization,
) -> Result<AggregateTable, SfsError> {
    let results: Vec<&ReplicateResult> = results.iter().filter(|r| mode.includes(r)).collect();
    if results.is_empty() {
        return Err(SfsError::NoSurvivors);
    }
    let max_j = results
        .iter()
        .map(|r| r.sfs.max_clone_size())
        .max()
        .unwrap_or(0) as usize;
    let n = results.len();
    let scales: Vec<f64> = results.iter().map(|r| mode.scale(r)).collect();
    // Spectra are sparse, so both passes only visit stored entries; absent
    // entries are zeros and are accounted for through `present`.
    let mut sums = vec![0.0; max_j + 1];
    let mut present = vec![0usize; max_j + 1];
    for (r, s) in results.iter().zip(&scales) {
        for (j, c) in r.sfs.iter() {
            sums[j as usize] += c as f64 * s;
            present[j as usize] += 1;
        }
    }
    let means: Vec<f64> = sums.iter().map(|v| v / n as f64).collect();
    let mut sq = vec![0.0; max_j + 1];
    for (r, s) in results.iter().zip(&scales) {
        for (j, c) in r.sfs.iter() {
            sq[j as usize] += (c as f64 * s - means[j as usize]).powi(2);
        }
    }
    let rows = (1..=max_j)
        .map(|j| {
            let std_error = (n >= 2).then(|| {
                let ss = sq[j] + (n - present[j]) as f64 * means[j] * means[j];
                (ss / (n - 1) as f64 / n as f64).sqrt()
            });
            AggregateRow {
                j: j as u64,
                mean: means[j],
                std_error,
                n_replicates: n,
            }
        })
        .collect();
    Ok(AggregateTable { rows })
}

/// Mean and SE of the normalized total mutation count `M`.
pub fn aggregate_total(
    results: &[ReplicateResult],
    mode: Normalization,
) -> Result<(f64, Option<f64>), SfsError> {
    let results: Vec<&ReplicateResult> = results.iter().filter(|r| mode.includes(r)).collect();
    if results.is_empty() {
        return Err(SfsError::NoSurvivors);
    }
    let values: Vec<f64> = results
        .iter()
        .map(|r| r.total_mutations as f64 * mode.scale(r))
        .collect();
    Ok(mean_and_se(&values))
}
