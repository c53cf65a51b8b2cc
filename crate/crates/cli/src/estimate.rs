use std::fs::File;
use std::path::Path;

use gwsfs::estimate::{estimate_from_spectrum, EstimateReport, SizeBasis};
use gwsfs::sfs::SiteFrequencySpectrum;

use crate::error::{CliError, Result};

/// Estimates `p` and `nu / lambda` from an SFS CSV with header `j,count`.
pub fn cmd_estimate(sfs_path: &Path, basis: SizeBasis, j: u64, tol: f64) -> Result<EstimateReport> {
    let file = File::open(sfs_path).map_err(CliError::io(sfs_path))?;
    let sfs = SiteFrequencySpectrum::read_csv(file)?;
    Ok(estimate_from_spectrum(&sfs, basis, j, tol)?)
}
