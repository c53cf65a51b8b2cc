use rayon::prelude::*;

use super::{replicate_seed, run, ReplicateResult, RunOptions, SimError, StopCondition};
use crate::model::ModelParams;

/// Runs replicates `0..count` on the current rayon pool. Output is in
/// index order, so it does not depend on the number of worker threads.
pub fn run_replicates(
    params: &ModelParams,
    stop: StopCondition,
    opts: &RunOptions,
    master_seed: u64,
    count: usize,
) -> Result<Vec<ReplicateResult>, SimError> {
    run_range(params, stop, opts, master_seed, 0..count as u64)
}

fn run_range(
    params: &ModelParams,
    stop: StopCondition,
    opts: &RunOptions,
    master_seed: u64,
    range: std::ops::Range<u64>,
) -> Result<Vec<ReplicateResult>, SimError> {
    params.validate()?;
    range
        .into_par_iter()
        .map(|i| run(params, stop, opts, replicate_seed(master_seed, i)))
        .collect()
}

/// Runs replicates in index order until `survivors` of them did not go
/// extinct, and returns exactly those, plus the number of replicates tried.
pub fn run_until_survivors(
    params: &ModelParams,
    stop: StopCondition,
    opts: &RunOptions,
    master_seed: u64,
    survivors: usize,
) -> Result<(Vec<ReplicateResult>, u64), SimError> {
    let q = params.derived()?.survival_prob;
    let mut kept = Vec::with_capacity(survivors);
    let mut next = 0u64;
    while kept.len() < survivors {
        let missing = (survivors - kept.len()) as f64;
        let chunk = ((missing / q) * 1.1).ceil().max(16.0) as u64;
        let batch = run_range(params, stop, opts, master_seed, next..next + chunk)?;
        for r in batch {
            next += 1;
            if r.survived() {
                kept.push(r);
                if kept.len() == survivors {
                    break;
                }
            }
        }
    }
    Ok((kept, next))
}
