use clap::ValueEnum;
use serde::{Deserialize, Serialize};

use gwsfs::limits::{bd_sfs_limit, general_sfs_limits, BirthDeathModel, GeneralLimitOptions};
use gwsfs::model::ModelParams;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum LimitMethod {
    /// Closed form for birth-death laws, ODE otherwise.
    #[default]
    Auto,
    ClosedForm,
    Ode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitRow {
    pub j: u64,
    pub limit: f64,
    pub tail_bound: f64,
}

/// Limits of `N^{-1} S_j(tau_N)` for `j = 1..=j_max`.
pub fn cmd_limits(
    model: &ModelParams,
    j_max: u64,
    method: LimitMethod,
    tol: f64,
) -> Result<Vec<LimitRow>> {
    if j_max == 0 {
        return Err(CliError::InvalidConfig("j-max must be at least 1".into()));
    }
    if tol.is_nan() || tol <= 0.0 {
        return Err(CliError::InvalidConfig(format!(
            "tol must be positive, got {tol}"
        )));
    }
    let closed = match method {
        LimitMethod::Auto => model.offspring.is_birth_death(),
        LimitMethod::ClosedForm => true,
        LimitMethod::Ode => false,
    };
    let js: Vec<u64> = (1..=j_max).collect();
    if closed {
        let bd = BirthDeathModel::from_params(model)?;
        Ok(js
            .into_iter()
            .map(|j| {
                let v = bd_sfs_limit(&bd, j, tol);
                LimitRow {
                    j,
                    limit: v.value,
                    tail_bound: v.tail_bound,
                }
            })
            .collect())
    } else {
        let opts = GeneralLimitOptions {
            tol,
            ..GeneralLimitOptions::default()
        };
        let values = general_sfs_limits(model, &js, &opts)?;
        Ok(js
            .into_iter()
            .zip(values)
            .map(|(j, v)| LimitRow {
                j,
                limit: v.value,
                tail_bound: v.tail_bound,
            })
            .collect())
    }
}
