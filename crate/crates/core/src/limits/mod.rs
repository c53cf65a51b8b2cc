//! Theoretical limits of the site frequency spectrum.
//!
//! Birth-death inputs have closed forms (series, with quadrature as an
//! independent check). General offspring distributions go through the
//! truncated forward equations in [`general`].

mod birth_death;
pub mod general;
pub mod ode;
pub mod quadrature;
pub mod series;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use birth_death::{
    bd_sfs_limit, bd_sfs_quadrature, bd_total_mut_limit, bd_total_mut_quadrature,
    bd_transition_prob, proportion_limit, BirthDeathModel,
};
pub use general::{
    general_sfs_limit, general_sfs_limits, general_total_mut_limit, GeneralLimitOptions,
};

use crate::model::ModelError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LimitError {
    #[error("numerical budget exceeded: {0}")]
    BudgetExceeded(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// A computed limit with a bound on its truncation error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitValue {
    pub value: f64,
    pub tail_bound: f64,
    /// Series terms summed, or the state cap of the forward equations.
    pub terms_used: usize,
}
