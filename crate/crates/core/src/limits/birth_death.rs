//! Closed-form limits for the birth-death process.

use serde::{Deserialize, Serialize};

use super::quadrature::integrate;
use super::series::{self, pair_partial};
use super::{LimitError, LimitValue};
use crate::model::ModelParams;

/// `(p, lambda, nu)` for a birth-death process; `q = 1 - p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BirthDeathModel {
    pub extinction_prob: f64,
    pub growth_rate: f64,
    pub mutation_rate: f64,
}

impl BirthDeathModel {
    pub fn new(
        extinction_prob: f64,
        growth_rate: f64,
        mutation_rate: f64,
    ) -> Result<Self, LimitError> {
        if !(0.0..1.0).contains(&extinction_prob) {
            return Err(LimitError::InvalidArgument(format!(
                "extinction probability must lie in [0, 1), got {extinction_prob}"
            )));
        }
        if !(growth_rate > 0.0 && mutation_rate > 0.0) {
            return Err(LimitError::InvalidArgument("rates must be positive".into()));
        }
        Ok(Self {
            extinction_prob,
            growth_rate,
            mutation_rate,
        })
    }

    pub fn from_params(params: &ModelParams) -> Result<Self, LimitError> {
        if !params.offspring.is_birth_death() {
            return Err(LimitError::InvalidArgument(
                "offspring distribution is not supported on {0, 2}".into(),
            ));
        }
        let d = params.derived()?;
        Self::new(d.extinction_prob, d.growth_rate, params.mutation_rate)
    }

    pub fn survival_prob(&self) -> f64 {
        1.0 - self.extinction_prob
    }

    /// `nu q / lambda`, the prefactor of the spectrum limits.
    fn scale(&self) -> f64 {
        self.mutation_rate * self.survival_prob() / self.growth_rate
    }
}

/// `P(Z(t) = j | Z(0) = 1)`.
pub fn bd_transition_prob(bd: &BirthDeathModel, j: u64, t: f64) -> f64 {
    let p = bd.extinction_prob;
    let q = bd.survival_prob();
    // Written in x = e^{-lambda t} so large t does not overflow.
    let x = (-bd.growth_rate * t).exp();
    let one_minus_x = -(-bd.growth_rate * t).exp_m1();
    let denom = 1.0 - p * x;
    if j == 0 {
        p * one_minus_x / denom
    } else {
        let ratio = one_minus_x / denom;
        q * q * x / (denom * denom) * ratio.powi((j - 1) as i32)
    }
}

/// `lim N^{-1} S_j(tau_N) = (nu q / lambda) sum_k p^k / ((j + k)(j + k + 1))`.
pub fn bd_sfs_limit(bd: &BirthDeathModel, j: u64, tol: f64) -> LimitValue {
    assert!(j >= 1 && tol > 0.0);
    let ps = pair_partial(bd.extinction_prob, j, tol);
    let scale = bd.scale();
    LimitValue {
        value: scale * ps.value,
        tail_bound: scale * ps.tail_bound,
        terms_used: ps.terms,
    }
}

/// The same limit as [`bd_sfs_limit`] by quadrature of
/// `(nu q / lambda) int_0^1 (1 - p y)^{-1} (1 - y) y^{j-1} dy`.
pub fn bd_sfs_quadrature(bd: &BirthDeathModel, j: u64, tol: f64) -> f64 {
    let p = bd.extinction_prob;
    let power = (j - 1) as i32;
    let q = integrate(
        |y: f64| (1.0 - y) * y.powi(power) / (1.0 - p * y),
        0.0,
        1.0,
        tol,
    );
    bd.scale() * q.value
}

/// `lim N^{-1} M(tau_N)`: `nu / lambda` for `p = 0`, else `-nu q ln q / (lambda p)`.
pub fn bd_total_mut_limit(bd: &BirthDeathModel) -> f64 {
    let p = bd.extinction_prob;
    let ratio = bd.mutation_rate / bd.growth_rate;
    if p == 0.0 {
        return ratio;
    }
    let q = bd.survival_prob();
    -ratio * q * (-p).ln_1p() / p
}

/// `(nu / lambda) int_0^1 q / (1 - p x) dx` by quadrature.
pub fn bd_total_mut_quadrature(bd: &BirthDeathModel, tol: f64) -> f64 {
    let p = bd.extinction_prob;
    let q = bd.survival_prob();
    let integral = integrate(|x: f64| q / (1.0 - p * x), 0.0, 1.0, tol).value;
    bd.mutation_rate / bd.growth_rate * integral
}

/// Limiting fraction `S_j / M` of mutations carried by exactly `j` individuals.
pub fn proportion_limit(p: f64, j: u64) -> f64 {
    assert!(j >= 1 && (0.0..1.0).contains(&p));
    if p == 0.0 {
        let j = j as f64;
        return 1.0 / (j * (j + 1.0));
    }
    -p / (-p).ln_1p() * series::pair(p, j)
}
