//! Spectrum limits for a general finite offspring distribution.
//!
//! `p_n(s) = P(Z(s) = n | Z(0) = 1)` is obtained from the Kolmogorov
//! forward equations on `{0, ..., J}`. Jumps above `J` go to an extra
//! absorbing overflow state whose mass `L(s)` is tracked. The integrals
//! `int_0^T e^{-lambda s} p_n(s) ds` and `int_0^T e^{-lambda s} L(s) ds` are
//! carried as extra ODE components.
//!
//! Error accounting, for a target size `j`:
//!
//! * horizon: `p_j <= 1`, so the part beyond `T` is at most `nu e^{-lambda T} / lambda`;
//! * overflow: from any size `n > J`, reaching size `<= j` needs `n - j` of the
//!   `n` independent subfamilies to die out, which has probability at most
//!   `C(n, j) p^{n - j}`. The truncated `p_j(s)` therefore misses at most
//!   `L(s) max_{n > J} C(n, j) p^{n-j}`.
//!
//! `J` doubles until the value moves by less than `tol`; the last change is
//! added to the reported bound.

use super::ode::{self, OdeOptions};
use super::{LimitError, LimitValue};
use crate::model::ModelParams;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneralLimitOptions {
    /// Smallest state cap `J` tried.
    pub state_cap: usize,
    pub max_state_cap: usize,
    /// Integration horizon `T`; `None` picks `T` so the horizon term is `tol / 10`.
    pub horizon: Option<f64>,
    pub ode_tol: f64,
    pub tol: f64,
    pub max_steps: usize,
}

impl Default for GeneralLimitOptions {
    fn default() -> Self {
        Self {
            state_cap: 32,
            max_state_cap: 1 << 13,
            horizon: None,
            ode_tol: 1e-11,
            tol: 1e-8,
            max_steps: 5_000_000,
        }
    }
}

/// Resolved integrals for one state cap.
struct ForwardIntegrals {
    /// `int_0^T e^{-lambda s} p_n(s) ds` for `n = 0..=J`.
    per_state: Vec<f64>,
    /// `int_0^T e^{-lambda s} L(s) ds`.
    overflow: f64,
    horizon: f64,
    state_cap: usize,
}

struct Setup {
    lifetime_rate: f64,
    mutation_rate: f64,
    growth_rate: f64,
    extinction_prob: f64,
    // (k, u_k) for k != 1 with u_k > 0.
    jumps: Vec<(usize, f64)>,
    stay: f64,
}

impl Setup {
    fn new(params: &ModelParams) -> Result<Self, LimitError> {
        let d = params.derived()?;
        let jumps = params
            .offspring
            .probs()
            .iter()
            .enumerate()
            .filter(|&(k, &u)| k != 1 && u > 0.0)
            .map(|(k, &u)| (k, u))
            .collect();
        Ok(Self {
            lifetime_rate: params.lifetime_rate,
            mutation_rate: params.mutation_rate,
            growth_rate: d.growth_rate,
            extinction_prob: d.extinction_prob,
            jumps,
            stay: params.offspring.prob(1),
        })
    }

    fn horizon(&self, opts: &GeneralLimitOptions) -> f64 {
        opts.horizon.unwrap_or_else(|| {
            let ratio = self.mutation_rate / self.growth_rate;
            (10.0 * ratio / opts.tol).max(1.0).ln() / self.growth_rate
        })
    }

    /// `max_{n > cap} C(n, j) p^{n - j}`.
    fn return_bound(&self, cap: usize, j: usize) -> f64 {
        let p = self.extinction_prob;
        if p == 0.0 {
            return 0.0;
        }
        let log_term = |n: usize| {
            let log_binom: f64 = (0..j).map(|i| ((n - i) as f64 / (i + 1) as f64).ln()).sum();
            log_binom + (n - j) as f64 * p.ln()
        };
        // The term increases while (n + 1) p < n + 1 - j.
        let peak = ((j as f64 / (1.0 - p)).ceil() as usize).max(cap + 1);
        log_term(peak).exp().min(1.0)
    }

    fn integrate(
        &self,
        cap: usize,
        opts: &GeneralLimitOptions,
    ) -> Result<ForwardIntegrals, LimitError> {
        let horizon = self.horizon(opts);
        let states = cap + 1;
        // Layout: p_0..p_J, L, I_0..I_J, I_L.
        let dim = 2 * (states + 1);
        let mut y = vec![0.0; dim];
        y[1] = 1.0;
        let a = self.lifetime_rate;
        let lambda = self.growth_rate;
        let leave = 1.0 - self.stay;
        let rhs = |s: f64, y: &[f64], dy: &mut [f64]| {
            dy.iter_mut().for_each(|v| *v = 0.0);
            let prob = &y[..=states];
            let (dprob, dacc) = dy.split_at_mut(states + 1);
            for n in 1..states {
                let pn = prob[n];
                if pn == 0.0 {
                    continue;
                }
                let rate = a * n as f64 * pn;
                dprob[n] -= rate * leave;
                for &(k, u) in &self.jumps {
                    let dest = n + k - 1;
                    if dest < states {
                        dprob[dest] += rate * u;
                    } else {
                        dprob[states] += rate * u;
                    }
                }
            }
            let w = (-lambda * s).exp();
            for (d, &v) in dacc.iter_mut().zip(prob) {
                *d = w * v;
            }
        };
        let ode_opts = OdeOptions {
            abs_tol: opts.ode_tol,
            rel_tol: opts.ode_tol,
            max_steps: opts.max_steps,
        };
        ode::integrate(rhs, &mut y, 0.0, horizon, &ode_opts).map_err(|_| {
            LimitError::BudgetExceeded(format!(
                "ODE step budget {} exhausted at state cap {cap}",
                opts.max_steps
            ))
        })?;
        Ok(ForwardIntegrals {
            per_state: y[states + 1..2 * states + 1].to_vec(),
            overflow: y[2 * states + 1],
            horizon,
            state_cap: cap,
        })
    }

    fn evaluate(&self, fi: &ForwardIntegrals, target: Target) -> (f64, f64) {
        let nu = self.mutation_rate;
        let lambda = self.growth_rate;
        let horizon = nu * (-lambda * fi.horizon).exp() / lambda;
        match target {
            Target::Size(j) => {
                let value = nu * fi.per_state[j];
                let leak = nu * self.return_bound(fi.state_cap, j) * fi.overflow;
                (value, horizon + leak)
            }
            Target::Total => {
                let alive = -(-lambda * fi.horizon).exp_m1() / lambda - fi.per_state[0];
                let leak = nu * self.return_bound(fi.state_cap, 0) * fi.overflow;
                (nu * alive, horizon + leak)
            }
        }
    }

    fn initial_cap(&self, targets: &[Target], opts: &GeneralLimitOptions) -> usize {
        let worst = targets
            .iter()
            .map(|t| match *t {
                Target::Size(j) => j,
                Target::Total => 0,
            })
            .max()
            .unwrap_or(0);
        let mut cap = opts.state_cap.max(worst + 1).next_power_of_two();
        let ratio = self.mutation_rate / self.growth_rate;
        while cap < opts.max_state_cap && ratio * self.return_bound(cap, worst) > 0.1 * opts.tol {
            cap *= 2;
        }
        cap
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Target {
    Size(usize),
    Total,
}

fn solve(
    params: &ModelParams,
    targets: &[Target],
    opts: &GeneralLimitOptions,
) -> Result<Vec<LimitValue>, LimitError> {
    if targets.contains(&Target::Size(0)) {
        return Err(LimitError::InvalidArgument(
            "clone size must be at least 1".into(),
        ));
    }
    let setup = Setup::new(params)?;
    let mut cap = setup.initial_cap(targets, opts);
    if cap > opts.max_state_cap {
        return Err(LimitError::BudgetExceeded(format!(
            "state cap {cap} exceeds the limit of {}",
            opts.max_state_cap
        )));
    }
    let mut previous: Option<Vec<(f64, f64)>> = None;
    loop {
        let fi = setup.integrate(cap, opts)?;
        let current: Vec<(f64, f64)> = targets.iter().map(|&t| setup.evaluate(&fi, t)).collect();
        if let Some(prev) = &previous {
            let change = prev
                .iter()
                .zip(&current)
                .map(|(a, b)| (a.0 - b.0).abs())
                .fold(0.0, f64::max);
            if change < opts.tol {
                return Ok(current
                    .iter()
                    .zip(prev)
                    .map(|(&(value, bound), &(old, _))| LimitValue {
                        value,
                        tail_bound: bound + (value - old).abs(),
                        terms_used: cap,
                    })
                    .collect());
            }
        }
        if cap * 2 > opts.max_state_cap {
            return Err(LimitError::BudgetExceeded(format!(
                "value still moving at state cap {cap} (limit {})",
                opts.max_state_cap
            )));
        }
        previous = Some(current);
        cap *= 2;
    }
}

/// `nu int_0^inf e^{-lambda s} p_j(s) ds`, the fixed-size limit of `N^{-1} S_j`.
pub fn general_sfs_limit(
    params: &ModelParams,
    j: u64,
    opts: &GeneralLimitOptions,
) -> Result<LimitValue, LimitError> {
    Ok(solve(params, &[Target::Size(j as usize)], opts)?[0])
}

/// [`general_sfs_limit`] for several sizes from one set of ODE solves.
pub fn general_sfs_limits(
    params: &ModelParams,
    js: &[u64],
    opts: &GeneralLimitOptions,
) -> Result<Vec<LimitValue>, LimitError> {
    let targets: Vec<_> = js.iter().map(|&j| Target::Size(j as usize)).collect();
    solve(params, &targets, opts)
}

/// `nu int_0^inf e^{-lambda s} (1 - p_0(s)) ds`, the fixed-size limit of `N^{-1} M`.
pub fn general_total_mut_limit(
    params: &ModelParams,
    opts: &GeneralLimitOptions,
) -> Result<LimitValue, LimitError> {
    Ok(solve(params, &[Target::Total], opts)?[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::limits::birth_death::{bd_sfs_limit, bd_total_mut_limit, BirthDeathModel};
    use crate::model::OffspringDistribution;

    fn opts() -> GeneralLimitOptions {
        GeneralLimitOptions::default()
    }

    #[test]
    fn birth_death_matches_closed_form() {
        let params = ModelParams::new(1.0, 1.0, OffspringDistribution::birth_death(0.25));
        let bd = BirthDeathModel::new(1.0 / 3.0, 0.5, 1.0).unwrap();
        let v = general_sfs_limit(&params, 1, &opts()).unwrap();
        let exact = bd_sfs_limit(&bd, 1, 1e-14).value;
        assert!((v.value - exact).abs() < 1e-6, "{} vs {exact}", v.value);
        assert!(v.tail_bound >= 0.0);
        let total = general_total_mut_limit(&params, &opts()).unwrap();
        assert!((total.value - bd_total_mut_limit(&bd)).abs() < 1e-6);
    }

    #[test]
    fn yule_values() {
        let params = ModelParams::new(1.0, 1.0, OffspringDistribution::yule());
        let v = general_sfs_limit(&params, 2, &opts()).unwrap();
        assert!((v.value - 1.0 / 6.0).abs() < 1e-6);
        let total = general_total_mut_limit(&params, &opts()).unwrap();
        assert!((total.value - 1.0).abs() < 1e-6);
    }

    #[test]
    fn total_dominates_singletons() {
        let params = ModelParams::new(
            1.3,
            0.7,
            OffspringDistribution::from_pairs([(0, 0.2), (1, 0.3), (2, 0.4), (3, 0.1)]),
        );
        let one = general_sfs_limit(&params, 1, &opts()).unwrap();
        let total = general_total_mut_limit(&params, &opts()).unwrap();
        assert!(total.value >= one.value);
    }

    #[test]
    fn return_bound_is_monotone_beyond_peak() {
        let params = ModelParams::new(
            1.0,
            1.0,
            OffspringDistribution::birth_death_with_extinction(0.7),
        );
        let setup = Setup::new(&params).unwrap();
        let mut prev = 1.0;
        for cap in [64, 128, 256, 512] {
            let b = setup.return_bound(cap, 10);
            assert!(b <= prev);
            prev = b;
        }
        assert!(prev < 1e-30);
    }

    #[test]
    fn tiny_budgets_are_reported() {
        let params = ModelParams::new(1.0, 1.0, OffspringDistribution::birth_death(0.25));
        let tight = GeneralLimitOptions {
            max_steps: 10,
            ..opts()
        };
        assert!(matches!(
            general_sfs_limit(&params, 1, &tight),
            Err(LimitError::BudgetExceeded(_))
        ));
        let small_cap = GeneralLimitOptions {
            max_state_cap: 32,
            ..opts()
        };
        assert!(matches!(
            general_sfs_limit(&params, 1, &small_cap),
            Err(LimitError::BudgetExceeded(_))
        ));
    }
}
