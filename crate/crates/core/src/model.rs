//! Model parameters for a continuous-time Galton-Watson process with
//! neutral mutations, and the quantities derived from them.
//!
//! Every individual lives an `Exp(a)` lifetime and is then replaced by `k`
//! offspring with probability `u_k`. Independently, each individual picks
//! up new mutations at rate `nu`.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance on `sum(u_k) == 1`.
pub const NORMALIZATION_TOL: f64 = 1e-12;

/// Default absolute tolerance for the extinction-probability solver.
pub const DEFAULT_EXTINCTION_TOL: f64 = 1e-12;

/// Upper end of the bisection bracket is `1 - BRACKET_EPS`.
const BRACKET_EPS: f64 = 1e-12;

const MAX_BISECTION_STEPS: usize = 200;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("offspring probabilities must lie in [0, 1] and sum to 1 (sum = {sum})")]
    NotNormalized { sum: f64 },
    #[error("{name} must be positive and finite (got {value})")]
    NonPositiveRate { name: &'static str, value: f64 },
    #[error("mean offspring number {mean} <= 1: process is not supercritical")]
    Subcritical { mean: f64 },
    #[error("extinction-probability bisection did not reach tolerance {tol}")]
    NoConvergence { tol: f64 },
    #[error("invalid model config: {0}")]
    Config(String),
}

/// Finite offspring distribution `(u_0, u_1, ..., u_K)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OffspringDistribution {
    probs: Vec<f64>,
}

impl OffspringDistribution {
    /// Builds a distribution from `u_k` indexed by `k`. Trailing zeros are
    /// trimmed; normalization is checked by [`ModelParams::validate`].
    pub fn new(mut probs: Vec<f64>) -> Self {
        while probs.len() > 1 && probs.last() == Some(&0.0) {
            probs.pop();
        }
        Self { probs }
    }

    /// Builds a distribution from `(k, u_k)` pairs; unspecified counts get 0.
    pub fn from_pairs<I: IntoIterator<Item = (usize, f64)>>(pairs: I) -> Self {
        let mut probs = Vec::new();
        for (k, u) in pairs {
            if probs.len() <= k {
                probs.resize(k + 1, 0.0);
            }
            probs[k] += u;
        }
        Self::new(probs)
    }

    /// Birth-death process: 0 offspring w.p. `death`, 2 offspring otherwise.
    pub fn birth_death(death: f64) -> Self {
        Self::new(vec![death, 0.0, 1.0 - death])
    }

    /// Birth-death process with the given extinction probability `p = u_0/u_2`.
    pub fn birth_death_with_extinction(p: f64) -> Self {
        Self::birth_death(p / (1.0 + p))
    }

    pub fn yule() -> Self {
        Self::new(vec![0.0, 0.0, 1.0])
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, k: usize) -> f64 {
        self.probs.get(k).copied().unwrap_or(0.0)
    }

    /// Largest offspring count with positive probability.
    pub fn max_offspring(&self) -> usize {
        self.probs.iter().rposition(|&u| u > 0.0).unwrap_or(0)
    }

    pub fn mean(&self) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .map(|(k, u)| k as f64 * u)
            .sum()
    }

    /// Probability generating function `f(s) = sum_k u_k s^k` (Horner).
    pub fn pgf(&self, s: f64) -> f64 {
        self.probs.iter().rev().fold(0.0, |acc, &u| acc * s + u)
    }

    /// True when every offspring count with positive mass is 0 or 2.
    pub fn is_birth_death(&self) -> bool {
        self.probs
            .iter()
            .enumerate()
            .all(|(k, &u)| u == 0.0 || k == 0 || k == 2)
    }

    fn check_normalized(&self) -> Result<(), ModelError> {
        let sum: f64 = self.probs.iter().sum();
        let in_range = self.probs.iter().all(|u| (0.0..=1.0).contains(u));
        if !in_range || !sum.is_finite() || (sum - 1.0).abs() > NORMALIZATION_TOL {
            return Err(ModelError::NotNormalized { sum });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Rate `a` of the exponential lifetime.
    pub lifetime_rate: f64,
    /// Mutation rate `nu` per individual per unit time.
    pub mutation_rate: f64,
    pub offspring: OffspringDistribution,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedQuantities {
    pub mean_offspring: f64,
    pub growth_rate: f64,
    pub extinction_prob: f64,
    pub survival_prob: f64,
}

impl ModelParams {
    pub fn new(lifetime_rate: f64, mutation_rate: f64, offspring: OffspringDistribution) -> Self {
        Self {
            lifetime_rate,
            mutation_rate,
            offspring,
        }
    }

    /// Birth-death model with extinction probability `p`, scaled so that the
    /// growth rate is `lambda`.
    pub fn birth_death(p: f64, growth_rate: f64, mutation_rate: f64) -> Self {
        let offspring = OffspringDistribution::birth_death_with_extinction(p);
        let a = growth_rate / (offspring.mean() - 1.0);
        Self::new(a, mutation_rate, offspring)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        self.offspring.check_normalized()?;
        for (name, value) in [
            ("lifetime_rate", self.lifetime_rate),
            ("mutation_rate", self.mutation_rate),
        ] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(ModelError::NonPositiveRate { name, value });
            }
        }
        let mean = self.offspring.mean();
        if mean <= 1.0 {
            return Err(ModelError::Subcritical { mean });
        }
        Ok(())
    }

    /// Net growth rate `lambda = a (m - 1)`.
    pub fn growth_rate(&self) -> f64 {
        self.lifetime_rate * (self.offspring.mean() - 1.0)
    }

    pub fn derive(&self, tol: f64) -> Result<DerivedQuantities, ModelError> {
        self.validate()?;
        let p = extinction_probability(&self.offspring, tol)?;
        Ok(DerivedQuantities {
            mean_offspring: self.offspring.mean(),
            growth_rate: self.growth_rate(),
            extinction_prob: p,
            survival_prob: 1.0 - p,
        })
    }

    pub fn derived(&self) -> Result<DerivedQuantities, ModelError> {
        self.derive(DEFAULT_EXTINCTION_TOL)
    }

    /// Reads parameters from a TOML file; see [`ModelParams::from_toml_str`].
    pub fn from_toml_file(path: &Path) -> Result<Self, ModelError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ModelError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    /// Parses
    ///
    /// ```toml
    /// lifetime_rate = 1.0
    /// mutation_rate = 1.0
    /// [offspring]
    /// 0 = "1/4"
    /// 2 = 0.75
    /// ```
    ///
    /// Unknown top-level keys are ignored so run settings can share the file.
    pub fn from_toml_str(text: &str) -> Result<Self, ModelError> {
        let raw: RawModel = toml::from_str(text).map_err(|e| ModelError::Config(e.to_string()))?;
        let mut pairs = Vec::with_capacity(raw.offspring.len());
        for (k, v) in &raw.offspring {
            let k: usize = k
                .trim()
                .parse()
                .map_err(|_| ModelError::Config(format!("offspring key {k:?} is not a count")))?;
            pairs.push((k, v.value()?));
        }
        let params = Self::new(
            raw.lifetime_rate.value()?,
            raw.mutation_rate.value()?,
            OffspringDistribution::from_pairs(pairs),
        );
        params.validate()?;
        Ok(params)
    }
}

#[derive(Deserialize)]
struct RawModel {
    lifetime_rate: Number,
    mutation_rate: Number,
    offspring: BTreeMap<String, Number>,
}

/// A config number: a TOML float/integer or a string such as `"1/3"`.
#[derive(Deserialize)]
#[serde(untagged)]
enum Number {
    Int(i64),
    Float(f64),
    Text(String),
}

impl Number {
    fn value(&self) -> Result<f64, ModelError> {
        match self {
            Number::Int(i) => Ok(*i as f64),
            Number::Float(f) => Ok(*f),
            Number::Text(s) => parse_fraction(s),
        }
    }
}

/// Parses `"0.25"` or `"1/4"`.
pub fn parse_fraction(s: &str) -> Result<f64, ModelError> {
    let bad = || ModelError::Config(format!("cannot parse {s:?} as a number or fraction"));
    match s.split_once('/') {
        Some((num, den)) => {
            let num: f64 = num.trim().parse().map_err(|_| bad())?;
            let den: f64 = den.trim().parse().map_err(|_| bad())?;
            if den == 0.0 {
                return Err(bad());
            }
            Ok(num / den)
        }
        None => s.trim().parse().map_err(|_| bad()),
    }
}

/// Smallest root of `f(s) = s` on `[0, 1]`.
///
/// Birth-death distributions use `p = u_0 / u_2`. Otherwise `f(s) - s` is
/// bisected on `[0, 1 - 1e-12]`, where it is positive below the root and
/// negative above it for a supercritical distribution.
pub fn extinction_probability(
    offspring: &OffspringDistribution,
    tol: f64,
) -> Result<f64, ModelError> {
    let u0 = offspring.prob(0);
    if u0 == 0.0 {
        return Ok(0.0);
    }
    if offspring.is_birth_death() {
        return Ok(u0 / offspring.prob(2));
    }
    let gap = |s: f64| offspring.pgf(s) - s;
    let (mut lo, mut hi) = (0.0_f64, 1.0 - BRACKET_EPS);
    if gap(hi) >= 0.0 {
        // Root sits within BRACKET_EPS of 1; only possible when barely supercritical.
        return Ok(hi);
    }
    for _ in 0..MAX_BISECTION_STEPS {
        if hi - lo <= tol {
            return Ok(0.5 * (lo + hi));
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if gap(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(ModelError::NoConvergence { tol })
}
