//! Extinction-probability and effective-mutation-rate estimators for the
//! birth-death process, built on the limiting proportion
//! `phi_j(p) = lim S_j / M_j`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::limits::series;
use crate::sfs::SiteFrequencySpectrum;

/// Upper end of the bisection bracket is `1 - BRACKET_EPS`.
pub const BRACKET_EPS: f64 = 1e-12;

pub const DEFAULT_INVERSION_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EstimateError {
    #[error("no mutations are carried by {j} or more individuals")]
    EmptySpectrum { j: u64 },
    #[error("observed proportion is 0, so p_hat = 1 and nu/lambda cannot be estimated")]
    DegenerateEstimate { report: EstimateReport },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// `phi_1(p) = -(p + q ln q) / (p ln q)`, with `phi_1(0) = 1/2`.
pub fn phi1(p: f64) -> f64 {
    assert!((0.0..1.0).contains(&p), "p must lie in [0, 1)");
    if p == 0.0 {
        return 0.5;
    }
    let q = 1.0 - p;
    let log_q = (-p).ln_1p();
    -(p + q * log_q) / (p * log_q)
}

/// `phi_j(p) = 1 - sum_k p^k/(j+k+1) / sum_k p^k/(j+k)`, with `phi_j(0) = 1/(j+1)`.
pub fn phi_j(p: f64, j: u64) -> f64 {
    assert!(j >= 1, "j must be at least 1");
    assert!((0.0..1.0).contains(&p), "p must lie in [0, 1)");
    if p == 0.0 {
        return 1.0 / (j as f64 + 1.0);
    }
    // 1 - H_{j+1}/H_j = pair_j / H_j, which avoids the subtraction.
    series::pair(p, j) / series::harmonic(p, j)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Inversion {
    pub p_hat: f64,
    pub clamped: bool,
}

/// Inverts `phi_j` by bisection on `[0, 1 - 1e-12]`.
///
/// `x >= 1/(j+1)` maps to 0 and `x = 0` maps to 1. The result is flagged
/// as clamped when `x` lies outside `(0, 1/(j+1)]`.
pub fn invert_phi_j(x: f64, j: u64, tol: f64) -> Inversion {
    assert!((0.0..=1.0).contains(&x), "x must lie in [0, 1]");
    assert!(j >= 1 && tol > 0.0);
    let top = 1.0 / (j as f64 + 1.0);
    if x == 0.0 {
        return Inversion {
            p_hat: 1.0,
            clamped: true,
        };
    }
    if x >= top {
        return Inversion {
            p_hat: 0.0,
            clamped: x > top,
        };
    }
    let (mut lo, mut hi) = (0.0f64, 1.0 - BRACKET_EPS);
    if phi_j(hi, j) >= x {
        return Inversion {
            p_hat: hi,
            clamped: false,
        };
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if phi_j(mid, j) > x {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Inversion {
        p_hat: 0.5 * (lo + hi),
        clamped: false,
    }
}

/// How the population size `N` in `M / N` is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SizeBasis {
    FixedSize {
        size: f64,
    },
    /// `N = Y_hat e^{lambda t}`.
    FixedTime {
        time: f64,
        growth_rate: f64,
        y_hat: f64,
    },
}

impl SizeBasis {
    pub fn size(&self) -> f64 {
        match *self {
            SizeBasis::FixedSize { size } => size,
            SizeBasis::FixedTime {
                time,
                growth_rate,
                y_hat,
            } => y_hat * (growth_rate * time).exp(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub p_hat: f64,
    pub q_hat: f64,
    /// `None` only inside [`EstimateError::DegenerateEstimate`].
    pub effective_mutation_rate_hat: Option<f64>,
    pub j_used: u64,
    pub x_observed: f64,
    pub clamped: bool,
}

/// `p_hat = phi_j^{-1}(S_j / M_j)`, then
/// `nu/lambda_hat = (M / N) * (-p_hat / (q_hat ln q_hat))` (or `M / N` when `p_hat = 0`).
pub fn estimate_from_spectrum(
    sfs: &SiteFrequencySpectrum,
    basis: SizeBasis,
    j: u64,
    tol: f64,
) -> Result<EstimateReport, EstimateError> {
    if j == 0 {
        return Err(EstimateError::InvalidArgument(
            "j must be at least 1".into(),
        ));
    }
    let size = basis.size();
    if !(size > 0.0 && size.is_finite()) {
        return Err(EstimateError::InvalidArgument(format!(
            "population size must be positive, got {size}"
        )));
    }
    let tail = sfs.tail(j);
    if tail == 0 {
        return Err(EstimateError::EmptySpectrum { j });
    }
    let x = sfs.get(j) as f64 / tail as f64;
    let inv = invert_phi_j(x, j, tol);
    let p_hat = inv.p_hat;
    let q_hat = 1.0 - p_hat;
    let mut report = EstimateReport {
        p_hat,
        q_hat,
        effective_mutation_rate_hat: None,
        j_used: j,
        x_observed: x,
        clamped: inv.clamped,
    };
    if p_hat >= 1.0 {
        return Err(EstimateError::DegenerateEstimate { report });
    }
    let per_capita = sfs.total() as f64 / size;
    let factor = if p_hat == 0.0 {
        1.0
    } else {
        -p_hat / (q_hat * (-p_hat).ln_1p())
    };
    report.effective_mutation_rate_hat = Some(per_capita * factor);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::limits::quadrature::integrate;
    use proptest::prelude::*;

    #[test]
    fn phi1_examples() {
        assert_eq!(phi1(0.0), 0.5);
        let half = phi1(0.5);
        let ln = 0.5f64.ln();
        assert!((half - (-(0.5 + 0.5 * ln) / (0.5 * ln))).abs() < 1e-15);
        assert!((half - 0.442_695).abs() < 1e-6);
        assert!(phi1(1.0 - 1e-12) < 0.04);
    }

    #[test]
    fn phi_j_examples() {
        assert_eq!(phi_j(0.0, 4), 0.2);
        for i in 1..1000 {
            let p = i as f64 / 1000.0;
            assert!((phi_j(p, 1) - phi1(p)).abs() < 1e-12, "p={p}");
        }
    }

    #[test]
    fn phi_j_matches_quadrature_of_its_integrals() {
        let p = 0.7;
        let j = 2;
        let num = integrate(|y: f64| y.powi(j) / (1.0 - p * y), 0.0, 1.0, 1e-14).value;
        let den = integrate(|y: f64| y.powi(j - 1) / (1.0 - p * y), 0.0, 1.0, 1e-14).value;
        assert!((phi_j(p, j as u64) - (1.0 - num / den)).abs() < 1e-12);
    }

    #[test]
    fn strictly_decreasing_on_grid() {
        for j in 1..=10 {
            let values: Vec<f64> = (0..1000).map(|i| phi_j(i as f64 / 1000.0, j)).collect();
            assert!(values.windows(2).all(|w| w[1] < w[0]), "j={j}");
        }
    }

    #[test]
    fn inversion_round_trips_on_grid() {
        for j in 1..=10 {
            for i in 1..=99 {
                let p = i as f64 / 100.0;
                let r = invert_phi_j(phi_j(p, j), j, DEFAULT_INVERSION_TOL);
                assert!(!r.clamped);
                assert!(
                    (r.p_hat - p).abs() <= DEFAULT_INVERSION_TOL,
                    "j={j} p={p} got {}",
                    r.p_hat
                );
            }
        }
    }

    #[test]
    fn inversion_clamps() {
        assert_eq!(
            invert_phi_j(0.6, 1, 1e-10),
            Inversion {
                p_hat: 0.0,
                clamped: true
            }
        );
        assert_eq!(
            invert_phi_j(0.0, 1, 1e-10),
            Inversion {
                p_hat: 1.0,
                clamped: true
            }
        );
        assert_eq!(
            invert_phi_j(0.5, 1, 1e-10),
            Inversion {
                p_hat: 0.0,
                clamped: false
            }
        );
        let r = invert_phi_j(phi1(0.3), 1, 1e-10);
        assert!(!r.clamped && (r.p_hat - 0.3).abs() < 1e-10);
    }

    #[test]
    fn estimate_examples() {
        let sfs = SiteFrequencySpectrum::from_counts([(1, 1), (2, 1)]).unwrap();
        let r =
            estimate_from_spectrum(&sfs, SizeBasis::FixedSize { size: 10.0 }, 1, 1e-10).unwrap();
        assert_eq!(r.x_observed, 0.5);
        assert_eq!(r.p_hat, 0.0);
        assert_eq!(r.effective_mutation_rate_hat, Some(0.2));

        let sfs = SiteFrequencySpectrum::from_counts([(1, 4), (3, 2)]).unwrap();
        match estimate_from_spectrum(&sfs, SizeBasis::FixedSize { size: 10.0 }, 2, 1e-10) {
            Err(EstimateError::DegenerateEstimate { report }) => {
                assert_eq!(report.p_hat, 1.0);
                assert!(report.clamped);
                assert_eq!(report.effective_mutation_rate_hat, None);
            }
            other => panic!("expected degenerate estimate, got {other:?}"),
        }

        assert!(matches!(
            estimate_from_spectrum(&sfs, SizeBasis::FixedSize { size: 10.0 }, 4, 1e-10),
            Err(EstimateError::EmptySpectrum { j: 4 })
        ));
    }

    #[test]
    fn fixed_time_basis_uses_y_hat() {
        let basis = SizeBasis::FixedTime {
            time: 2.0,
            growth_rate: 0.5,
            y_hat: 3.0,
        };
        assert!((basis.size() - 3.0 * 1f64.exp()).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn estimator_is_scale_invariant(
            s1 in 1u64..500, s2 in 0u64..200, s3 in 0u64..100, factor in 1u64..20,
        ) {
            let sfs = SiteFrequencySpectrum::from_counts([(1, s1), (2, s2), (5, s3)]).unwrap();
            let basis = SizeBasis::FixedSize { size: 1000.0 };
            let a = estimate_from_spectrum(&sfs, basis, 1, 1e-12).unwrap();
            let b = estimate_from_spectrum(&sfs.scaled(factor), basis, 1, 1e-12).unwrap();
            prop_assert_eq!(a.p_hat, b.p_hat);
            let ra = a.effective_mutation_rate_hat.unwrap();
            let rb = b.effective_mutation_rate_hat.unwrap();
            prop_assert!((rb - factor as f64 * ra).abs() <= 1e-12 * rb.abs().max(1.0));
        }

        #[test]
        fn phi_j_range(p in 0.0f64..0.999, j in 1u64..30) {
            let v = phi_j(p, j);
            prop_assert!(v > 0.0 && v <= 1.0 / (j as f64 + 1.0));
        }
    }
}
