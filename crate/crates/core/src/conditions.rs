//! Covariance conditions for comparing maxima of two Gaussian vectors.
//!
//! With `Δ = Σ^Y - Σ^X`:
//! - the Sudakov–Fernique condition is `2 Δ_ij ≤ Δ_ii + Δ_jj` for all pairs,
//!   i.e. every increment variance of `X` is at most that of `Y`;
//! - the strengthened condition is `2 |Δ_ij| ≤ Δ_ii + Δ_jj`, which orders all
//!   moments `E[(max_i |X_i|)^m]`, `m ≥ 1`.
//!
//! Ties count as passes: both inequalities allow equality, so a pair only fails
//! when it misses by more than `cond_tol = 1e-9 * scale`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{CovarianceMatrix, GaussianPair};

pub const COND_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaReport {
    pub k: usize,
    /// `Σ^Y - Σ^X`, row-major.
    pub delta: Vec<f64>,
    /// `M = Σ_ij |Δ_ij|`.
    pub m_total: f64,
    /// `Δ_ii + Δ_jj - 2 |Δ_ij|`, row-major.
    pub slack: Vec<f64>,
    pub cond_tol: f64,
    pub sf_failures: Vec<(usize, usize)>,
    pub strong_failures: Vec<(usize, usize)>,
}

impl DeltaReport {
    pub fn sf_holds(&self) -> bool {
        self.sf_failures.is_empty()
    }

    pub fn strong_holds(&self) -> bool {
        self.strong_failures.is_empty()
    }

    pub fn delta_at(&self, i: usize, j: usize) -> f64 {
        self.delta[i * self.k + j]
    }

    pub fn slack_at(&self, i: usize, j: usize) -> f64 {
        self.slack[i * self.k + j]
    }
}

/// Builds the full report: Δ, M, slack and both failure lists.
///
/// Failures are listed once per unordered pair as `(i, j)` with `i ≤ j`.
pub fn delta_report(pair: &GaussianPair) -> DeltaReport {
    let k = pair.k();
    let delta = pair.delta();
    let cond_tol = COND_TOL * pair.scale();
    let d = |i: usize, j: usize| delta[i * k + j];
    let m_total = delta.iter().map(|v| v.abs()).sum();

    let mut slack = vec![0.0; k * k];
    let mut sf_failures = Vec::new();
    let mut strong_failures = Vec::new();
    for i in 0..k {
        for j in 0..k {
            slack[i * k + j] = d(i, i) + d(j, j) - 2.0 * d(i, j).abs();
        }
    }
    for i in 0..k {
        for j in i..k {
            if 2.0 * d(i, j) > d(i, i) + d(j, j) + cond_tol {
                sf_failures.push((i, j));
            }
            if slack[i * k + j] < -cond_tol {
                strong_failures.push((i, j));
            }
        }
    }
    DeltaReport {
        k,
        delta,
        m_total,
        slack,
        cond_tol,
        sf_failures,
        strong_failures,
    }
}

/// Sudakov–Fernique check, stated on increment variances:
/// `(i, j)` fails iff `E[(X_i-X_j)²] > E[(Y_i-Y_j)²] + cond_tol`.
pub fn check_sf_condition(pair: &GaussianPair) -> Result<DeltaReport> {
    ensure_same_k(pair)?;
    let mut report = delta_report(pair);
    let (x, y) = (pair.sigma_x(), pair.sigma_y());
    let mut failures = Vec::new();
    for i in 0..pair.k() {
        for j in (i + 1)..pair.k() {
            let inc_x = x.increment_variance(i, j)?;
            let inc_y = y.increment_variance(i, j)?;
            if inc_x > inc_y + report.cond_tol {
                failures.push((i, j));
            }
        }
    }
    report.sf_failures = failures;
    Ok(report)
}

/// Strengthened check `2|Δ_ij| ≤ Δ_ii + Δ_jj`, including `i = j` (which forces `Δ_ii ≥ 0`).
pub fn check_strong_condition(pair: &GaussianPair) -> Result<DeltaReport> {
    ensure_same_k(pair)?;
    Ok(delta_report(pair))
}

fn ensure_same_k(pair: &GaussianPair) -> Result<()> {
    if pair.sigma_x().k() != pair.sigma_y().k() {
        return Err(Error::DimensionMismatch {
            left: pair.sigma_x().k(),
            right: pair.sigma_y().k(),
        });
    }
    Ok(())
}

/// `Ỹ = Y + σ g` with a scalar `g ~ N(0,1)` independent of `Y`.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedPair {
    /// `σ = max_i sqrt(Σ^X_ii + Σ^Y_ii)`.
    pub sigma: f64,
    /// `Σ^Y + σ² J`.
    pub sigma_y_tilde: CovarianceMatrix,
}

/// Builds `Ỹ` for a pair satisfying the Sudakov–Fernique condition and asserts
/// that `(X, Ỹ)` satisfies the strengthened condition.
pub fn augment(pair: &GaussianPair) -> Result<AugmentedPair> {
    let sf = check_sf_condition(pair)?;
    if !sf.sf_holds() {
        return Err(Error::SfConditionViolated {
            pairs: sf.sf_failures,
        });
    }
    let (x, y) = (pair.sigma_x(), pair.sigma_y());
    let sigma2 = (0..pair.k())
        .map(|i| x.get(i, i) + y.get(i, i))
        .fold(0.0_f64, f64::max);
    let sigma_y_tilde = y.add_constant(sigma2)?;
    let augmented = GaussianPair::new(x.clone(), sigma_y_tilde.clone())?;
    let strong = check_strong_condition(&augmented)?;
    if !strong.strong_holds() {
        return Err(Error::StrongConditionViolated {
            pairs: strong.strong_failures,
        });
    }
    Ok(AugmentedPair {
        sigma: sigma2.sqrt(),
        sigma_y_tilde,
    })
}
