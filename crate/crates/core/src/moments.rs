//! Monte Carlo estimation of `E[(max_i |X_i|)^m]` and comparison verdicts.
//!
//! Samples are `x = L z` with `L` the Cholesky factor and `z` drawn from the
//! counter-based streams in [`crate::rng`]. Comparisons use common random
//! numbers: the same `z` drives both `X` and `Y`, and the z-score is formed
//! from the per-sample paired differences.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::conditions::augment;
use crate::error::{Error, Result};
use crate::gaussian::{regularize_matrix_until_pd, regularize_until_pd, CovarianceMatrix, GaussianPair};
use crate::rng::{map_chunks, reduce_stats, RunningStats};

pub const DEFAULT_SAMPLES: usize = 1_000_000;
pub const MIN_SAMPLES: usize = 1_000;
pub const Z_VIOLATION: f64 = 3.0;
pub const Z_CONSISTENT: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentEstimate {
    pub value: f64,
    pub std_error: f64,
    pub n_samples: usize,
    pub m: f64,
    pub seed: u64,
    pub k: usize,
    /// `ε²` added to the diagonal before sampling (0 when none was needed).
    pub regularization: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Consistent,
    Inconclusive,
    Violation,
}

impl Verdict {
    pub fn from_z(z: f64) -> Self {
        if z > Z_VIOLATION {
            Verdict::Violation
        } else if z < Z_CONSISTENT {
            Verdict::Consistent
        } else {
            Verdict::Inconclusive
        }
    }
}

/// Decision for the claim `lhs ≤ rhs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonVerdict {
    pub lhs: MomentEstimate,
    pub rhs: MomentEstimate,
    /// Mean of the paired per-sample differences `lhs_i - rhs_i`.
    pub difference: f64,
    /// Standard error of `difference`.
    pub difference_se: f64,
    pub z_score: f64,
    pub verdict: Verdict,
}

/// Corollary bound `E[max|X|^m] ≤ 2^{m-1}(σ^m E|g|^m + E[max|Y|^m])`, plus the
/// constant-factor form `2^{m-1}(2^{m/2}+1) E[max|Y|^m]` when
/// `max Σ^X_ii ≤ max Σ^Y_ii`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorollaryVerdict {
    pub sigma: f64,
    pub bound: ComparisonVerdict,
    pub constant_factor_applies: bool,
    pub constant_factor: Option<ComparisonVerdict>,
}

impl CorollaryVerdict {
    pub fn worst_verdict(&self) -> Verdict {
        match &self.constant_factor {
            Some(r) if r.verdict == Verdict::Violation => Verdict::Violation,
            _ => self.bound.verdict,
        }
    }
}

/// `E|g|^m = 2^{m/2} Γ((m+1)/2) / √π` for `g ~ N(0,1)`.
pub fn abs_normal_moment(m: f64) -> Result<f64> {
    if !(m >= 0.0) || !m.is_finite() {
        return Err(Error::NegativeOrder(m));
    }
    let log = 0.5 * m * std::f64::consts::LN_2 + ln_gamma(0.5 * (m + 1.0))
        - 0.5 * std::f64::consts::PI.ln();
    Ok(log.exp())
}

/// `r^m` for `r ≥ 0`, with `0^m = 0`.
#[inline]
pub fn pow_m(r: f64, m: f64) -> f64 {
    if r == 0.0 {
        0.0
    } else if m.fract() == 0.0 && m <= 64.0 {
        r.powi(m as i32)
    } else {
        (m * r.ln()).exp()
    }
}

fn validate(orders: &[f64], n: usize) -> Result<()> {
    if n < MIN_SAMPLES {
        return Err(Error::InvalidParameter(format!(
            "n must be at least {MIN_SAMPLES}, got {n}"
        )));
    }
    if orders.is_empty() {
        return Err(Error::InvalidParameter("no moment orders given".into()));
    }
    for &m in orders {
        if !(m >= 1.0 && m.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "moment order must be a finite real >= 1, got {m}"
            )));
        }
    }
    Ok(())
}

#[inline]
fn fill_normals(rng: &mut ChaCha8Rng, z: &mut [f64]) {
    for v in z.iter_mut() {
        *v = rng.sample(StandardNormal);
    }
}

#[inline]
fn max_abs(x: &[f64]) -> f64 {
    x.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

/// Estimates for several orders from one sample stream.
pub fn sample_max_abs_orders(
    c: &CovarianceMatrix,
    n: usize,
    seed: u64,
    orders: &[f64],
) -> Result<Vec<MomentEstimate>> {
    validate(orders, n)?;
    let (c, regularization) = regularize_matrix_until_pd(c)?;
    let chol = c.cholesky().map_err(|_| Error::SingularAfterRegularize)?;
    let k = c.k();
    let chunks = map_chunks(n, seed, |rng, count| {
        let mut stats = vec![RunningStats::new(); orders.len()];
        let (mut z, mut x) = (vec![0.0; k], vec![0.0; k]);
        for _ in 0..count {
            fill_normals(rng, &mut z);
            CovarianceMatrix::transform(chol, &z, &mut x);
            let r = max_abs(&x);
            for (s, &m) in stats.iter_mut().zip(orders) {
                s.push(pow_m(r, m));
            }
        }
        stats
    });
    Ok(reduce_stats(&chunks)
        .into_iter()
        .zip(orders)
        .map(|(s, &m)| MomentEstimate {
            value: s.mean,
            std_error: s.std_error(),
            n_samples: n,
            m,
            seed,
            k,
            regularization,
        })
        .collect())
}

pub fn sample_max_abs(c: &CovarianceMatrix, n: usize, seed: u64, m: f64) -> Result<MomentEstimate> {
    Ok(sample_max_abs_orders(c, n, seed, &[m])?.remove(0))
}

/// A contrast `lhs - (scale * rhs + shift)` accumulated per sample.
#[derive(Debug, Clone, Copy)]
struct Contrast {
    scale: f64,
    shift: f64,
}

struct PairedStats {
    x: RunningStats,
    y: RunningStats,
    contrasts: Vec<RunningStats>,
}

/// Runs the shared-stream kernel; returns, per order, `[x, y, contrasts...]`.
fn paired_scan(
    pair: &GaussianPair,
    n: usize,
    seed: u64,
    orders: &[f64],
    contrasts: &[Vec<Contrast>],
) -> Result<Vec<PairedStats>> {
    let lx = pair.sigma_x().cholesky().map_err(|_| Error::SingularAfterRegularize)?;
    let ly = pair.sigma_y().cholesky().map_err(|_| Error::SingularAfterRegularize)?;
    let k = pair.k();
    let width: Vec<usize> = contrasts.iter().map(|c| 2 + c.len()).collect();
    let total: usize = width.iter().sum();
    let chunks = map_chunks(n, seed, |rng, count| {
        let mut stats = vec![RunningStats::new(); total];
        let (mut z, mut x, mut y) = (vec![0.0; k], vec![0.0; k], vec![0.0; k]);
        for _ in 0..count {
            fill_normals(rng, &mut z);
            CovarianceMatrix::transform(lx, &z, &mut x);
            CovarianceMatrix::transform(ly, &z, &mut y);
            let (a, b) = (max_abs(&x), max_abs(&y));
            let mut offset = 0;
            for (oi, &m) in orders.iter().enumerate() {
                let (pa, pb) = (pow_m(a, m), pow_m(b, m));
                stats[offset].push(pa);
                stats[offset + 1].push(pb);
                for (ci, c) in contrasts[oi].iter().enumerate() {
                    stats[offset + 2 + ci].push(pa - (c.scale * pb + c.shift));
                }
                offset += width[oi];
            }
        }
        stats
    });
    let merged = reduce_stats(&chunks);
    let mut out = Vec::with_capacity(orders.len());
    let mut offset = 0;
    for w in width {
        out.push(PairedStats {
            x: merged[offset],
            y: merged[offset + 1],
            contrasts: merged[offset + 2..offset + w].to_vec(),
        });
        offset += w;
    }
    Ok(out)
}

fn estimate_from(s: &RunningStats, m: f64, n: usize, seed: u64, k: usize, reg: f64) -> MomentEstimate {
    MomentEstimate {
        value: s.mean,
        std_error: s.std_error(),
        n_samples: n,
        m,
        seed,
        k,
        regularization: reg,
    }
}

fn verdict_from(lhs: MomentEstimate, rhs: MomentEstimate, diff: &RunningStats) -> ComparisonVerdict {
    let difference = diff.mean;
    let difference_se = diff.std_error();
    let floor = 1e-12 * lhs.value.abs().max(rhs.value.abs());
    let se = difference_se.max(floor);
    let z_score = if difference == 0.0 || se == 0.0 {
        0.0
    } else {
        difference / se
    };
    ComparisonVerdict {
        lhs,
        rhs,
        difference,
        difference_se,
        z_score,
        verdict: Verdict::from_z(z_score),
    }
}

/// Tests `E[max|X|^m] ≤ E[max|Y|^m]` for each order, sharing one stream.
pub fn compare_orders(pair: &GaussianPair, orders: &[f64], n: usize, seed: u64) -> Result<Vec<ComparisonVerdict>> {
    validate(orders, n)?;
    let pair = regularize_until_pd(pair)?;
    let reg = pair.noise_variance();
    let contrasts = vec![vec![Contrast { scale: 1.0, shift: 0.0 }]; orders.len()];
    let stats = paired_scan(&pair, n, seed, orders, &contrasts)?;
    Ok(stats
        .iter()
        .zip(orders)
        .map(|(s, &m)| {
            let lhs = estimate_from(&s.x, m, n, seed, pair.k(), reg);
            let rhs = estimate_from(&s.y, m, n, seed, pair.k(), reg);
            verdict_from(lhs, rhs, &s.contrasts[0])
        })
        .collect())
}

pub fn compare(pair: &GaussianPair, m: f64, n: usize, seed: u64) -> Result<ComparisonVerdict> {
    Ok(compare_orders(pair, &[m], n, seed)?.remove(0))
}

/// `2^{m-1}(2^{m/2}+1)`.
pub fn constant_factor_multiplier(m: f64) -> f64 {
    2f64.powf(m - 1.0) * (2f64.powf(0.5 * m) + 1.0)
}

pub fn corollary_orders(pair: &GaussianPair, orders: &[f64], n: usize, seed: u64) -> Result<Vec<CorollaryVerdict>> {
    validate(orders, n)?;
    let sigma = augment(pair)?.sigma;
    let max_diag = |c: &CovarianceMatrix| c.diag().into_iter().fold(f64::NEG_INFINITY, f64::max);
    let constant_factor_applies = max_diag(pair.sigma_x()) <= max_diag(pair.sigma_y());

    let reg_pair = regularize_until_pd(pair)?;
    let reg = reg_pair.noise_variance();
    let mut contrasts = Vec::with_capacity(orders.len());
    for &m in orders {
        let factor = 2f64.powf(m - 1.0);
        let mut list = vec![Contrast {
            scale: factor,
            shift: factor * sigma.powf(m) * abs_normal_moment(m)?,
        }];
        if constant_factor_applies {
            list.push(Contrast {
                scale: constant_factor_multiplier(m),
                shift: 0.0,
            });
        }
        contrasts.push(list);
    }
    let stats = paired_scan(&reg_pair, n, seed, orders, &contrasts)?;
    let k = pair.k();
    Ok(stats
        .iter()
        .zip(orders)
        .zip(&contrasts)
        .map(|((s, &m), cs)| {
            let lhs = estimate_from(&s.x, m, n, seed, k, reg);
            let y = estimate_from(&s.y, m, n, seed, k, reg);
            let scaled = |c: &Contrast| MomentEstimate {
                value: c.scale * y.value + c.shift,
                std_error: c.scale * y.std_error,
                ..y.clone()
            };
            let bound = verdict_from(lhs.clone(), scaled(&cs[0]), &s.contrasts[0]);
            let constant_factor = constant_factor_applies.then(|| verdict_from(lhs.clone(), scaled(&cs[1]), &s.contrasts[1]));
            CorollaryVerdict {
                sigma,
                bound,
                constant_factor_applies,
                constant_factor,
            }
        })
        .collect())
}

pub fn corollary_bound_check(pair: &GaussianPair, m: f64, n: usize, seed: u64) -> Result<CorollaryVerdict> {
    Ok(corollary_orders(pair, &[m], n, seed)?.remove(0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn abs_normal_moment_closed_values() {
        assert!((abs_normal_moment(0.0).unwrap() - 1.0).abs() < 1e-14);
        assert!((abs_normal_moment(2.0).unwrap() - 1.0).abs() < 1e-14);
        assert!((abs_normal_moment(4.0).unwrap() - 3.0).abs() < 1e-13);
        let sqrt_2_pi = (2.0 / std::f64::consts::PI).sqrt();
        assert!((abs_normal_moment(1.0).unwrap() - sqrt_2_pi).abs() < 1e-14);
        assert!(matches!(abs_normal_moment(-0.5), Err(Error::NegativeOrder(_))));
        assert!(abs_normal_moment(f64::NAN).is_err());
    }

    #[test]
    fn pow_m_handles_zero_and_fractions() {
        assert_eq!(pow_m(0.0, 2.5), 0.0);
        assert_eq!(pow_m(3.0, 2.0), 9.0);
        assert!((pow_m(4.0, 1.5) - 8.0).abs() < 1e-13);
    }

    #[test]
    fn rejects_bad_parameters() {
        let c = CovarianceMatrix::identity(2);
        assert!(sample_max_abs(&c, 999, 1, 2.0).is_err());
        assert!(sample_max_abs(&c, 1000, 1, 0.5).is_err());
        assert!(sample_max_abs(&c, 1000, 1, f64::INFINITY).is_err());
    }

    #[test]
    fn verdict_bands() {
        assert_eq!(Verdict::from_z(3.5), Verdict::Violation);
        assert_eq!(Verdict::from_z(3.0), Verdict::Inconclusive);
        assert_eq!(Verdict::from_z(1.0), Verdict::Inconclusive);
        assert_eq!(Verdict::from_z(0.99), Verdict::Consistent);
        assert_eq!(Verdict::from_z(-40.0), Verdict::Consistent);
    }

    #[test]
    fn identical_pair_gives_identical_estimates() {
        let c = CovarianceMatrix::from_rows(&[vec![2.0, 0.3], vec![0.3, 1.0]]).unwrap();
        let pair = GaussianPair::new(c.clone(), c).unwrap();
        for m in [1.0, 2.5] {
            let v = compare(&pair, m, 20_000, 5).unwrap();
            assert_eq!(v.lhs.value, v.rhs.value);
            assert_eq!(v.z_score, 0.0);
            assert_eq!(v.verdict, Verdict::Consistent);
        }
    }

    #[test]
    fn reversed_domination_is_a_violation() {
        let id = CovarianceMatrix::identity(2);
        let pair = GaussianPair::new(id.scaled(2.0).unwrap(), id).unwrap();
        let v = compare(&pair, 2.0, 100_000, 3).unwrap();
        assert_eq!(v.verdict, Verdict::Violation);
    }

    #[test]
    fn singular_input_is_regularized_and_recorded() {
        let c = CovarianceMatrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        let e = sample_max_abs(&c, 10_000, 1, 2.0).unwrap();
        assert!(e.regularization > 0.0);
        assert!((e.value - 1.0).abs() < 4.0 * e.std_error);
    }

    #[test]
    fn corollary_rejects_sf_violations() {
        let id = CovarianceMatrix::identity(2);
        let pair = GaussianPair::new(id.scaled(2.0).unwrap(), id).unwrap();
        assert!(matches!(
            corollary_bound_check(&pair, 2.0, 1000, 1),
            Err(Error::SfConditionViolated { .. })
        ));
    }

    #[test]
    fn corollary_one_dimensional_example() {
        let one = CovarianceMatrix::identity(1);
        let pair = GaussianPair::new(one.clone(), one).unwrap();
        let v = corollary_bound_check(&pair, 1.0, 200_000, 9).unwrap();
        let e1 = abs_normal_moment(1.0).unwrap();
        assert!((v.sigma - 2f64.sqrt()).abs() < 1e-15);
        assert!((v.bound.rhs.value - (2f64.sqrt() * e1 + v.bound.lhs.value)).abs() < 1e-12);
        assert!((v.bound.rhs.value - 1.926).abs() < 0.01);
        assert_eq!(v.bound.verdict, Verdict::Consistent);
        assert!(v.constant_factor_applies);
    }
}
