//! Gaussian interpolation between `X` and `Y` and the smooth maximum `f_p`.
//!
//! `Z(u) = √u X + √(1-u) Y` with `X ⟂ Y` has covariance `u Σ^X + (1-u) Σ^Y`,
//! and for twice differentiable `f`
//!
//! ```text
//! d/du E[f(Z(u))] = ½ Σ_ij (Σ^X_ij - Σ^Y_ij) E[∂²f/∂x_i∂x_j (Z(u))].
//! ```
//!
//! [`gi_check`] estimates both sides by Monte Carlo (left side by a central
//! difference in `u` with common random numbers) and reports the discrepancy.
//!
//! `f_p(x) = (Σ x_i^p + e^{-p²})^{m/p}` is evaluated as
//! `M^m (Σ (x_i/M)^p + e^{-p²}/M^p)^{m/p}` with `M = max |x_i|`, which is the
//! same number but never overflows. Derivatives use the same rescaling.

use serde::{Deserialize, Serialize};

use crate::conditions::check_strong_condition;
use crate::error::{Error, Result};
use crate::gaussian::{regularize_until_pd, CovarianceMatrix, GaussianPair};
use crate::moments::MIN_SAMPLES;
use crate::rng::{map_chunks, reduce_stats, RunningStats};

/// Central-difference step in `u`.
pub const FD_STEP: f64 = 1e-3;
/// Multiplier on the combined standard error in the GI tolerance.
pub const GI_SE_FACTOR: f64 = 3.0;
/// Slack for the deterministic path-bound checks.
pub const PATH_SLACK: f64 = 1e-12;
/// Relative slack for the sandwich bound.
pub const SANDWICH_SLACK: f64 = 1e-12;

/// Covariance of `Z(u)`: `u Σ^X + (1-u) Σ^Y`.
pub fn interp_cov(pair: &GaussianPair, u: f64) -> Result<CovarianceMatrix> {
    if !(0.0..=1.0).contains(&u) {
        return Err(Error::InvalidParameter(format!("u must lie in [0, 1], got {u}")));
    }
    if u == 1.0 {
        return Ok(pair.sigma_x().clone());
    }
    if u == 0.0 {
        return Ok(pair.sigma_y().clone());
    }
    pair.sigma_x().combine(u, pair.sigma_y(), 1.0 - u)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothMaxParams {
    pub p: u32,
    pub m: f64,
    pub k: usize,
}

impl SmoothMaxParams {
    pub fn new(p: u32, m: f64, k: usize) -> Result<Self> {
        if p == 0 || !p.is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!("p must be a positive even integer, got {p}")));
        }
        if !(m >= 1.0 && m.is_finite()) {
            return Err(Error::InvalidParameter(format!("m must be a finite real >= 1, got {m}")));
        }
        if f64::from(p) <= m / 2.0 {
            return Err(Error::InvalidParameter(format!("p = {p} must exceed m/2 = {}", m / 2.0)));
        }
        if k == 0 {
            return Err(Error::InvalidParameter("k must be positive".into()));
        }
        Ok(Self { p, m, k })
    }

    fn pf(&self) -> f64 {
        f64::from(self.p)
    }

    /// `e^{-p²}`; underflows to 0 for `p ≥ 28`.
    pub fn floor_term(&self) -> f64 {
        (-self.pf() * self.pf()).exp()
    }
}

/// `M = max |x_i|`, `ξ = x / M`, `Ã = A / M^p`, and `e^{-p²}/M^p`.
struct Rescaled {
    big: f64,
    xi: Vec<f64>,
    a_tilde: f64,
    floor_over: f64,
}

fn rescale(s: &SmoothMaxParams, x: &[f64]) -> Option<Rescaled> {
    let big = x.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    if big == 0.0 {
        return None;
    }
    let p = s.pf();
    let xi: Vec<f64> = x.iter().map(|v| v / big).collect();
    let floor_over = (-p * p - p * big.ln()).exp();
    let a_tilde = xi.iter().map(|v| v.powi(s.p as i32)).sum::<f64>() + floor_over;
    Some(Rescaled {
        big,
        xi,
        a_tilde,
        floor_over,
    })
}

pub fn f_p_eval(s: &SmoothMaxParams, x: &[f64]) -> f64 {
    match rescale(s, x) {
        None => (-s.pf() * s.m).exp(),
        Some(r) => {
            let log = s.m * r.big.ln() + (s.m / s.pf()) * r.a_tilde.ln();
            log.exp()
        }
    }
}

/// Gradient and row-major Hessian of `f_p` at `x`.
pub fn f_p_grad_hessian(s: &SmoothMaxParams, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let k = x.len();
    let (p, m) = (s.pf(), s.m);
    let mut grad = vec![0.0; k];
    let mut hess = vec![0.0; k * k];
    match rescale(s, x) {
        None => {
            if s.p == 2 {
                let a = s.floor_term();
                let diag = m * (p - 1.0) * a.powf(m / p - 1.0);
                for i in 0..k {
                    hess[i * k + i] = diag;
                }
            }
        }
        Some(r) => {
            let ip = s.p as i32;
            let pow_m2 = r.big.powf(m - 2.0);
            let a1 = r.a_tilde.powf(m / p - 1.0);
            let a2 = a1 / r.a_tilde;
            let odd: Vec<f64> = r.xi.iter().map(|v| v.powi(ip - 1)).collect();
            for i in 0..k {
                grad[i] = r.big.powf(m - 1.0) * a1 * m * odd[i];
                for j in i..k {
                    let mut h = m * (m - p) * a2 * odd[i] * odd[j];
                    if i == j {
                        h += m * (p - 1.0) * a1 * r.xi[i].powi(ip - 2);
                    }
                    hess[i * k + j] = pow_m2 * h;
                    hess[j * k + i] = pow_m2 * h;
                }
            }
        }
    }
    (grad, hess)
}

pub fn f_p_hessian(s: &SmoothMaxParams, x: &[f64]) -> Vec<f64> {
    f_p_grad_hessian(s, x).1
}

/// `(max|x_i|)^m ≤ f_p(x) ≤ 2^{m/p} [k^{m/p} (max|x_i|)^m + e^{-pm}]`.
pub fn sandwich_check(s: &SmoothMaxParams, x: &[f64]) -> bool {
    let (p, m) = (s.pf(), s.m);
    let big = x.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    let lower = big.powf(m);
    let upper = 2f64.powf(m / p) * ((x.len() as f64).powf(m / p) * lower + (-p * m).exp());
    let f = f_p_eval(s, x);
    f >= lower * (1.0 - SANDWICH_SLACK) && f <= upper * (1.0 + SANDWICH_SLACK)
}

/// Test functions for the interpolation identity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GiProbe {
    /// `f(x) = x_i x_j`.
    Quadratic { i: usize, j: usize },
    SmoothMax(SmoothMaxParams),
}

impl GiProbe {
    fn eval(&self, x: &[f64]) -> f64 {
        match self {
            GiProbe::Quadratic { i, j } => x[*i] * x[*j],
            GiProbe::SmoothMax(s) => f_p_eval(s, x),
        }
    }

    /// `½ Σ_ij Δ'_ij H_ij(x)` with `Δ' = Σ^X - Σ^Y`.
    fn gi_integrand(&self, x: &[f64], delta_xy: &[f64]) -> f64 {
        let k = x.len();
        match self {
            GiProbe::Quadratic { i, j } => {
                if i == j {
                    delta_xy[i * k + i]
                } else {
                    0.5 * (delta_xy[i * k + j] + delta_xy[j * k + i])
                }
            }
            GiProbe::SmoothMax(s) => {
                let h = f_p_hessian(s, x);
                0.5 * h.iter().zip(delta_xy).map(|(a, b)| a * b).sum::<f64>()
            }
        }
    }

    /// Exact `d/du E[f(Z(u))]` when it does not depend on `u`.
    fn closed_form(&self, delta_xy: &[f64], k: usize) -> Option<f64> {
        match self {
            GiProbe::Quadratic { i, j } => Some(delta_xy[i * k + j]),
            GiProbe::SmoothMax(s) if s.p == 2 && s.m == 2.0 => Some((0..k).map(|i| delta_xy[i * k + i]).sum()),
            GiProbe::SmoothMax(_) => None,
        }
    }

    /// Homogeneity degree, used to size the finite-difference bias budget.
    fn degree(&self) -> f64 {
        match self {
            GiProbe::Quadratic { .. } => 2.0,
            GiProbe::SmoothMax(s) => s.m,
        }
    }

    fn validate(&self, k: usize) -> Result<()> {
        match self {
            GiProbe::Quadratic { i, j } if *i >= k || *j >= k => Err(Error::Index { i: *i, j: *j, k }),
            GiProbe::SmoothMax(s) if s.k != k => Err(Error::DimensionMismatch { left: s.k, right: k }),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterpCheckReport {
    pub probe: GiProbe,
    pub n_samples: usize,
    pub seed: u64,
    pub fd_step: f64,
    pub u_grid: Vec<f64>,
    /// Central difference of `u ↦ Ê[f(Z(u))]`.
    pub lhs_fd: Vec<f64>,
    pub lhs_se: Vec<f64>,
    /// `½ Σ_ij (Σ^X_ij - Σ^Y_ij) Ê[H_ij(Z(u))]`.
    pub rhs_gi: Vec<f64>,
    pub rhs_se: Vec<f64>,
    pub discrepancy: Vec<f64>,
    /// Standard error of the paired per-sample difference `lhs_i - rhs_i`.
    pub discrepancy_se: Vec<f64>,
    /// `3 · discrepancy_se + C_fd h²`.
    pub tolerance_used: Vec<f64>,
    /// Exact derivative for probes where it is known (quadratic, `p = m = 2`).
    pub closed_form: Option<f64>,
}

impl InterpCheckReport {
    pub fn passed(&self) -> bool {
        self.discrepancy.iter().zip(&self.tolerance_used).all(|(d, t)| d <= t)
    }
}

/// `points` evenly spaced interior points of (0, 1).
pub fn interior_grid(points: usize) -> Vec<f64> {
    (1..=points).map(|i| i as f64 / (points + 1) as f64).collect()
}

fn validate_grid(u_grid: &[f64], lo: f64, hi: f64) -> Result<()> {
    if u_grid.is_empty() {
        return Err(Error::InvalidParameter("u grid is empty".into()));
    }
    if u_grid.iter().any(|u| !(lo..=hi).contains(u)) {
        return Err(Error::InvalidParameter(format!("u grid must lie in [{lo}, {hi}]")));
    }
    if u_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("u grid must be strictly increasing".into()));
    }
    Ok(())
}

/// Checks the interpolation identity at each `u` of `u_grid`.
pub fn gi_check(pair: &GaussianPair, probe: GiProbe, u_grid: &[f64], n: usize, seed: u64) -> Result<InterpCheckReport> {
    let h = FD_STEP;
    validate_grid(u_grid, h, 1.0 - h)?;
    if n < MIN_SAMPLES {
        return Err(Error::InvalidParameter(format!("n must be at least {MIN_SAMPLES}")));
    }
    let k = pair.k();
    probe.validate(k)?;
    let pair = regularize_until_pd(pair)?;
    let delta_xy: Vec<f64> = pair.delta().iter().map(|d| -d).collect();
    let fd_bias = (k * k) as f64 * pair.scale().powf(0.5 * probe.degree()) * h * h;

    let mut report = InterpCheckReport {
        probe,
        n_samples: n,
        seed,
        fd_step: h,
        u_grid: u_grid.to_vec(),
        lhs_fd: Vec::new(),
        lhs_se: Vec::new(),
        rhs_gi: Vec::new(),
        rhs_se: Vec::new(),
        discrepancy: Vec::new(),
        discrepancy_se: Vec::new(),
        tolerance_used: Vec::new(),
        closed_form: probe.closed_form(&delta_xy, k),
    };
    for &u in u_grid {
        let lm = interp_cov(&pair, u - h)?;
        let l0 = interp_cov(&pair, u)?;
        let lp = interp_cov(&pair, u + h)?;
        let (lm, l0, lp) = (
            lm.cholesky().map_err(|_| Error::SingularAfterRegularize)?,
            l0.cholesky().map_err(|_| Error::SingularAfterRegularize)?,
            lp.cholesky().map_err(|_| Error::SingularAfterRegularize)?,
        );
        let chunks = map_chunks(n, seed, |rng, count| {
            use rand::Rng;
            let mut stats = vec![RunningStats::new(); 3];
            let mut z = vec![0.0; k];
            let (mut xm, mut x0, mut xp) = (vec![0.0; k], vec![0.0; k], vec![0.0; k]);
            for _ in 0..count {
                for v in z.iter_mut() {
                    *v = rng.sample(rand_distr::StandardNormal);
                }
                CovarianceMatrix::transform(lm, &z, &mut xm);
                CovarianceMatrix::transform(l0, &z, &mut x0);
                CovarianceMatrix::transform(lp, &z, &mut xp);
                let fd = (probe.eval(&xp) - probe.eval(&xm)) / (2.0 * h);
                let gi = probe.gi_integrand(&x0, &delta_xy);
                stats[0].push(fd);
                stats[1].push(gi);
                stats[2].push(fd - gi);
            }
            stats
        });
        let s = reduce_stats(&chunks);
        report.lhs_fd.push(s[0].mean);
        report.lhs_se.push(s[0].std_error());
        report.rhs_gi.push(s[1].mean);
        report.rhs_se.push(s[1].std_error());
        report.discrepancy.push(s[2].mean.abs());
        report.discrepancy_se.push(s[2].std_error());
        report.tolerance_used.push(GI_SE_FACTOR * s[2].std_error() + fd_bias);
    }
    Ok(report)
}

/// Per-sample pieces of `Σ_ij (Σ^X_ij - Σ^Y_ij) ∂²f_p/∂x_i∂x_j` at `x`:
/// `[Z₁, Z₂, Z₃, Z₃₋]` (off-diagonal, diagonal `m(m-1)` part, `m(p-1)` part,
/// and the `e^{-p²}` share of the latter).
pub fn decomposition_terms(s: &SmoothMaxParams, x: &[f64], delta: &[f64]) -> [f64; 4] {
    let k = x.len();
    let (p, m) = (s.pf(), s.m);
    let dd = |i: usize, j: usize| -delta[i * k + j];
    match rescale(s, x) {
        None => {
            if s.p != 2 {
                return [0.0; 4];
            }
            let a = s.floor_term();
            let trace: f64 = (0..k).map(|i| dd(i, i)).sum();
            let t3 = m * (p - 1.0) * a.powf(m / p - 1.0) * trace;
            [0.0, 0.0, t3, t3]
        }
        Some(r) => {
            let ip = s.p as i32;
            let common = r.big.powf(m - 2.0) * r.a_tilde.powf(m / p - 2.0);
            let odd: Vec<f64> = r.xi.iter().map(|v| v.powi(ip - 1)).collect();
            let even: Vec<f64> = r.xi.iter().map(|v| v.powi(ip - 2)).collect();
            let (mut off, mut diag2, mut cross, mut diag_even) = (0.0, 0.0, 0.0, 0.0);
            for i in 0..k {
                diag2 += dd(i, i) * odd[i] * odd[i];
                diag_even += dd(i, i) * even[i];
                for j in 0..k {
                    let term = dd(i, j) * odd[i] * odd[j];
                    cross += term;
                    if i != j {
                        off += term;
                    }
                }
            }
            let t1 = m * (m - 1.0) * common * off;
            let t2 = m * (m - 1.0) * common * diag2;
            let t3 = m * (p - 1.0) * common * (r.a_tilde * diag_even - cross);
            // Δ_ii = -dd(i, i)
            let t3_minus = m * (p - 1.0) * common * r.floor_over * diag_even;
            [t1, t2, t3, t3_minus]
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermEstimate {
    pub mean: f64,
    pub std_error: f64,
}

impl From<&RunningStats> for TermEstimate {
    fn from(s: &RunningStats) -> Self {
        Self {
            mean: s.mean,
            std_error: s.std_error(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivativeTerms {
    pub params: SmoothMaxParams,
    pub u: f64,
    pub n_samples: usize,
    pub z1: TermEstimate,
    pub z2: TermEstimate,
    pub z3: TermEstimate,
    pub z3_minus: TermEstimate,
    /// `Z₁ + (Z₃ - Z₃₋)`, the part whose mean is `O(1/p)`.
    pub z0: TermEstimate,
    /// `Z₂ + Z₃₋`.
    pub z_minus: TermEstimate,
    /// Samples with `Z₂ > 0`.
    pub positive_z2: u64,
    /// Samples with `Z₃₋ > 0`.
    pub positive_z3_minus: u64,
    /// Largest `|Z₁+Z₂+Z₃ - Σ Δ'_ij H_ij| / (1 + |Σ Δ'_ij H_ij|)` seen.
    pub max_decomposition_residual: f64,
}

/// Monte Carlo means of the decomposition terms at `Z(u)`.
pub fn derivative_terms(pair: &GaussianPair, s: &SmoothMaxParams, u: f64, n: usize, seed: u64) -> Result<DerivativeTerms> {
    if s.k != pair.k() {
        return Err(Error::DimensionMismatch { left: s.k, right: pair.k() });
    }
    if n < MIN_SAMPLES {
        return Err(Error::InvalidParameter(format!("n must be at least {MIN_SAMPLES}")));
    }
    let strong = check_strong_condition(pair)?;
    if !strong.strong_holds() {
        return Err(Error::StrongConditionViolated {
            pairs: strong.strong_failures,
        });
    }
    let pair = regularize_until_pd(pair)?;
    let delta = pair.delta();
    let cov = interp_cov(&pair, u)?;
    let chol = cov.cholesky().map_err(|_| Error::SingularAfterRegularize)?;
    let k = pair.k();
    #[derive(Clone)]
    struct Acc {
        stats: Vec<RunningStats>,
        pos_z2: u64,
        pos_z3m: u64,
        resid: f64,
    }
    let chunks = map_chunks(n, seed, |rng, count| {
        use rand::Rng;
        let mut acc = Acc {
            stats: vec![RunningStats::new(); 6],
            pos_z2: 0,
            pos_z3m: 0,
            resid: 0.0,
        };
        let (mut z, mut x) = (vec![0.0; k], vec![0.0; k]);
        for _ in 0..count {
            for v in z.iter_mut() {
                *v = rng.sample(rand_distr::StandardNormal);
            }
            CovarianceMatrix::transform(chol, &z, &mut x);
            let [t1, t2, t3, t3m] = decomposition_terms(s, &x, &delta);
            let h = f_p_hessian(s, &x);
            let contraction: f64 = h.iter().zip(&delta).map(|(a, d)| -a * d).sum();
            let r = (t1 + t2 + t3 - contraction).abs() / (1.0 + contraction.abs());
            acc.resid = acc.resid.max(r);
            acc.pos_z2 += u64::from(t2 > 0.0);
            acc.pos_z3m += u64::from(t3m > 0.0);
            for (st, v) in acc.stats.iter_mut().zip([t1, t2, t3, t3m, t1 + (t3 - t3m), t2 + t3m]) {
                st.push(v);
            }
        }
        acc
    });
    let stats = reduce_stats(&chunks.iter().map(|a| a.stats.clone()).collect::<Vec<_>>());
    Ok(DerivativeTerms {
        params: *s,
        u,
        n_samples: n,
        z1: (&stats[0]).into(),
        z2: (&stats[1]).into(),
        z3: (&stats[2]).into(),
        z3_minus: (&stats[3]).into(),
        z0: (&stats[4]).into(),
        z_minus: (&stats[5]).into(),
        positive_z2: chunks.iter().map(|a| a.pos_z2).sum(),
        positive_z3_minus: chunks.iter().map(|a| a.pos_z3m).sum(),
        max_decomposition_residual: chunks.iter().fold(0.0, |acc, a| acc.max(a.resid)),
    })
}

/// Exact variance/correlation path of `W(t) = √t X + √(1-t) Y` for a 2-d pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathBoundReport {
    pub coordinates: (usize, usize),
    pub u_grid: Vec<f64>,
    pub var_1: Vec<f64>,
    pub var_2: Vec<f64>,
    pub corr: Vec<f64>,
    pub v_min: f64,
    pub v_max: f64,
    pub corr_cap: f64,
    pub var_ok: Vec<bool>,
    pub corr_ok: Vec<bool>,
    /// Largest deviation between `1 - (t√(ac)+(1-t)√(bd))² / (Var W₁ Var W₂)` and
    /// `t(1-t)(√(ad)-√(bc))² / (Var W₁ Var W₂)`.
    pub max_identity_residual: f64,
}

impl PathBoundReport {
    pub fn violations(&self) -> usize {
        self.var_ok.iter().chain(&self.corr_ok).filter(|ok| !**ok).count()
    }
}

pub fn lemma3_check(pair: &GaussianPair, u_grid: &[f64]) -> Result<PathBoundReport> {
    if pair.k() != 2 {
        return Err(Error::Dimension(format!("path bounds need k = 2, got {}", pair.k())));
    }
    validate_grid(u_grid, 0.0, 1.0)?;
    let (x, y) = (pair.sigma_x(), pair.sigma_y());
    let (a, c, b, d) = (x.get(0, 0), x.get(1, 1), y.get(0, 0), y.get(1, 1));
    for (idx, v) in [(0, a), (1, c), (0, b), (1, d)] {
        if v <= 0.0 {
            return Err(Error::ZeroVariance { index: idx });
        }
    }
    let rho_x = x.correlation(0, 1)?;
    let rho_y = y.correlation(0, 1)?;
    let v_min = a.min(b).min(c).min(d);
    let v_max = a.max(b).max(c).max(d);
    let corr_cap = rho_x.abs().max(rho_y.abs());
    let (sac, sbd, sad, sbc) = ((a * c).sqrt(), (b * d).sqrt(), (a * d).sqrt(), (b * c).sqrt());

    let mut rep = PathBoundReport {
        coordinates: (0, 1),
        u_grid: u_grid.to_vec(),
        var_1: Vec::new(),
        var_2: Vec::new(),
        corr: Vec::new(),
        v_min,
        v_max,
        corr_cap,
        var_ok: Vec::new(),
        corr_ok: Vec::new(),
        max_identity_residual: 0.0,
    };
    for &t in u_grid {
        let w1 = t * a + (1.0 - t) * b;
        let w2 = t * c + (1.0 - t) * d;
        let denom = w1 * w2;
        let corr = (t * rho_x * sac + (1.0 - t) * rho_y * sbd) / denom.sqrt();
        let lhs = 1.0 - (t * sac + (1.0 - t) * sbd).powi(2) / denom;
        let rhs = t * (1.0 - t) * (sad - sbc).powi(2) / denom;
        rep.max_identity_residual = rep.max_identity_residual.max((lhs - rhs).abs());
        let in_range = |w: f64| w >= v_min - PATH_SLACK * v_max && w <= v_max * (1.0 + PATH_SLACK);
        rep.var_ok.push(in_range(w1) && in_range(w2));
        rep.corr_ok.push(corr.abs() <= corr_cap + PATH_SLACK);
        rep.var_1.push(w1);
        rep.var_2.push(w2);
        rep.corr.push(corr);
    }
    Ok(rep)
}

/// [`lemma3_check`] on the 2-d marginal `(i, j)` of a larger pair.
pub fn lemma3_check_slice(pair: &GaussianPair, i: usize, j: usize, u_grid: &[f64]) -> Result<PathBoundReport> {
    let sub = GaussianPair::new(pair.sigma_x().slice2(i, j)?, pair.sigma_y().slice2(i, j)?)?;
    let mut rep = lemma3_check(&sub, u_grid)?;
    rep.coordinates = (i, j);
    Ok(rep)
}
