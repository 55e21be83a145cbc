//! Ratio moments of a correlated bivariate Gaussian and their decay in `p`.
//!
//! For `(X₁, Y₁)` centered Gaussian with `|Corr| < 1`, write `hi = max(|X₁|,|Y₁|)`
//! and `t = min(|X₁|,|Y₁|)/hi`. The two expectations
//!
//! ```text
//! R₁(p) = E[hi^{m-2} t^{p-1}]           ≤ C/p
//! R₂(p) = E[hi^{m-2} t^{p-2} (1 - t)]   ≤ C/(p(p-1))
//! ```
//!
//! are computed with the adaptive polar quadrature of [`crate::quadrature`],
//! and [`decay_check`] measures their log-log slopes over a geometric `p` grid.
//! The constant `C` scales like
//! `max(Var X₁, Var Y₁)^{m/2} / sqrt(Var X₁ Var Y₁ (1 - Corr²))`; only the
//! structural factor is known, so the leading constant is reported as a fitted
//! number.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::quadrature::{gaussian_expectation_2d, integrate_2d, QuadOptions, QuadResult, Rect};

pub const DEGENERATE_CORR: f64 = 1.0 - 1e-12;
pub const BOUNDEDNESS_FACTOR: f64 = 1.5;

/// `(X₁, Y₁) =_d (X, cX + Y)` with `X ⟂ Y`, normalized so `Var X₁ ≥ Var Y₁`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BivariatePair {
    pub var_x: f64,
    pub var_y: f64,
    pub corr: f64,
    /// `Cov(X₁, Y₁) / Var(X₁)`.
    pub c: f64,
    /// `1 / (2 Var X)`.
    pub c1: f64,
    /// `1 / (2 Var Y)` with `Var Y = Var(Y₁)(1 - corr²)`.
    pub c2: f64,
    pub c3: f64,
    /// The inputs were given with `var_y > var_x` and have been exchanged.
    pub swapped: bool,
}

impl BivariatePair {
    pub fn covariance(&self) -> [[f64; 2]; 2] {
        let cov = self.corr * (self.var_x * self.var_y).sqrt();
        [[self.var_x, cov], [cov, self.var_y]]
    }

    /// `max(Var)^{m/2} / sqrt(Var X₁ Var Y₁ (1 - corr²))`.
    pub fn constant_ratio(&self, m: f64) -> f64 {
        self.var_x.max(self.var_y).powf(0.5 * m)
            / (self.var_x * self.var_y * (1.0 - self.corr * self.corr)).sqrt()
    }

    /// `c₁x² + c₂y² ≥ c₃(cx + y)²`.
    pub fn density_dominates(&self, x: f64, y: f64) -> bool {
        let lhs = self.c1 * x * x + self.c2 * y * y;
        let rhs = self.c3 * (self.c * x + y).powi(2);
        lhs >= rhs * (1.0 - 1e-12)
    }
}

pub fn decorrelate(var_x: f64, var_y: f64, corr: f64) -> Result<BivariatePair> {
    if !(var_x > 0.0 && var_y > 0.0 && var_x.is_finite() && var_y.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "variances must be positive and finite, got {var_x}, {var_y}"
        )));
    }
    if !corr.is_finite() || corr.abs() >= DEGENERATE_CORR {
        return Err(Error::DegenerateCorrelation(corr));
    }
    let swapped = var_y > var_x;
    let (vx, vy) = if swapped { (var_y, var_x) } else { (var_x, var_y) };
    let c = corr * (vy / vx).sqrt();
    let var_indep = vy * (1.0 - corr * corr);
    let c1 = 1.0 / (2.0 * vx);
    let c2 = 1.0 / (2.0 * var_indep);
    let c3 = if c == 0.0 { c2 / 4.0 } else { 0.25 * (c1 / (c * c)).min(c2) };
    Ok(BivariatePair {
        var_x: vx,
        var_y: vy,
        corr,
        c,
        c1,
        c2,
        c3,
        swapped,
    })
}

fn check_order(m: f64, p: f64, p_min: f64) -> Result<()> {
    if !(m > 0.0 && m.is_finite()) {
        return Err(Error::InvalidParameter(format!("m must be positive, got {m}")));
    }
    if !(p > p_min && p.is_finite()) {
        return Err(Error::InvalidParameter(format!("p must exceed {p_min}, got {p}")));
    }
    Ok(())
}

#[inline]
fn hi_lo(x: f64, y: f64) -> (f64, f64) {
    let (ax, ay) = (x.abs(), y.abs());
    if ax >= ay {
        (ax, ay)
    } else {
        (ay, ax)
    }
}

/// `hi^{m-2} t^{p-1}` with `t = lo/hi`.
pub fn ratio_integrand_1(x: f64, y: f64, m: f64, p: f64) -> f64 {
    let (hi, lo) = hi_lo(x, y);
    if hi == 0.0 || lo == 0.0 {
        return 0.0;
    }
    let t = lo / hi;
    ((m - 2.0) * hi.ln() + (p - 1.0) * t.ln()).exp()
}

/// `hi^{m-2} t^{p-2} (1 - t)`.
pub fn ratio_integrand_2(x: f64, y: f64, m: f64, p: f64) -> f64 {
    let (hi, lo) = hi_lo(x, y);
    if hi == 0.0 || lo == 0.0 {
        return 0.0;
    }
    let t = lo / hi;
    ((m - 2.0) * hi.ln() + (p - 2.0) * t.ln()).exp() * (1.0 - t)
}

pub fn ratio_moment_1_detailed(b: &BivariatePair, m: f64, p: f64) -> Result<QuadResult> {
    check_order(m, p, 1.0)?;
    gaussian_expectation_2d(b.covariance(), |x, y| ratio_integrand_1(x, y, m, p), true, QuadOptions::default())
}

pub fn ratio_moment_2_detailed(b: &BivariatePair, m: f64, p: f64) -> Result<QuadResult> {
    check_order(m, p, 2.0)?;
    gaussian_expectation_2d(b.covariance(), |x, y| ratio_integrand_2(x, y, m, p), true, QuadOptions::default())
}

/// `E[hi^{m-2} (lo/hi)^{p-1}]`.
pub fn ratio_moment_1(b: &BivariatePair, m: f64, p: f64) -> Result<f64> {
    Ok(ratio_moment_1_detailed(b, m, p)?.value)
}

/// `E[hi^{m-2} (lo/hi)^{p-2} (1 - lo/hi)]`.
pub fn ratio_moment_2(b: &BivariatePair, m: f64, p: f64) -> Result<f64> {
    Ok(ratio_moment_2_detailed(b, m, p)?.value)
}

/// `(1/2) Γ(m/2)`, so that `∫₀^∞ x^{m-1} e^{-a x²} dx = c(m) / a^{m/2}`.
pub fn gamma_half_constant(m: f64) -> f64 {
    0.5 * gamma(0.5 * m)
}

/// The `S_x` piece of the first ratio integral with the `y` density dropped:
/// `∫_{x>0, |cx+y| ≤ x} x^{m-2} (|cx+y|/x)^{p-1} e^{-c₁x²} dx dy`.
///
/// The wedge `|cx+y| ≤ x` is `θ ∈ [atan(-1-c), atan(1-c)]` in polar form.
pub fn sx_partial_integral(b: &BivariatePair, m: f64, p: f64) -> Result<QuadResult> {
    check_order(m, p, 1.0)?;
    let (lo, hi) = ((-1.0 - b.c).atan(), (1.0 - b.c).atan());
    let cos_min = lo.cos().min(hi.cos());
    // e^{-c₁ r² cos²θ} ≤ e^{-40} beyond this radius.
    let radius = (40.0 / (b.c1 * cos_min * cos_min)).sqrt();
    let (c, c1) = (b.c, b.c1);
    let f = |r: f64, theta: f64| {
        let (s, co) = theta.sin_cos();
        let (x, y) = (r * co, r * s);
        let t = ((c * x + y) / x).abs().min(1.0);
        if t == 0.0 {
            return 0.0;
        }
        ((m - 2.0) * x.ln() + (p - 1.0) * t.ln() - c1 * x * x).exp() * r
    };
    let mid = (-b.c).atan();
    let rects: Vec<Rect> = [lo, mid, hi]
        .windows(2)
        .flat_map(|w| {
            [0.0, 0.25, 0.5, 1.0]
                .windows(2)
                .map(move |s| Rect::new(s[0] * radius, s[1] * radius, w[0], w[1]))
        })
        .collect();
    integrate_2d(f, &rects, QuadOptions::default())
}

/// `2 c(m) / (p c₁^{m/2})`.
pub fn sx_partial_closed_form(b: &BivariatePair, m: f64, p: f64) -> f64 {
    2.0 * gamma_half_constant(m) / (p * b.c1.powf(0.5 * m))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    pub pair: BivariatePair,
    pub m: f64,
    pub p_grid: Vec<f64>,
    pub values_1: Vec<f64>,
    pub values_2: Vec<f64>,
    pub rel_error_1: Vec<f64>,
    pub rel_error_2: Vec<f64>,
    /// `p R₁(p)`.
    pub scaled_1: Vec<f64>,
    /// `p (p-1) R₂(p)`.
    pub scaled_2: Vec<f64>,
    pub fitted_slope_1: f64,
    pub fitted_slope_2: f64,
    /// `max(Var)^{m/2} / sqrt(Var X₁ Var Y₁ (1 - corr²))`.
    pub constant_ratio: f64,
    /// `max_p max(scaled_1, scaled_2) / constant_ratio`: the smallest leading
    /// constant consistent with this grid.
    pub fitted_constant: f64,
    pub bounded_1: bool,
    pub bounded_2: bool,
}

impl DecayReport {
    pub fn bounded(&self) -> bool {
        self.bounded_1 && self.bounded_2
    }
}

/// Least-squares slope of `ys` against `xs`.
pub fn ls_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Doubling grid `p_min, 2 p_min, …` up to `p_max`.
pub fn geometric_grid(p_min: f64, p_max: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut p = p_min;
    while p <= p_max * (1.0 + 1e-12) {
        out.push(p);
        p *= 2.0;
    }
    out
}

fn validate_grid(p_grid: &[f64]) -> Result<()> {
    if p_grid.len() < 4 {
        return Err(Error::InvalidParameter("p grid needs at least 4 points".into()));
    }
    if p_grid.iter().any(|&p| !(4.0..=512.0).contains(&p)) {
        return Err(Error::InvalidParameter("p grid must lie in [4, 512]".into()));
    }
    let ratio = p_grid[1] / p_grid[0];
    if !(ratio > 1.0) || p_grid.windows(2).any(|w| ((w[1] / w[0]) / ratio - 1.0).abs() > 1e-9) {
        return Err(Error::InvalidParameter("p grid must be increasing and geometrically spaced".into()));
    }
    Ok(())
}

pub fn decay_check(b: &BivariatePair, m: f64, p_grid: &[f64]) -> Result<DecayReport> {
    validate_grid(p_grid)?;
    let mut values_1 = Vec::with_capacity(p_grid.len());
    let mut values_2 = Vec::with_capacity(p_grid.len());
    let mut rel_error_1 = Vec::with_capacity(p_grid.len());
    let mut rel_error_2 = Vec::with_capacity(p_grid.len());
    for &p in p_grid {
        let r1 = ratio_moment_1_detailed(b, m, p)?;
        let r2 = ratio_moment_2_detailed(b, m, p)?;
        values_1.push(r1.value);
        values_2.push(r2.value);
        rel_error_1.push(r1.relative_error());
        rel_error_2.push(r2.relative_error());
    }
    let scaled_1: Vec<f64> = p_grid.iter().zip(&values_1).map(|(p, v)| p * v).collect();
    let scaled_2: Vec<f64> = p_grid.iter().zip(&values_2).map(|(p, v)| p * (p - 1.0) * v).collect();
    let logp: Vec<f64> = p_grid.iter().map(|p| p.ln()).collect();
    let log_v = |v: &[f64]| v.iter().map(|x| x.ln()).collect::<Vec<_>>();
    let fitted_slope_1 = ls_slope(&logp, &log_v(&values_1));
    let fitted_slope_2 = ls_slope(&logp, &log_v(&values_2));
    let constant_ratio = b.constant_ratio(m);
    let fitted_constant = scaled_1
        .iter()
        .chain(&scaled_2)
        .fold(0.0_f64, |acc, v| acc.max(*v))
        / constant_ratio;
    let bounded = |s: &[f64]| s.iter().all(|v| *v <= BOUNDEDNESS_FACTOR * s[0]);
    Ok(DecayReport {
        pair: *b,
        m,
        p_grid: p_grid.to_vec(),
        bounded_1: bounded(&scaled_1),
        bounded_2: bounded(&scaled_2),
        values_1,
        values_2,
        rel_error_1,
        rel_error_2,
        scaled_1,
        scaled_2,
        fitted_slope_1,
        fitted_slope_2,
        constant_ratio,
        fitted_constant,
    })
}
