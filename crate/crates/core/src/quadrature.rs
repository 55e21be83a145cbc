//! Adaptive two-dimensional quadrature.
//!
//! Each rectangular panel is integrated with the tensor-product 15-point
//! Gauss–Kronrod rule; the embedded 7-point Gauss rule gives per-axis error
//! estimates. The panel with the largest error is bisected along its worse
//! axis until the summed error estimate meets the tolerance. Panel values are
//! summed pairwise in creation order, so results are fully deterministic.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::rng::pairwise_reduce;

// 15-point Kronrod abscissae on [0, 1) (symmetric), last is the center.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
// 7-point Gauss weights for the odd-indexed Kronrod nodes.
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Nodes and weights on [-1, 1]: (node, kronrod weight, gauss weight or 0).
fn rule() -> [(f64, f64, f64); 15] {
    let mut out = [(0.0, 0.0, 0.0); 15];
    for i in 0..7 {
        let wg = if i % 2 == 1 { WG[i / 2] } else { 0.0 };
        out[i] = (-XGK[i], WGK[i], wg);
        out[14 - i] = (XGK[i], WGK[i], wg);
    }
    out[7] = (0.0, WGK[7], WG[3]);
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        Self { x0, x1, y0, y1 }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_evals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-9,
            abs_tol: 1e-300,
            max_evals: 10_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error_estimate: f64,
    pub evaluations: usize,
    pub panels: usize,
}

impl QuadResult {
    pub fn relative_error(&self) -> f64 {
        if self.value == 0.0 {
            self.error_estimate
        } else {
            self.error_estimate / self.value.abs()
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    rect: Rect,
    value: f64,
    error: f64,
    split_x: bool,
    id: usize,
}

struct ByError(Panel);

impl PartialEq for ByError {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for ByError {}
impl PartialOrd for ByError {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for ByError {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0
            .error
            .total_cmp(&other.0.error)
            .then_with(|| other.0.id.cmp(&self.0.id))
    }
}

const EVALS_PER_PANEL: usize = 225;

fn integrate_panel<F: Fn(f64, f64) -> f64>(f: &F, rect: Rect, nodes: &[(f64, f64, f64); 15], id: usize) -> Panel {
    let (cx, hx) = (0.5 * (rect.x0 + rect.x1), 0.5 * (rect.x1 - rect.x0));
    let (cy, hy) = (0.5 * (rect.y0 + rect.y1), 0.5 * (rect.y1 - rect.y0));
    // kk: Kronrod x Kronrod, gk: Gauss in x, kg: Gauss in y.
    let (mut kk, mut gk, mut kg) = (0.0, 0.0, 0.0);
    for &(u, wkx, wgx) in nodes {
        let x = cx + hx * u;
        let (mut row_k, mut row_g) = (0.0, 0.0);
        for &(v, wky, wgy) in nodes {
            let val = f(x, cy + hy * v);
            row_k += wky * val;
            row_g += wgy * val;
        }
        kk += wkx * row_k;
        gk += wgx * row_k;
        kg += wkx * row_g;
    }
    let area = hx * hy;
    let (kk, gk, kg) = (kk * area, gk * area, kg * area);
    let (ex, ey) = ((kk - gk).abs(), (kk - kg).abs());
    Panel {
        rect,
        value: kk,
        error: ex + ey,
        split_x: ex >= ey,
        id,
    }
}

/// Integrates `f` over the union of `rects` (assumed non-overlapping).
pub fn integrate_2d<F>(f: F, rects: &[Rect], opts: QuadOptions) -> Result<QuadResult>
where
    F: Fn(f64, f64) -> f64,
{
    let nodes = rule();
    let mut next_id = 0;
    let mut heap = BinaryHeap::new();
    let mut finished: Vec<Panel> = Vec::new();
    let mut evaluations = 0;
    let (mut total, mut total_err) = (0.0, 0.0);
    for &r in rects {
        let p = integrate_panel(&f, r, &nodes, next_id);
        next_id += 1;
        evaluations += EVALS_PER_PANEL;
        total += p.value;
        total_err += p.error;
        heap.push(ByError(p));
    }
    loop {
        let target = opts.abs_tol.max(opts.rel_tol * total.abs());
        if total_err <= target || heap.is_empty() {
            break;
        }
        if evaluations + 2 * EVALS_PER_PANEL > opts.max_evals {
            return Err(Error::QuadratureNonconvergence {
                evaluations,
                error_estimate: total_err,
            });
        }
        let ByError(worst) = heap.pop().expect("heap is non-empty");
        let r = worst.rect;
        let halves = if worst.split_x {
            let mid = 0.5 * (r.x0 + r.x1);
            [Rect::new(r.x0, mid, r.y0, r.y1), Rect::new(mid, r.x1, r.y0, r.y1)]
        } else {
            let mid = 0.5 * (r.y0 + r.y1);
            [Rect::new(r.x0, r.x1, r.y0, mid), Rect::new(r.x0, r.x1, mid, r.y1)]
        };
        // Panels too small to split further are retired as-is.
        if halves.iter().any(|h| h.x1 <= h.x0 || h.y1 <= h.y0) {
            finished.push(worst);
            continue;
        }
        total -= worst.value;
        total_err -= worst.error;
        for h in halves {
            let p = integrate_panel(&f, h, &nodes, next_id);
            next_id += 1;
            evaluations += EVALS_PER_PANEL;
            total += p.value;
            total_err += p.error;
            heap.push(ByError(p));
        }
    }
    finished.extend(heap.into_iter().map(|b| b.0));
    finished.sort_by_key(|p| p.id);
    let values: Vec<f64> = finished.iter().map(|p| p.value).collect();
    let errors: Vec<f64> = finished.iter().map(|p| p.error).collect();
    let sum = |v: &[f64]| pairwise_reduce(v, &|a: &f64, b: &f64| a + b).unwrap_or(0.0);
    Ok(QuadResult {
        value: sum(&values),
        error_estimate: sum(&errors),
        evaluations,
        panels: finished.len(),
    })
}

/// Angles where piecewise integrands in `(x, y)` typically have kinks: the
/// axes and the diagonals `|x| = |y|`.
pub fn kink_angles(upper: f64) -> Vec<f64> {
    let step = std::f64::consts::FRAC_PI_4;
    let mut out: Vec<f64> = (0..).map(|i| i as f64 * step).take_while(|&a| a < upper - 1e-15).collect();
    out.push(upper);
    out
}

/// Radius of the integration disc in whitened coordinates; the neglected
/// mass is `e^{-R²/2}`.
pub const WHITENED_RADIUS: f64 = 10.0;

/// `E[g(W)]` for `W ~ N(0, Σ)` in two dimensions.
///
/// Integrates over `w = L⁻¹ W` (with `Σ = L Lᵀ`) in polar coordinates, where
/// the density is isotropic however ill-conditioned `Σ` is. Angular breaks sit
/// at the images of the axes and the diagonals `|x| = |y|`, where piecewise
/// integrands such as `max(|x|, |y|)` have kinks.
///
/// With `even = true`, `g(-w) = g(w)` is assumed and only half the plane is
/// integrated (then doubled).
pub fn gaussian_expectation_2d<G>(cov: [[f64; 2]; 2], g: G, even: bool, opts: QuadOptions) -> Result<QuadResult>
where
    G: Fn(f64, f64) -> f64,
{
    let [[a, b], [_, d]] = cov;
    let det = a * d - b * b;
    if !(a > 0.0 && d > 0.0 && det > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "bivariate covariance must be positive definite, got [[{a}, {b}], [{b}, {d}]]"
        )));
    }
    let l11 = a.sqrt();
    let l21 = b / l11;
    let l22 = (det / a).sqrt();

    let pi = std::f64::consts::PI;
    let upper = if even { pi } else { 2.0 * pi };
    let mut angles = kink_angles(upper);
    for (vx, vy) in [(1.0, 0.0), (0.0, 1.0), (1.0, 1.0), (1.0, -1.0)] {
        let (wx, wy) = (vx / l11, (vy - l21 * vx / l11) / l22);
        let base = wy.atan2(wx).rem_euclid(pi);
        for t in [base, base + pi] {
            if t > 0.0 && t < upper {
                angles.push(t);
            }
        }
    }
    angles.sort_by(f64::total_cmp);
    angles.dedup_by(|x, y| (*x - *y).abs() < 1e-12);

    let radial_breaks = [0.0, 1.0, 2.0, 4.0, 6.0, WHITENED_RADIUS];
    let mut rects = Vec::new();
    for w in angles.windows(2) {
        for r in radial_breaks.windows(2) {
            rects.push(Rect::new(r[0], r[1], w[0], w[1]));
        }
    }
    let norm = 1.0 / (2.0 * pi);
    let integrand = |r: f64, theta: f64| {
        let (s, c) = theta.sin_cos();
        let (u, v) = (r * c, r * s);
        let (x, y) = (l11 * u, l21 * u + l22 * v);
        g(x, y) * norm * (-0.5 * r * r).exp() * r
    };
    let mut res = integrate_2d(integrand, &rects, opts)?;
    if even {
        res.value *= 2.0;
        res.error_estimate *= 2.0;
    }
    Ok(res)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exact() {
        let r = integrate_2d(|x, y| x * x * y + 3.0 * y * y, &[Rect::new(0.0, 2.0, -1.0, 1.0)], QuadOptions::default()).unwrap();
        // ∫0^2∫-1^1 x²y dy dx = 0; ∫0^2∫-1^1 3y² = 2*2 = 4
        assert!((r.value - 4.0).abs() < 1e-13);
        assert_eq!(r.panels, 1);
    }

    #[test]
    fn kinked_integrand_converges() {
        let r = integrate_2d(|x, y| (x - y).abs(), &[Rect::new(0.0, 1.0, 0.0, 1.0)], QuadOptions::default()).unwrap();
        assert!((r.value - 1.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn budget_exhaustion_is_reported() {
        let opts = QuadOptions {
            rel_tol: 1e-15,
            abs_tol: 0.0,
            max_evals: 2_000,
        };
        let e = integrate_2d(|x, y| (x - y).abs().sqrt(), &[Rect::new(0.0, 1.0, 0.0, 1.0)], opts);
        assert!(matches!(e, Err(Error::QuadratureNonconvergence { .. })));
    }

    #[test]
    fn ill_conditioned_covariance() {
        let cov = [[0.0039368183130061496, 0.027833553881706066], [0.027833553881706066, 0.19681907678369628]];
        let opts = QuadOptions::default();
        for (g, exact) in [
            (Box::new(|x: f64, _: f64| x * x) as Box<dyn Fn(f64, f64) -> f64>, cov[0][0]),
            (Box::new(|_: f64, y: f64| y * y), cov[1][1]),
            (Box::new(|x: f64, y: f64| x * y), cov[0][1]),
        ] {
            let r = gaussian_expectation_2d(cov, g, true, opts).unwrap();
            assert!((r.value - exact).abs() < 1e-9 * exact.abs(), "{} vs {exact}", r.value);
        }
    }

    #[test]
    fn gaussian_normalization_and_second_moments() {
        let cov = [[2.0, 0.6], [0.6, 0.5]];
        let opts = QuadOptions::default();
        let one = gaussian_expectation_2d(cov, |_, _| 1.0, true, opts).unwrap();
        assert!((one.value - 1.0).abs() < 1e-9);
        let xy = gaussian_expectation_2d(cov, |x, y| x * y, true, opts).unwrap();
        assert!((xy.value - 0.6).abs() < 1e-9);
        let xx = gaussian_expectation_2d(cov, |x, _| x * x, false, opts).unwrap();
        assert!((xx.value - 2.0).abs() < 1e-9 * 2.0);
    }

    #[test]
    fn half_plane_symmetry_reduction() {
        let cov = [[1.0, -0.3], [-0.3, 3.0]];
        let g = |x: f64, y: f64| x.abs().max(y.abs()).powf(1.7);
        let opts = QuadOptions::default();
        let half = gaussian_expectation_2d(cov, g, true, opts).unwrap();
        let full = gaussian_expectation_2d(cov, g, false, opts).unwrap();
        assert!((half.value - full.value).abs() < 1e-9 * full.value);
    }

    #[test]
    fn rejects_singular_covariance() {
        assert!(gaussian_expectation_2d([[1.0, 1.0], [1.0, 1.0]], |_, _| 1.0, true, QuadOptions::default()).is_err());
    }
}
