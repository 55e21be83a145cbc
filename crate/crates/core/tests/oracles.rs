use std::f64::consts::{FRAC_2_PI, PI};

use supmax_core::gaussian::{CovarianceMatrix, GaussianPair};
use supmax_core::harness::{gen_psd, gen_strong_pair, Family, InstanceSpec};
use supmax_core::interpolation::{derivative_terms, gi_check, interior_grid, GiProbe, SmoothMaxParams};
use supmax_core::lemma_integrals::{decay_check, decorrelate, geometric_grid, ratio_moment_1};
use supmax_core::moments::{abs_normal_moment, compare, corollary_bound_check, sample_max_abs, Verdict};
use supmax_core::quadrature::{gaussian_expectation_2d, QuadOptions};
use supmax_core::Error;

fn cov(rows: &[&[f64]]) -> CovarianceMatrix {
    CovarianceMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
}

#[test]
fn estimate_matches_closed_form_for_two_independent_normals() {
    // E[max(X₁², X₂²)] = 1 + 2/π for independent standard normals.
    let est = sample_max_abs(&CovarianceMatrix::identity(2), 1_000_000, 7, 2.0).unwrap();
    let exact = 1.0 + 2.0 / PI;
    assert!((est.value - exact).abs() < 4.0 * est.std_error, "{est:?}");
    let quad = gaussian_expectation_2d([[1.0, 0.0], [0.0, 1.0]], |x, y| x.abs().max(y.abs()).powi(2), true, QuadOptions::default()).unwrap();
    assert!((quad.value - exact).abs() < 1e-9);
}

#[test]
fn one_dimensional_estimate_matches_abs_moment() {
    for m in [1.0, 2.5, 4.0] {
        let est = sample_max_abs(&CovarianceMatrix::diagonal(&[2.0]).unwrap(), 200_000, 3, m).unwrap();
        let exact = 2f64.powf(m / 2.0) * abs_normal_moment(m).unwrap();
        assert!((est.value - exact).abs() < 4.0 * est.std_error, "m {m}: {} vs {exact}", est.value);
    }
}

#[test]
fn bivariate_estimates_match_quadrature() {
    for seed in 0..10 {
        let c = gen_psd(2, 1.5, seed);
        let m = 1.0 + (seed % 4) as f64;
        let exact = gaussian_expectation_2d(
            [[c.get(0, 0), c.get(0, 1)], [c.get(1, 0), c.get(1, 1)]],
            |x, y| x.abs().max(y.abs()).powf(m),
            true,
            QuadOptions::default(),
        )
        .unwrap()
        .value;
        let est = sample_max_abs(&c, 200_000, seed + 100, m).unwrap();
        assert!((est.value - exact).abs() < 4.0 * est.std_error, "seed {seed}: {} vs {exact}", est.value);
    }
}

#[test]
fn corollary_example_pair() {
    let pair = GaussianPair::new(cov(&[&[1.0, 0.9], &[0.9, 1.0]]), cov(&[&[1.5, 1.0], &[1.0, 1.5]])).unwrap();
    let v = compare(&pair, 2.0, 200_000, 5).unwrap();
    assert_eq!(v.verdict, Verdict::Consistent);
    let c = corollary_bound_check(&pair, 2.0, 200_000, 5).unwrap();
    assert!(c.constant_factor_applies);
    assert_eq!(c.worst_verdict(), Verdict::Consistent);
    let v = compare(&pair.swapped(), 2.0, 200_000, 5).unwrap();
    assert_eq!(v.verdict, Verdict::Violation);
}

#[test]
fn derivative_terms_on_strong_pairs() {
    for seed in 0..4 {
        let spec = InstanceSpec {
            k: 3,
            family: Family::StrongPair,
            scale: 1.0,
            seed,
            slack_factor: 1.0,
        };
        let pair = gen_strong_pair(&spec).unwrap();
        for p in [2, 4, 16] {
            let s = SmoothMaxParams::new(p, 2.0, 3).unwrap();
            let t = derivative_terms(&pair, &s, 0.5, 20_000, seed).unwrap();
            assert_eq!(t.positive_z2, 0);
            assert_eq!(t.positive_z3_minus, 0);
            assert!(t.max_decomposition_residual < 1e-9);
        }
    }
    let sf_only = GaussianPair::new(CovarianceMatrix::identity(2), cov(&[&[1.0, 0.5], &[0.5, 1.0]])).unwrap();
    let s = SmoothMaxParams::new(4, 2.0, 2).unwrap();
    assert!(matches!(derivative_terms(&sf_only, &s, 0.5, 2_000, 1), Err(Error::StrongConditionViolated { .. })));
}

#[test]
fn gi_quadratic_probe_recovers_covariance_difference() {
    let pair = GaussianPair::new(cov(&[&[2.0, 0.3], &[0.3, 1.0]]), cov(&[&[1.0, -0.2], &[-0.2, 1.5]])).unwrap();
    let r = gi_check(&pair, GiProbe::Quadratic { i: 0, j: 1 }, &interior_grid(9), 100_000, 11).unwrap();
    assert_eq!(r.closed_form, Some(0.5));
    for (rhs, lhs) in r.rhs_gi.iter().zip(&r.lhs_fd) {
        assert!((rhs - 0.5).abs() < 1e-15);
        assert!((lhs - 0.5).abs() < 0.05);
    }
    assert!(r.passed());
}

#[test]
fn decay_on_independent_unit_pair() {
    let b = decorrelate(1.0, 1.0, 0.0).unwrap();
    let r = decay_check(&b, 2.0, &geometric_grid(4.0, 512.0)).unwrap();
    assert!(r.bounded());
    assert!((-1.15..=-0.85).contains(&r.fitted_slope_1));
    assert!((-2.2..=-1.8).contains(&r.fitted_slope_2));
    let last = *r.scaled_1.last().unwrap();
    assert!((last - FRAC_2_PI).abs() < 0.01);
    assert!((ratio_moment_1(&b, 2.0, 2.0).unwrap() - FRAC_2_PI * std::f64::consts::LN_2).abs() < 1e-8);
}
