//! Comparison inequalities for moments of the maximum absolute value of
//! Gaussian vectors, with Monte Carlo and quadrature checks.

pub mod conditions;
pub mod error;
pub mod gaussian;
pub mod harness;
pub mod interpolation;
pub mod lemma_integrals;
pub mod moments;
pub mod quadrature;
pub mod rng;

pub use conditions::{augment, check_sf_condition, check_strong_condition, AugmentedPair, DeltaReport};
pub use error::{Error, Result};
pub use gaussian::{regularize, regularize_until_pd, CovarianceMatrix, GaussianPair, RegularizationParams};
pub use moments::{compare, corollary_bound_check, sample_max_abs, ComparisonVerdict, CorollaryVerdict, MomentEstimate, Verdict};
