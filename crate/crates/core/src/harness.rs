//! Random instance generators and end-to-end verification suites.
//!
//! Every instance gets its own seed `mix_seed(config.seed, index)`, and
//! instances are processed in parallel but reported in index order, so a
//! report depends only on the configuration.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conditions::{check_sf_condition, check_strong_condition};
use crate::error::{Error, Result};
use crate::gaussian::{CovarianceMatrix, GaussianPair};
use crate::interpolation::{lemma3_check_slice, sandwich_check, SmoothMaxParams};
use crate::moments::{compare_orders, corollary_orders, Verdict, DEFAULT_SAMPLES};
use crate::rng::{mix_seed, stream_rng};

/// Rejections allowed before the sf-only template is widened.
pub const REJECTION_LIMIT: usize = 1000;
/// Widening rounds before [`Error::GenerationExhausted`].
pub const WIDENING_ROUNDS: usize = 8;
/// Swapped-pair gaps larger than this many standard errors must be flagged.
pub const POWER_Z: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// `Δ` diagonally dominant: satisfies the strengthened condition.
    StrongPair,
    /// Satisfies Sudakov–Fernique but not the strengthened condition.
    SfOnlyPair,
    /// Two independent random covariances.
    RandomPsd,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InstanceSpec {
    pub k: usize,
    pub family: Family,
    pub scale: f64,
    pub seed: u64,
    /// Diagonal-dominance margin for `Δ` (`≥ 1`).
    pub slack_factor: f64,
}

impl InstanceSpec {
    fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::Dimension("k must be positive".into()));
        }
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(Error::InvalidParameter(format!("scale must be positive, got {}", self.scale)));
        }
        if !(self.slack_factor >= 1.0 && self.slack_factor.is_finite()) {
            return Err(Error::InvalidParameter(format!("slack_factor must be >= 1, got {}", self.slack_factor)));
        }
        Ok(())
    }
}

/// `G Gᵀ · scale / k` with `G` a `k × k` matrix of standard normals.
pub fn gen_psd(k: usize, scale: f64, seed: u64) -> CovarianceMatrix {
    let mut rng = stream_rng(seed, 0);
    let g: Vec<f64> = (0..k * k).map(|_| rng.sample(rand_distr::StandardNormal)).collect();
    let mut data = vec![0.0; k * k];
    for i in 0..k {
        for j in 0..k {
            let dot: f64 = (0..k).map(|l| g[i * k + l] * g[j * k + l]).sum();
            data[i * k + j] = dot * scale / k as f64;
        }
    }
    CovarianceMatrix::new(k, data).expect("Gram matrices are valid covariances")
}

/// `Δ = S + D` with `D_ii = slack · Σ_j |S_ij|`; `s` is symmetric row-major and
/// its diagonal is ignored.
pub fn dominant_delta(k: usize, s: &[f64], slack: f64) -> Vec<f64> {
    let mut delta = vec![0.0; k * k];
    for i in 0..k {
        let mut row = 0.0;
        for j in 0..k {
            if i != j {
                delta[i * k + j] = s[i * k + j];
                row += s[i * k + j].abs();
            }
        }
        delta[i * k + i] = slack * row;
    }
    delta
}

fn add_entries(c: &CovarianceMatrix, d: &[f64]) -> Result<CovarianceMatrix> {
    let data = c.entries().iter().zip(d).map(|(a, b)| a + b).collect();
    CovarianceMatrix::new(c.k(), data)
}

pub fn gen_strong_pair(spec: &InstanceSpec) -> Result<GaussianPair> {
    spec.validate()?;
    let k = spec.k;
    let x = gen_psd(k, spec.scale, spec.seed);
    let mut rng = stream_rng(spec.seed, 1);
    let mut s = vec![0.0; k * k];
    for i in 0..k {
        for j in (i + 1)..k {
            let v = spec.scale * rng.gen_range(-0.5..0.5);
            s[i * k + j] = v;
            s[j * k + i] = v;
        }
    }
    let y = add_entries(&x, &dominant_delta(k, &s, spec.slack_factor))?;
    let pair = GaussianPair::new(x, y)?;
    let report = check_strong_condition(&pair)?;
    if !report.strong_holds() {
        return Err(Error::StrongConditionViolated {
            pairs: report.strong_failures,
        });
    }
    Ok(pair)
}

/// `Σ^X = A + τJ`, `Σ^Y = A + tI + diag(γ)`: increments of `Y` exceed those of
/// `X` by `2t + γ_i + γ_j`, while `Δ_ij = -τ` off the diagonal. Draws are
/// rejected until the strengthened condition fails.
pub fn gen_sf_only_pair(spec: &InstanceSpec) -> Result<GaussianPair> {
    spec.validate()?;
    let k = spec.k;
    let a = gen_psd(k, spec.scale, spec.seed);
    let mut rng = stream_rng(spec.seed, 2);
    let mut tau_range = 2.0;
    let mut attempts = 0;
    for _ in 0..WIDENING_ROUNDS {
        for _ in 0..REJECTION_LIMIT {
            attempts += 1;
            let t = spec.scale * rng.gen_range(0.05..0.5);
            let tau = t * rng.gen_range(0.0..tau_range);
            let gamma: Vec<f64> = (0..k).map(|_| spec.scale * rng.gen_range(0.0..0.2)).collect();
            let x = a.add_constant(tau)?;
            let y_diag: Vec<f64> = gamma.iter().map(|g| t + g).collect();
            let y = add_entries(&a, CovarianceMatrix::diagonal(&y_diag)?.entries())?;
            let pair = GaussianPair::new(x, y)?;
            let sf = check_sf_condition(&pair)?;
            let strong = check_strong_condition(&pair)?;
            if sf.sf_holds() && !strong.strong_holds() {
                return Ok(pair);
            }
        }
        tau_range *= 2.0;
    }
    Err(Error::GenerationExhausted(attempts))
}

pub fn gen_random_pair(spec: &InstanceSpec) -> Result<GaussianPair> {
    spec.validate()?;
    let x = gen_psd(spec.k, spec.scale, spec.seed);
    let y = gen_psd(spec.k, spec.scale, mix_seed(spec.seed, 1));
    GaussianPair::new(x, y)
}

pub fn generate(spec: &InstanceSpec) -> Result<GaussianPair> {
    match spec.family {
        Family::StrongPair => gen_strong_pair(spec),
        Family::SfOnlyPair => gen_sf_only_pair(spec),
        Family::RandomPsd => gen_random_pair(spec),
    }
}

/// Suite configuration. Every field has a default, so `{}` is a valid config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuiteConfig {
    pub seed: u64,
    /// Strong-condition pairs checked with `compare` (moment ordering).
    pub n_strong: usize,
    /// Sudakov–Fernique-only pairs checked with `corollary_bound_check`.
    pub n_sf_only: usize,
    pub k_min: usize,
    pub k_max: usize,
    pub orders: Vec<f64>,
    pub n_samples: usize,
    pub scale: f64,
    pub slack_factor: f64,
    /// Also compare each strong pair with `X` and `Y` swapped and require the
    /// large gaps to be flagged.
    pub adversarial: bool,
    /// Points of the `u` grid on `[0, 1]` for the path bounds on 2-d slices.
    pub path_grid_points: usize,
    /// Random vectors per instance for the sandwich bound.
    pub sandwich_points: usize,
    /// Even `p` values for the sandwich bound.
    pub sandwich_p: Vec<u32>,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            n_strong: 200,
            n_sf_only: 200,
            k_min: 2,
            k_max: 8,
            orders: vec![1.0, 2.0, 3.0, 4.0],
            n_samples: DEFAULT_SAMPLES,
            scale: 1.0,
            slack_factor: 1.0,
            adversarial: false,
            path_grid_points: 101,
            sandwich_points: 100,
            sandwich_p: (1..=32).map(|i| 2 * i).collect(),
        }
    }
}

impl SuiteConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k_min == 0 || self.k_max < self.k_min {
            return Err(Error::InvalidParameter(format!(
                "need 1 <= k_min <= k_max, got {}..{}",
                self.k_min, self.k_max
            )));
        }
        if self.orders.is_empty() || self.orders.iter().any(|m| !(*m >= 1.0 && m.is_finite())) {
            return Err(Error::InvalidParameter("orders must be finite reals >= 1".into()));
        }
        if self.path_grid_points < 2 {
            return Err(Error::InvalidParameter("path_grid_points must be at least 2".into()));
        }
        if self.sandwich_p.iter().any(|p| *p == 0 || p % 2 != 0) {
            return Err(Error::InvalidParameter("sandwich_p must be positive even integers".into()));
        }
        InstanceSpec {
            k: self.k_min,
            family: Family::StrongPair,
            scale: self.scale,
            seed: 0,
            slack_factor: self.slack_factor,
        }
        .validate()
    }

    pub fn n_instances(&self) -> usize {
        self.n_strong + self.n_sf_only
    }

    /// Spec of instance `index`; strong pairs come first.
    pub fn instance(&self, index: usize) -> InstanceSpec {
        let seed = mix_seed(self.seed, index as u64);
        let span = (self.k_max - self.k_min + 1) as u64;
        let k = self.k_min + (mix_seed(seed, u64::MAX) % span) as usize;
        InstanceSpec {
            k,
            family: if index < self.n_strong {
                Family::StrongPair
            } else {
                Family::SfOnlyPair
            },
            scale: self.scale,
            seed,
            slack_factor: self.slack_factor,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckName {
    /// Generated pair has its family's conditions; strong implies SF.
    Generator,
    /// No `violation` verdict for `E max|X|^m ≤ E max|Y|^m` on strong pairs.
    MomentOrder,
    /// Swapped strong pairs: gaps beyond 5 SE are flagged.
    Adversarial,
    Corollary,
    /// Constant-factor corollary, where `max Σ^X_ii ≤ max Σ^Y_ii`.
    ConstantFactor,
    PathBounds,
    Sandwich,
}

impl CheckName {
    pub fn name(self) -> &'static str {
        match self {
            CheckName::Generator => "generator",
            CheckName::MomentOrder => "moment_order",
            CheckName::Adversarial => "adversarial",
            CheckName::Corollary => "corollary",
            CheckName::ConstantFactor => "constant_factor",
            CheckName::PathBounds => "path_bounds",
            CheckName::Sandwich => "sandwich",
        }
    }
}

const CHECKS: [CheckName; 7] = [
    CheckName::Generator,
    CheckName::MomentOrder,
    CheckName::Adversarial,
    CheckName::Corollary,
    CheckName::ConstantFactor,
    CheckName::PathBounds,
    CheckName::Sandwich,
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckTally {
    pub check: CheckName,
    pub evaluated: usize,
    pub passed: usize,
    pub failed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub index: usize,
    pub spec: InstanceSpec,
    pub check: CheckName,
    pub details: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub config: SuiteConfig,
    pub n_instances: usize,
    pub checks: Vec<CheckTally>,
    /// Largest z-score among moment-ordering and corollary comparisons.
    pub worst_z: Option<f64>,
    /// `(eligible, flagged)` swapped comparisons in adversarial mode.
    pub power: Option<(usize, usize)>,
    pub failures: Vec<Failure>,
}

impl SuiteReport {
    pub fn tally(&self, check: CheckName) -> &CheckTally {
        self.checks.iter().find(|t| t.check == check).expect("every check is tallied")
    }

    pub fn all_passed(&self) -> bool {
        self.failures.is_empty()
    }

    /// Fixed-width summary table.
    pub fn summary_table(&self) -> String {
        let mut out = format!("{:<12} {:>9} {:>7} {:>7}\n", "check", "evaluated", "passed", "failed");
        for t in &self.checks {
            out += &format!("{:<12} {:>9} {:>7} {:>7}\n", t.check.name(), t.evaluated, t.passed, t.failed);
        }
        match self.worst_z {
            Some(z) => out += &format!("worst z: {z:.3}\n"),
            None => out += "worst z: n/a\n",
        }
        if let Some((eligible, flagged)) = self.power {
            out += &format!("adversarial power: {flagged}/{eligible}\n");
        }
        out
    }
}

#[derive(Default)]
struct InstanceOutcome {
    results: Vec<(CheckName, std::result::Result<(), String>)>,
    z: Vec<f64>,
    eligible: usize,
    flagged: usize,
}

impl InstanceOutcome {
    fn record(&mut self, check: CheckName, outcome: std::result::Result<(), String>) {
        self.results.push((check, outcome));
    }
}

fn run_instance(config: &SuiteConfig, spec: &InstanceSpec) -> InstanceOutcome {
    let mut out = InstanceOutcome::default();
    let pair = match generate(spec) {
        Ok(p) => p,
        Err(e) => {
            out.record(CheckName::Generator, Err(e.to_string()));
            return out;
        }
    };
    let generator = (|| -> Result<std::result::Result<(), String>> {
        let sf = check_sf_condition(&pair)?;
        let strong = check_strong_condition(&pair)?;
        if strong.strong_holds() && !sf.sf_holds() {
            return Ok(Err(format!("strong holds but SF fails at {:?}", sf.sf_failures)));
        }
        Ok(match spec.family {
            Family::StrongPair if !strong.strong_holds() => Err(format!("strong fails at {:?}", strong.strong_failures)),
            Family::SfOnlyPair if !sf.sf_holds() || strong.strong_holds() => {
                Err(format!("sf {} strong {}", sf.sf_holds(), strong.strong_holds()))
            }
            _ => Ok(()),
        })
    })();
    out.record(CheckName::Generator, generator.unwrap_or_else(|e| Err(e.to_string())));

    let mc_seed = mix_seed(spec.seed, 1);
    match spec.family {
        Family::StrongPair => {
            let verdicts = compare_orders(&pair, &config.orders, config.n_samples, mc_seed);
            let result = match &verdicts {
                Ok(verdicts) => {
                    out.z.extend(verdicts.iter().map(|v| v.z_score));
                    let bad: Vec<String> = verdicts
                        .iter()
                        .filter(|v| v.verdict == Verdict::Violation)
                        .map(|v| format!("m={} z={:.3}", v.lhs.m, v.z_score))
                        .collect();
                    if bad.is_empty() {
                        Ok(())
                    } else {
                        Err(bad.join("; "))
                    }
                }
                Err(e) => Err(e.to_string()),
            };
            out.record(CheckName::MomentOrder, result);
            if config.adversarial {
                let result = match compare_orders(&pair.swapped(), &config.orders, config.n_samples, mc_seed) {
                    Ok(verdicts) => {
                        let mut missed = Vec::new();
                        for v in &verdicts {
                            if v.z_score > POWER_Z {
                                out.eligible += 1;
                                if v.verdict == Verdict::Violation {
                                    out.flagged += 1;
                                } else {
                                    missed.push(format!("m={} z={:.3}", v.lhs.m, v.z_score));
                                }
                            }
                        }
                        if missed.is_empty() {
                            Ok(())
                        } else {
                            Err(missed.join("; "))
                        }
                    }
                    Err(e) => Err(e.to_string()),
                };
                out.record(CheckName::Adversarial, result);
            }
        }
        Family::SfOnlyPair => match corollary_orders(&pair, &config.orders, config.n_samples, mc_seed) {
            Ok(verdicts) => {
                out.z.extend(verdicts.iter().map(|v| v.bound.z_score));
                let bad: Vec<String> = verdicts
                    .iter()
                    .filter(|v| v.bound.verdict == Verdict::Violation)
                    .map(|v| format!("m={} z={:.3}", v.bound.lhs.m, v.bound.z_score))
                    .collect();
                out.record(CheckName::Corollary, if bad.is_empty() { Ok(()) } else { Err(bad.join("; ")) });
                if verdicts.iter().any(|v| v.constant_factor_applies) {
                    let bad: Vec<String> = verdicts
                        .iter()
                        .filter_map(|v| v.constant_factor.as_ref())
                        .filter(|r| r.verdict == Verdict::Violation)
                        .map(|r| format!("m={} z={:.3}", r.lhs.m, r.z_score))
                        .collect();
                    out.record(CheckName::ConstantFactor, if bad.is_empty() { Ok(()) } else { Err(bad.join("; ")) });
                }
            }
            Err(e) => out.record(CheckName::Corollary, Err(e.to_string())),
        },
        Family::RandomPsd => {}
    }

    let grid: Vec<f64> = (0..config.path_grid_points)
        .map(|i| i as f64 / (config.path_grid_points - 1) as f64)
        .collect();
    let mut path = Ok(());
    'outer: for i in 0..spec.k {
        for j in (i + 1)..spec.k {
            match lemma3_check_slice(&pair, i, j, &grid) {
                Ok(r) if r.violations() == 0 => {}
                Ok(r) => {
                    path = Err(format!("({i},{j}): {} violations", r.violations()));
                    break 'outer;
                }
                Err(e) => {
                    path = Err(format!("({i},{j}): {e}"));
                    break 'outer;
                }
            }
        }
    }
    if spec.k >= 2 {
        out.record(CheckName::PathBounds, path);
    }

    if config.sandwich_points > 0 {
        let mut rng = stream_rng(spec.seed, 3);
        let mut bad = None;
        for _ in 0..config.sandwich_points {
            let magnitude = 10f64.powf(rng.gen_range(-3.0..3.0));
            let x: Vec<f64> = (0..spec.k).map(|_| magnitude * rng.sample::<f64, _>(rand_distr::StandardNormal)).collect();
            for &p in &config.sandwich_p {
                for &m in &config.orders {
                    let Ok(s) = SmoothMaxParams::new(p, m, spec.k) else { continue };
                    if !sandwich_check(&s, &x) {
                        bad.get_or_insert(format!("p={p} m={m} x={x:?}"));
                    }
                }
            }
        }
        out.record(CheckName::Sandwich, bad.map_or(Ok(()), Err));
    }
    out
}

pub fn run_suite(config: &SuiteConfig) -> Result<SuiteReport> {
    config.validate()?;
    let specs: Vec<InstanceSpec> = (0..config.n_instances()).map(|i| config.instance(i)).collect();
    let outcomes: Vec<InstanceOutcome> = specs.par_iter().map(|s| run_instance(config, s)).collect();

    let mut checks: Vec<CheckTally> = CHECKS
        .iter()
        .map(|&check| CheckTally {
            check,
            evaluated: 0,
            passed: 0,
            failed: 0,
        })
        .collect();
    let mut failures = Vec::new();
    let mut worst_z: Option<f64> = None;
    let (mut eligible, mut flagged) = (0, 0);
    for (index, (spec, outcome)) in specs.iter().zip(&outcomes).enumerate() {
        for (check, result) in &outcome.results {
            let tally = checks.iter_mut().find(|t| t.check == *check).expect("known check");
            tally.evaluated += 1;
            match result {
                Ok(()) => tally.passed += 1,
                Err(details) => {
                    tally.failed += 1;
                    failures.push(Failure {
                        index,
                        spec: *spec,
                        check: *check,
                        details: details.clone(),
                    });
                }
            }
        }
        for &z in &outcome.z {
            worst_z = Some(worst_z.map_or(z, |w| w.max(z)));
        }
        eligible += outcome.eligible;
        flagged += outcome.flagged;
    }
    Ok(SuiteReport {
        config: config.clone(),
        n_instances: specs.len(),
        checks,
        worst_z,
        power: config.adversarial.then_some((eligible, flagged)),
        failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(k: usize, family: Family, seed: u64) -> InstanceSpec {
        InstanceSpec {
            k,
            family,
            scale: 1.0,
            seed,
            slack_factor: 1.0,
        }
    }

    #[test]
    fn gen_psd_examples() {
        let c = gen_psd(1, 2.0, 9);
        assert!(c.get(0, 0) >= 0.0);
        assert_eq!(gen_psd(5, 1.0, 3), gen_psd(5, 1.0, 3));
        assert_ne!(gen_psd(5, 1.0, 3), gen_psd(5, 1.0, 4));
        let c = gen_psd(6, 1.0, 11);
        assert!(c.is_strictly_pd());
    }

    #[test]
    fn dominant_delta_examples() {
        assert_eq!(dominant_delta(3, &[0.0; 9], 1.0), vec![0.0; 9]);
        let d = dominant_delta(2, &[0.0, 0.1, 0.1, 0.0], 1.0);
        assert_eq!(d, vec![0.1, 0.1, 0.1, 0.1]);
        let x = CovarianceMatrix::identity(2);
        let y = add_entries(&x, &d).unwrap();
        let r = check_strong_condition(&GaussianPair::new(x, y).unwrap()).unwrap();
        assert!(r.strong_holds());
        assert!(r.slack_at(0, 1).abs() < 1e-15);
    }

    #[test]
    fn generators_are_sound() {
        for seed in 0..300 {
            let k = 1 + (seed % 8) as usize;
            let p = gen_strong_pair(&spec(k, Family::StrongPair, seed)).unwrap();
            assert!(check_strong_condition(&p).unwrap().strong_holds());
            let p = gen_sf_only_pair(&spec(k, Family::SfOnlyPair, seed)).unwrap();
            assert!(check_sf_condition(&p).unwrap().sf_holds());
            assert!(!check_strong_condition(&p).unwrap().strong_holds());
        }
    }

    #[test]
    fn sf_only_family_covers_both_constant_factor_cases() {
        let max_diag = |c: &CovarianceMatrix| c.diag().into_iter().fold(f64::MIN, f64::max);
        let applies: Vec<bool> = (0..100)
            .map(|seed| {
                let p = gen_sf_only_pair(&spec(3, Family::SfOnlyPair, seed)).unwrap();
                max_diag(p.sigma_x()) <= max_diag(p.sigma_y())
            })
            .collect();
        assert!(applies.iter().any(|a| *a));
        assert!(applies.iter().any(|a| !*a));
    }

    #[test]
    fn bad_specs_rejected() {
        let mut s = spec(0, Family::StrongPair, 1);
        assert!(generate(&s).is_err());
        s.k = 2;
        s.slack_factor = 0.5;
        assert!(generate(&s).is_err());
    }

    #[test]
    fn empty_suite() {
        let config = SuiteConfig {
            n_strong: 0,
            n_sf_only: 0,
            ..SuiteConfig::default()
        };
        let r = run_suite(&config).unwrap();
        assert_eq!(r.n_instances, 0);
        assert!(r.checks.iter().all(|t| t.evaluated == 0));
        assert_eq!(r.worst_z, None);
    }

    #[test]
    fn small_suite_is_deterministic_and_consistent() {
        let config = SuiteConfig {
            n_strong: 4,
            n_sf_only: 4,
            n_samples: 20_000,
            adversarial: true,
            sandwich_points: 10,
            ..SuiteConfig::default()
        };
        let a = run_suite(&config).unwrap();
        let b = run_suite(&config).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        for t in &a.checks {
            assert_eq!(t.passed + t.failed, t.evaluated);
        }
        assert_eq!(a.tally(CheckName::Generator).evaluated, 8);
        assert_eq!(a.tally(CheckName::MomentOrder).evaluated, 4);
        assert_eq!(a.tally(CheckName::Corollary).evaluated, 4);
        assert!(a.all_passed(), "{:#?}", a.failures);
        assert!(a.summary_table().contains("moment_order"));
    }

    #[test]
    fn config_parses_from_partial_json() {
        let c: SuiteConfig = serde_json::from_str(r#"{"n_strong": 3, "orders": [2]}"#).unwrap();
        assert_eq!(c.n_strong, 3);
        assert_eq!(c.n_sf_only, 200);
        assert!(serde_json::from_str::<SuiteConfig>(r#"{"bogus": 1}"#).is_err());
    }
}
