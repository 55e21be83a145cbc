//! `supmax`: command-line front end for the comparison checks.
//!
//! Exit codes: 0 success, 1 usage or input error, 2 strengthened condition
//! fails, 3 Sudakov–Fernique condition fails, 4 moment violation, 5
//! interpolation discrepancy, 6 decay bound failure.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use supmax_core::conditions::{check_sf_condition, check_strong_condition};
use supmax_core::gaussian::{regularize, CovarianceMatrix, GaussianPair, RegularizationParams};
use supmax_core::harness::{run_suite, SuiteConfig};
use supmax_core::interpolation::{gi_check, interior_grid, lemma3_check_slice, GiProbe, SmoothMaxParams};
use supmax_core::lemma_integrals::{decay_check, decorrelate, geometric_grid};
use supmax_core::moments::{compare, corollary_bound_check, sample_max_abs, Verdict, DEFAULT_SAMPLES};
use supmax_core::Error;

const SCHEMA_VERSION: u32 = 1;

const EXIT_USAGE: u8 = 1;
const EXIT_STRONG: u8 = 2;
const EXIT_SF: u8 = 3;
const EXIT_VIOLATION: u8 = 4;
const EXIT_GI: u8 = 5;
const EXIT_DECAY: u8 = 6;

#[derive(Parser)]
#[command(name = "supmax", version, about = "Moment comparison checks for maxima of Gaussian vectors")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Write JSON here instead of standard output.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true, env = "SUPMAX_THREADS")]
    threads: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Pretty,
}

#[derive(Args)]
struct Sampling {
    #[arg(long, default_value_t = 2.0)]
    m: f64,
    #[arg(long, default_value_t = DEFAULT_SAMPLES)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Shared-noise regularization added to both vectors before sampling.
    #[arg(long)]
    epsilon: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate both covariance conditions for a pair.
    Check { x: PathBuf, y: PathBuf },
    /// Estimate E[(max_i |X_i|)^m].
    Estimate {
        cov: PathBuf,
        #[command(flatten)]
        sampling: Sampling,
    },
    /// Test E[max|X|^m] <= E[max|Y|^m] with common random numbers.
    Compare {
        x: PathBuf,
        y: PathBuf,
        #[command(flatten)]
        sampling: Sampling,
    },
    /// Test the Sudakov–Fernique moment bound and its constant-factor form.
    Corollary {
        x: PathBuf,
        y: PathBuf,
        #[command(flatten)]
        sampling: Sampling,
    },
    /// Check the interpolation identity for f_p and the 2-d path bounds.
    Interpolate {
        x: PathBuf,
        y: PathBuf,
        #[arg(long, default_value_t = 4)]
        p: u32,
        #[arg(long, default_value_t = 2.0)]
        m: f64,
        #[arg(long, default_value_t = 9)]
        grid_points: usize,
        #[arg(long, default_value_t = DEFAULT_SAMPLES)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Quadrature decay of the ratio expectations in p.
    Decay {
        #[arg(long, default_value_t = 1.0)]
        var_x: f64,
        #[arg(long, default_value_t = 1.0)]
        var_y: f64,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        corr: f64,
        #[arg(long, default_value_t = 2.0)]
        m: f64,
        #[arg(long, default_value_t = 4.0)]
        p_min: f64,
        #[arg(long, default_value_t = 64.0)]
        p_max: f64,
    },
    /// Run a verification suite described by a JSON config.
    Suite {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    schema_version: u32,
    #[serde(flatten)]
    report: &'a T,
}

#[derive(Serialize)]
struct CheckOutput {
    sf: bool,
    strong: bool,
    sf_failures: Vec<(usize, usize)>,
    strong_failures: Vec<(usize, usize)>,
    #[serde(rename = "M")]
    m_total: f64,
    delta: Vec<f64>,
    cond_tol: f64,
}

#[derive(Serialize)]
struct InterpolateOutput {
    gi: supmax_core::interpolation::InterpCheckReport,
    path_bounds: Option<supmax_core::interpolation::PathBoundReport>,
}

enum Failure {
    Usage(String),
    Core(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

type Outcome = Result<u8, Failure>;

fn read_cov(path: &Path) -> Result<CovarianceMatrix, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn read_pair(x: &Path, y: &Path) -> Result<GaussianPair, Failure> {
    Ok(GaussianPair::new(read_cov(x)?, read_cov(y)?)?)
}

fn with_epsilon(pair: GaussianPair, epsilon: Option<f64>) -> Result<GaussianPair, Failure> {
    match epsilon {
        Some(e) => Ok(regularize(&pair, RegularizationParams::new(e)?)?),
        None => Ok(pair),
    }
}

struct Emitter {
    output: Option<PathBuf>,
    format: Format,
}

impl Emitter {
    fn emit<T: Serialize>(&self, report: &T) -> Result<(), Failure> {
        let env = Envelope {
            schema_version: SCHEMA_VERSION,
            report,
        };
        let mut text = match self.format {
            Format::Json => serde_json::to_string(&env),
            Format::Pretty => serde_json::to_string_pretty(&env),
        }
        .map_err(|e| Failure::Usage(e.to_string()))?;
        text.push('\n');
        match &self.output {
            Some(path) => fs::write(path, text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display()))),
            None => std::io::stdout()
                .write_all(text.as_bytes())
                .map_err(|e| Failure::Usage(e.to_string())),
        }
    }
}

fn verdict_code(v: Verdict) -> u8 {
    if v == Verdict::Violation {
        EXIT_VIOLATION
    } else {
        0
    }
}

fn run(command: Command, out: &Emitter) -> Outcome {
    match command {
        Command::Check { x, y } => {
            let pair = read_pair(&x, &y)?;
            let sf = check_sf_condition(&pair)?;
            let strong = check_strong_condition(&pair)?;
            out.emit(&CheckOutput {
                sf: sf.sf_holds(),
                strong: strong.strong_holds(),
                sf_failures: sf.sf_failures.clone(),
                strong_failures: strong.strong_failures.clone(),
                m_total: strong.m_total,
                delta: strong.delta.clone(),
                cond_tol: strong.cond_tol,
            })?;
            Ok(if !sf.sf_holds() {
                EXIT_SF
            } else if !strong.strong_holds() {
                EXIT_STRONG
            } else {
                0
            })
        }
        Command::Estimate { cov, sampling } => {
            let mut c = read_cov(&cov)?;
            if let Some(e) = sampling.epsilon {
                c = c.add_to_diagonal(RegularizationParams::new(e)?.epsilon().powi(2))?;
            }
            let est = sample_max_abs(&c, sampling.n, sampling.seed, sampling.m)?;
            out.emit(&est)?;
            Ok(0)
        }
        Command::Compare { x, y, sampling } => {
            let pair = with_epsilon(read_pair(&x, &y)?, sampling.epsilon)?;
            let v = compare(&pair, sampling.m, sampling.n, sampling.seed)?;
            out.emit(&v)?;
            Ok(verdict_code(v.verdict))
        }
        Command::Corollary { x, y, sampling } => {
            let pair = with_epsilon(read_pair(&x, &y)?, sampling.epsilon)?;
            match corollary_bound_check(&pair, sampling.m, sampling.n, sampling.seed) {
                Ok(v) => {
                    out.emit(&v)?;
                    Ok(verdict_code(v.worst_verdict()))
                }
                Err(Error::SfConditionViolated { pairs }) => {
                    eprintln!("Sudakov–Fernique condition fails at {pairs:?}");
                    Ok(EXIT_SF)
                }
                Err(e) => Err(e.into()),
            }
        }
        Command::Interpolate {
            x,
            y,
            p,
            m,
            grid_points,
            n,
            seed,
        } => {
            let pair = read_pair(&x, &y)?;
            let params = SmoothMaxParams::new(p, m, pair.k())?;
            if grid_points == 0 {
                return Err(Failure::Usage("--grid-points must be positive".into()));
            }
            let grid = interior_grid(grid_points);
            let gi = gi_check(&pair, GiProbe::SmoothMax(params), &grid, n, seed)?;
            let path_bounds = if pair.k() >= 2 {
                Some(lemma3_check_slice(&pair, 0, 1, &grid)?)
            } else {
                None
            };
            let ok = gi.passed() && path_bounds.as_ref().is_none_or(|r| r.violations() == 0);
            out.emit(&InterpolateOutput { gi, path_bounds })?;
            Ok(if ok { 0 } else { EXIT_GI })
        }
        Command::Decay {
            var_x,
            var_y,
            corr,
            m,
            p_min,
            p_max,
        } => {
            let b = decorrelate(var_x, var_y, corr)?;
            let report = decay_check(&b, m, &geometric_grid(p_min, p_max))?;
            out.emit(&report)?;
            Ok(if report.bounded() { 0 } else { EXIT_DECAY })
        }
        Command::Suite { config } => {
            let text = fs::read_to_string(&config).map_err(|e| Failure::Usage(format!("{}: {e}", config.display())))?;
            let cfg: SuiteConfig =
                serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("{}: {e}", config.display())))?;
            let report = run_suite(&cfg)?;
            out.emit(&report)?;
            // The table goes to stdout unless stdout already carries the JSON.
            if out.output.is_some() {
                print!("{}", report.summary_table());
            } else {
                eprint!("{}", report.summary_table());
            }
            Ok(if report.all_passed() { 0 } else { EXIT_VIOLATION })
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    if let Some(t) = cli.threads {
        if t == 0 {
            eprintln!("error: --threads must be positive");
            return ExitCode::from(EXIT_USAGE);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_USAGE);
        }
    }
    let out = Emitter {
        output: cli.output,
        format: cli.format,
    };
    match run(cli.command, &out) {
        Ok(code) => ExitCode::from(code),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Core(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}
