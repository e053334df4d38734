//! Command-line front end: file formats, run reports and the `solve`, `certify` and
//! `check` subcommands.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::homotopy::{canonical_start, unit_roots_start, LinearHomotopy, StartPair};
use crate::linalg::C64;
use crate::newton_alpha::{self, APPROX_ZERO_THRESHOLD};
use crate::polysys::{HomogeneousSystem, Monomial, ProjectivePoint};
use crate::suites::{self, Execution, Suite, SuiteReport};
use crate::tracker::{self, TrackerConfig, TrackingResult, EPSILON_MAX};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_UNCERTIFIED_START: i32 = 3;
pub const EXIT_INVARIANT_VIOLATION: i32 = 4;
pub const EXIT_MAX_STEPS: i32 = 5;

/// Exit code reported for an error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Parse(_)
        | Error::Json(_)
        | Error::Io(_)
        | Error::InvalidSystem(_)
        | Error::DimensionMismatch { .. }
        | Error::DegreeMismatch
        | Error::ZeroVector
        | Error::ParameterOutOfRange { .. } => EXIT_USAGE,
        Error::StartNotCertified { .. } => EXIT_UNCERTIFIED_START,
        Error::StepInvariantViolated { .. } => EXIT_INVARIANT_VIOLATION,
        Error::MaxStepsExceeded { .. } => EXIT_MAX_STEPS,
        _ => EXIT_FAILURE,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TermFile {
    pub exponents: Vec<u32>,
    pub coeff_re: f64,
    pub coeff_im: f64,
}

/// On-disk form of a homogeneous system.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemFile {
    pub n: usize,
    pub degrees: Vec<u32>,
    pub equations: Vec<Vec<TermFile>>,
}

impl SystemFile {
    pub fn from_system(f: &HomogeneousSystem) -> Self {
        Self {
            n: f.n(),
            degrees: f.degrees().to_vec(),
            equations: f
                .equations()
                .iter()
                .map(|eq| {
                    eq.iter()
                        .map(|m| TermFile {
                            exponents: m.exponents.clone(),
                            coeff_re: m.coeff.re,
                            coeff_im: m.coeff.im,
                        })
                        .collect()
                })
                .collect(),
        }
    }

    pub fn to_system(&self) -> Result<HomogeneousSystem> {
        if self.degrees.len() != self.n {
            return Err(Error::Parse(format!(
                "n = {} but {} degrees given",
                self.n,
                self.degrees.len()
            )));
        }
        let equations = self
            .equations
            .iter()
            .map(|eq| {
                eq.iter()
                    .map(|t| Monomial::new(t.exponents.clone(), C64::new(t.coeff_re, t.coeff_im)))
                    .collect()
            })
            .collect();
        HomogeneousSystem::new(self.degrees.clone(), equations)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Parses a system from its JSON text.
pub fn parse_system(text: &str) -> Result<HomogeneousSystem> {
    let file: SystemFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    file.to_system()
}

/// A start system together with its known zeros.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StartFile {
    pub system: SystemFile,
    /// Each zero as a list of `[re, im]` pairs.
    pub zeros: Vec<Vec<C64>>,
}

impl StartFile {
    pub fn to_pair(&self) -> Result<StartPair> {
        let system = self.system.to_system()?;
        let zeros = self
            .zeros
            .iter()
            .map(|z| {
                if z.len() != system.nvars() {
                    return Err(Error::DimensionMismatch {
                        expected: system.nvars(),
                        found: z.len(),
                    });
                }
                ProjectivePoint::new(z.clone())
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(StartPair { system, zeros })
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InputDigests {
    pub target_sha256: String,
    /// Present when the start system was read from a file.
    pub start_sha256: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RootReport {
    pub index: usize,
    pub start: ProjectivePoint,
    pub certified: bool,
    pub error: Option<String>,
    pub exit_code: i32,
    pub result: Option<TrackingResult>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub total_seconds: f64,
    pub per_root_seconds: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub digests: InputDigests,
    pub start_mode: String,
    pub seed: u64,
    pub config: TrackerConfig,
    pub roots: Vec<RootReport>,
    pub timing: Timing,
}

impl RunReport {
    pub fn exit_code(&self) -> i32 {
        self.roots
            .iter()
            .map(|r| r.exit_code)
            .find(|&c| c != EXIT_OK)
            .unwrap_or(EXIT_OK)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StartMode {
    Canonical,
    UnitRoots,
    File(PathBuf),
}

impl FromStr for StartMode {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(match s {
            "canonical" => StartMode::Canonical,
            "unit-roots" => StartMode::UnitRoots,
            path => StartMode::File(PathBuf::from(path)),
        })
    }
}

#[derive(Clone, Debug)]
pub struct SolveArgs {
    pub target: PathBuf,
    pub start: StartMode,
    pub epsilon: f64,
    pub seed: u64,
    pub perturb: Option<f64>,
    pub execution: Execution,
}

/// Tracks every start zero to the target; the report is returned even when paths fail.
pub fn solve(args: &SolveArgs) -> Result<RunReport> {
    let started = Instant::now();
    let config = TrackerConfig {
        epsilon: args.epsilon,
        perturbation: args.perturb,
        seed: args.seed,
        ..TrackerConfig::default()
    };
    config.validate()?;
    let target_bytes = std::fs::read(&args.target)?;
    let target =
        parse_system(std::str::from_utf8(&target_bytes).map_err(|e| Error::Parse(e.to_string()))?)?;
    let (pair, start_sha256, start_mode) = match &args.start {
        StartMode::Canonical => (
            canonical_start(target.degrees())?,
            None,
            "canonical".to_string(),
        ),
        StartMode::UnitRoots => (
            unit_roots_start(target.degrees())?,
            None,
            "unit-roots".to_string(),
        ),
        StartMode::File(path) => {
            let bytes = std::fs::read(path)?;
            let file: StartFile =
                serde_json::from_slice(&bytes).map_err(|e| Error::Parse(e.to_string()))?;
            (
                file.to_pair()?,
                Some(sha256_hex(&bytes)),
                path.display().to_string(),
            )
        }
    };
    if !pair.system.same_shape(&target) {
        return Err(Error::DegreeMismatch);
    }
    let homotopy = LinearHomotopy::new(pair.system.normalized(), target.normalized())?;

    let runs = suites::map_indexed(args.execution, pair.zeros.len() as u64, |i| {
        let t0 = Instant::now();
        let cfg = TrackerConfig {
            stream: i,
            ..config.clone()
        };
        let r = tracker::track(&homotopy, &pair.zeros[i as usize], &cfg);
        (r, t0.elapsed().as_secs_f64())
    });
    let mut roots = Vec::with_capacity(runs.len());
    let mut per_root_seconds = Vec::with_capacity(runs.len());
    for (index, (r, secs)) in runs.into_iter().enumerate() {
        per_root_seconds.push(secs);
        let start = pair.zeros[index].clone();
        roots.push(match r {
            Ok(result) => {
                let certified = result.final_certificate.certified;
                RootReport {
                    index,
                    start,
                    certified,
                    error: None,
                    exit_code: if certified { EXIT_OK } else { EXIT_FAILURE },
                    result: Some(result),
                }
            }
            Err(e) => RootReport {
                index,
                start,
                certified: false,
                exit_code: exit_code(&e),
                error: Some(e.to_string()),
                result: None,
            },
        });
    }
    Ok(RunReport {
        digests: InputDigests {
            target_sha256: sha256_hex(&target_bytes),
            start_sha256,
        },
        start_mode,
        seed: args.seed,
        config,
        roots,
        timing: Timing {
            total_seconds: started.elapsed().as_secs_f64(),
            per_root_seconds,
        },
    })
}

/// Parses `c0,c1,...` where each entry is a complex literal such as `1`, `-0.5i` or `2+3i`.
pub fn parse_point(text: &str) -> Result<Vec<C64>> {
    text.split(',')
        .map(|s| {
            let s: String = s.chars().filter(|c| !c.is_whitespace()).collect();
            C64::from_str(&s).map_err(|_| Error::Parse(format!("bad complex number {s:?}")))
        })
        .collect()
}

pub fn format_certificate(cert: &newton_alpha::AlphaCertificate) -> String {
    format!(
        "certified = {}\nalpha_bound = {}\nmu = {}\nbeta0 = {}\nradius = {}\nthreshold = {}\n",
        cert.certified,
        cert.alpha_bound,
        cert.mu,
        cert.beta0,
        cert.zero_radius_tan,
        cert.threshold_used
    )
}

pub fn certify(
    system: &Path,
    point: &str,
    threshold: f64,
) -> Result<newton_alpha::AlphaCertificate> {
    let f = parse_system(&std::fs::read_to_string(system)?)?;
    let x = parse_point(point)?;
    if x.len() != f.nvars() {
        return Err(Error::DimensionMismatch {
            expected: f.nvars(),
            found: x.len(),
        });
    }
    ProjectivePoint::new(x.clone())?;
    if !(threshold > 0.0) {
        return Err(Error::ParameterOutOfRange {
            name: "threshold",
            value: threshold,
            reason: "need threshold > 0",
        });
    }
    Ok(newton_alpha::certify(&f, &x, threshold))
}

pub fn format_suite_report(report: &SuiteReport) -> String {
    let mut out = format!(
        "suite = {}\nseed = {}\nsamples = {}\nskipped = {}\n",
        report.suite, report.seed, report.samples, report.skipped
    );
    for t in &report.tallies {
        out.push_str(&format!(
            "check {} : {} checked, {} violations, worst score {}\n",
            t.name, t.checked, t.violations, t.worst_score
        ));
    }
    out.push_str(&format!("violations = {}\n", report.violations()));
    out
}

#[derive(Debug, Parser)]
#[command(name = "certhom", version, about = "Certified homotopy continuation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Track every start zero to the target system and write a JSON report.
    Solve {
        #[arg(long)]
        target: PathBuf,
        /// `canonical`, `unit-roots` or a start-system file.
        #[arg(long)]
        start: StartMode,
        #[arg(long, default_value_t = EPSILON_MAX)]
        epsilon: f64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Corrector noise as a fraction of the allowed corrector radius.
        #[arg(long)]
        perturb: Option<f64>,
        #[arg(long)]
        sequential: bool,
    },
    /// Print the alpha-theory certificate of a point.
    Certify {
        #[arg(long)]
        system: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        point: String,
        #[arg(long, default_value_t = APPROX_ZERO_THRESHOLD)]
        threshold: f64,
    },
    /// Run a seeded property suite.
    Check {
        #[arg(long)]
        suite: String,
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        sequential: bool,
        /// Print the report as JSON.
        #[arg(long)]
        json: bool,
    },
}

fn execution(sequential: bool) -> Execution {
    if sequential {
        Execution::Sequential
    } else {
        Execution::default()
    }
}

fn fail(err: &Error) -> i32 {
    eprintln!("error: {err}");
    exit_code(err)
}

/// Runs the command line `args` (program name first) and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match cli.command {
        Command::Solve {
            target,
            start,
            epsilon,
            out,
            seed,
            perturb,
            sequential,
        } => {
            let args = SolveArgs {
                target,
                start,
                epsilon,
                seed,
                perturb,
                execution: execution(sequential),
            };
            let report = match solve(&args) {
                Ok(r) => r,
                Err(e) => return fail(&e),
            };
            let text = match serde_json::to_string_pretty(&report) {
                Ok(t) => t,
                Err(e) => return fail(&e.into()),
            };
            if let Err(e) = std::fs::write(&out, text + "\n") {
                return fail(&e.into());
            }
            for r in &report.roots {
                match (&r.result, &r.error) {
                    (Some(res), _) => println!(
                        "root {}: certified = {}, k = {}, bound = {}",
                        r.index, r.certified, res.k, res.step_bound
                    ),
                    (None, Some(e)) => println!("root {}: {e}", r.index),
                    (None, None) => {}
                }
            }
            report.exit_code()
        }
        Command::Certify {
            system,
            point,
            threshold,
        } => match certify(&system, &point, threshold) {
            Ok(cert) => {
                print!("{}", format_certificate(&cert));
                if cert.certified {
                    EXIT_OK
                } else {
                    EXIT_UNCERTIFIED_START
                }
            }
            Err(e) => fail(&e),
        },
        Command::Check {
            suite,
            samples,
            seed,
            sequential,
            json,
        } => {
            let Some(suite) = Suite::from_name(&suite) else {
                let names: Vec<_> = Suite::ALL.iter().map(|s| s.name()).collect();
                eprintln!(
                    "error: unknown suite {suite:?} (expected one of {})",
                    names.join(", ")
                );
                return EXIT_USAGE;
            };
            match suites::run_suite(suite, samples, seed, execution(sequential)) {
                Ok(report) => {
                    if json {
                        match serde_json::to_string_pretty(&report) {
                            Ok(t) => println!("{t}"),
                            Err(e) => return fail(&e.into()),
                        }
                    } else {
                        print!("{}", format_suite_report(&report));
                    }
                    if report.violations() == 0 {
                        EXIT_OK
                    } else {
                        EXIT_FAILURE
                    }
                }
                Err(e) => fail(&e),
            }
        }
    }
}
