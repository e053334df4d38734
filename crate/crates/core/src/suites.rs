//! Seeded property suites over random samples, shared by `certhom check`, the
//! acceptance tests and the benchmarks.
//!
//! Every sample draws from its own random stream, so a suite gives the same tallies
//! whether it runs sequentially or in parallel.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::homotopy::{canonical_start, unit_roots_start, HomotopyPath, LinearHomotopy};
use crate::invariants::{self, check_sandwich, gamma_factor, GAUGE_LIMIT};
use crate::linalg::{self, C64};
use crate::newton_alpha::{self, APPROX_ZERO_THRESHOLD};
use crate::oracle::{self, OracleConfig};
use crate::polysys::{HomogeneousSystem, ProjectivePoint};
use crate::projgeom;
use crate::sampling::{self, SampleRng};
use crate::tracker::{self, TrackerConfig, TrackingResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Execution {
    Sequential,
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }
}

/// `(0..count).map(f)`, spread over the rayon pool when asked and available.
pub fn map_indexed<T, F>(exec: Execution, count: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec == Execution::Parallel {
        use rayon::prelude::*;
        return (0..count).into_par_iter().map(f).collect();
    }
    let _ = exec;
    (0..count).map(f).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Comparison,
    KernelAngle,
    Alpha,
    TrackerAudit,
}

impl Suite {
    pub const ALL: [Suite; 4] = [
        Suite::Comparison,
        Suite::KernelAngle,
        Suite::Alpha,
        Suite::TrackerAudit,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Comparison => "theorem31",
            Suite::KernelAngle => "lemma37",
            Suite::Alpha => "alpha",
            Suite::TrackerAudit => "tracker-audit",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|s| s.name() == name)
    }
}

/// One checked property: `score` is the property's left side over its right side, so
/// values above 1 (beyond slack) are violations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub check: &'static str,
    pub ok: bool,
    pub score: f64,
}

impl Observation {
    fn new(check: &'static str, ok: bool, score: f64) -> Self {
        Self { check, ok, score }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckTally {
    pub name: String,
    pub checked: usize,
    pub violations: usize,
    pub worst_score: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: String,
    pub seed: u64,
    pub samples: usize,
    /// Draws rejected by a sample filter (for example rank-deficient points).
    pub skipped: usize,
    pub tallies: Vec<CheckTally>,
    pub elapsed_seconds: f64,
}

impl SuiteReport {
    pub fn violations(&self) -> usize {
        self.tallies.iter().map(|t| t.violations).sum()
    }

    pub fn tally(&self, name: &str) -> Option<&CheckTally> {
        self.tallies.iter().find(|t| t.name == name)
    }

    fn from_outcomes(
        suite: Suite,
        seed: u64,
        checks: &[&'static str],
        outcomes: Vec<Option<Vec<Observation>>>,
        started: Instant,
    ) -> Self {
        let mut tallies: Vec<CheckTally> = checks
            .iter()
            .map(|c| CheckTally {
                name: (*c).to_string(),
                checked: 0,
                violations: 0,
                worst_score: 0.0,
            })
            .collect();
        let mut samples = 0;
        let mut skipped = 0;
        for outcome in outcomes {
            let Some(obs) = outcome else {
                skipped += 1;
                continue;
            };
            samples += 1;
            for o in obs {
                let t = tallies
                    .iter_mut()
                    .find(|t| t.name == o.check)
                    .expect("observations use declared check names");
                t.checked += 1;
                if !o.ok {
                    t.violations += 1;
                }
                if o.score > t.worst_score || o.score.is_nan() {
                    t.worst_score = o.score;
                }
            }
        }
        Self {
            suite: suite.name().to_string(),
            seed,
            samples,
            skipped,
            tallies,
            elapsed_seconds: started.elapsed().as_secs_f64(),
        }
    }
}

/// Runs `suite` over `samples` seeded samples.
pub fn run_suite(suite: Suite, samples: usize, seed: u64, exec: Execution) -> Result<SuiteReport> {
    match suite {
        Suite::Comparison => Ok(comparison(samples, seed, exec)),
        Suite::KernelAngle => Ok(kernel_angle(samples, seed, exec)),
        Suite::Alpha => Ok(alpha(samples, seed, exec)),
        Suite::TrackerAudit => tracker_audit(samples, seed, exec),
    }
}

fn random_shape(rng: &mut SampleRng, max_n: usize, lo: u32, hi: u32) -> Vec<u32> {
    use rand::Rng;
    let n = rng.random_range(1..=max_n);
    sampling::random_degrees(rng, n, lo, hi)
}

/// A unit system at BW distance exactly `dist` from the unit system `f`.
fn system_at_distance(rng: &mut SampleRng, f: &HomogeneousSystem, dist: f64) -> HomogeneousSystem {
    let h = sampling::bw_gaussian_system(rng, f.degrees());
    let coef = h.bw_inner(f).expect("same shape");
    let perp = HomogeneousSystem::combine(C64::new(1.0, 0.0), &h, -coef, f)
        .expect("same shape")
        .normalized();
    // chord 2 sin(theta/2) = dist between the unit vectors cos(theta) f + sin(theta) perp and f
    let theta = 2.0 * (dist / 2.0).asin();
    HomogeneousSystem::combine(
        C64::new(theta.cos(), 0.0),
        f,
        C64::new(theta.sin(), 0.0),
        &perp,
    )
    .expect("same shape")
}

/// Draws per sample before a sample filter gives up and the sample is skipped.
const MAX_DRAWS: usize = 64;

pub const COMPARISON_CHECKS: [&str; 3] = ["sandwich", "corollary", "rank_preserved"];

/// Comparison theorem for `mu` on random perturbations with `u, v <= 1/20`. Every
/// tenth sample sits on the boundary `u = 1/20, v = 0`.
pub fn comparison(samples: usize, seed: u64, exec: Execution) -> SuiteReport {
    let started = Instant::now();
    let outcomes = map_indexed(exec, samples as u64, |i| {
        let mut rng = sampling::rng_for(seed, i);
        (0..MAX_DRAWS).find_map(|_| comparison_draw(&mut rng, i % 10 == 9))
    });
    SuiteReport::from_outcomes(
        Suite::Comparison,
        seed,
        &COMPARISON_CHECKS,
        outcomes,
        started,
    )
}

fn comparison_draw(rng: &mut SampleRng, boundary: bool) -> Option<Vec<Observation>> {
    use rand::Rng;
    let degrees = random_shape(rng, 3, 2, 4);
    let f = sampling::bw_gaussian_system(rng, &degrees).normalized();
    let x = sampling::random_unit_point(rng, degrees.len() + 1);
    let mu = invariants::mu(&f, &x);
    if !mu.is_finite() {
        return None;
    }
    let (u, v) = if boundary {
        (GAUGE_LIMIT, 0.0)
    } else {
        (
            rng.random_range(0.0..=GAUGE_LIMIT),
            rng.random_range(0.0..=GAUGE_LIMIT),
        )
    };
    // stay a hair inside the limits so rounding cannot push a gauge past 1/20
    let shrink = 1.0 - 1e-9;
    let d = f64::from(f.max_degree());
    let r = shrink * 2.0 * u / (d.powf(1.5) * mu);
    let y = sampling::point_at_distance(rng, &x, r.min(std::f64::consts::FRAC_PI_2));
    let g = system_at_distance(rng, &f, shrink * v / (d.sqrt() * mu));
    let verdict = check_sandwich(&f, &g, &x, &y).ok()?;
    let rank_ok = verdict.mu_gy.is_finite();
    let score = if verdict.mu_fx > verdict.upper {
        verdict.mu_fx / verdict.upper
    } else {
        verdict.lower / verdict.mu_fx
    };
    Some(vec![
        Observation::new("sandwich", verdict.holds, score),
        Observation::new("corollary", verdict.corollary_holds, score),
        Observation::new("rank_preserved", rank_ok, 0.0),
    ])
}

/// Samples with `mu` above this are treated as degenerate by the kernel-angle suite.
pub const KERNEL_ANGLE_MU_CAP: f64 = 1e4;
pub const KERNEL_ANGLE_CHECKS: [&str; 2] = ["tan_theta_equals_delta", "delta_below_sqrt_d_mu"];

/// `tan(theta_x) = delta(f, x)` and `delta <= sqrt(D) mu` on random unit pairs.
pub fn kernel_angle(samples: usize, seed: u64, exec: Execution) -> SuiteReport {
    let started = Instant::now();
    let outcomes = map_indexed(exec, samples as u64, |i| {
        let mut rng = sampling::rng_for(seed, i);
        (0..MAX_DRAWS).find_map(|_| kernel_angle_draw(&mut rng))
    });
    SuiteReport::from_outcomes(
        Suite::KernelAngle,
        seed,
        &KERNEL_ANGLE_CHECKS,
        outcomes,
        started,
    )
}

fn kernel_angle_draw(rng: &mut SampleRng) -> Option<Vec<Observation>> {
    let degrees = random_shape(rng, 3, 2, 4);
    let f = sampling::bw_gaussian_system(rng, &degrees).normalized();
    let x = sampling::random_unit_point(rng, degrees.len() + 1);
    let mu = invariants::mu(&f, &x);
    if !(mu <= KERNEL_ANGLE_MU_CAP) {
        return None;
    }
    let delta = invariants::delta(&f, &x).ok()?;
    let theta = projgeom::kernel_angle(&f, &x).ok()?;
    let rel = (theta.tan() - delta).abs() / delta.max(f64::MIN_POSITIVE);
    let cap = f64::from(f.max_degree()).sqrt() * mu;
    Some(vec![
        Observation::new("tan_theta_equals_delta", rel <= 1e-8, rel / 1e-8),
        Observation::new("delta_below_sqrt_d_mu", delta <= cap + 1e-9, delta / cap),
    ])
}

pub const ALPHA_CHECKS: [&str; 4] = [
    "newton_contraction",
    "beta_below_1.128_dt",
    "iterate_beta_below_1.23_a_beta",
    "newton_image_radius",
];

/// A random pair `(f, x)` with `x` certified at threshold 0.049, or `None` when the
/// draw did not certify.
pub fn certified_sample(rng: &mut SampleRng) -> Option<(HomogeneousSystem, ProjectivePoint)> {
    use rand::Rng;
    let degrees = random_shape(rng, 3, 2, 4);
    let zeta = sampling::random_unit_point(rng, degrees.len() + 1);
    let f = sampling::system_vanishing_at(rng, &degrees, &zeta).normalized();
    let mu = invariants::mu(&f, &zeta);
    if !mu.is_finite() {
        return None;
    }
    let target_alpha: f64 = rng.random_range(1e-3..0.06);
    let r = target_alpha / (gamma_factor(&f) * mu);
    let x = sampling::point_at_distance(rng, &zeta, r);
    let cert = newton_alpha::certify(&f, &x, APPROX_ZERO_THRESHOLD);
    cert.certified.then_some((f, x))
}

/// Quadratic contraction of Newton iterates, the two `beta_0` estimates, and the radius
/// of the Newton image, on certified approximate zeros.
pub fn alpha(samples: usize, seed: u64, exec: Execution) -> SuiteReport {
    let started = Instant::now();
    let outcomes = map_indexed(exec, samples as u64, |i| {
        let mut rng = sampling::rng_for(seed, i);
        let (f, x) = (0..MAX_DRAWS).find_map(|_| certified_sample(&mut rng))?;
        let zeta = newton_alpha::refine_zero(&f, &x).ok()?;
        let mut obs = Vec::new();

        let d0 = projgeom::d_tan(&zeta, &x).ok()?;
        let mut xp = x.clone();
        let mut worst = 0.0f64;
        let mut ok = true;
        for p in 1..=4 {
            xp = newton_alpha::newton_step(&f, &xp).ok()?;
            let dp = projgeom::d_tan(&zeta, &xp).ok()?;
            let bound = 0.5f64.powi((1 << p) - 1) * d0;
            ok &= dp <= bound * (1.0 + 1e-6);
            worst = worst.max(dp / bound);
        }
        obs.push(Observation::new("newton_contraction", ok, worst));

        let bd = newton_alpha::beta_dist_check(&f, &x).ok()?;
        obs.push(Observation::new(
            "beta_below_1.128_dt",
            bd.holds,
            bd.beta0 / bd.bound,
        ));

        let ib = newton_alpha::iterate_beta_check(&f, &x).ok()?;
        obs.push(Observation::new(
            "iterate_beta_below_1.23_a_beta",
            ib.holds,
            ib.beta0_y / ib.bound,
        ));

        let cert = newton_alpha::certify(&f, &x, APPROX_ZERO_THRESHOLD);
        let y = newton_alpha::newton_step(&f, &x).ok()?;
        let dr = projgeom::d_riemann(&y, &zeta).ok()?;
        let radius = if cert.alpha_bound > 0.0 {
            (newton_alpha::sigma(cert.alpha_bound).ok()? - 1.0) * cert.beta0
        } else {
            0.0
        };
        obs.push(Observation::new(
            "newton_image_radius",
            dr <= radius + 1e-10,
            dr / (radius + 1e-10),
        ));
        Some(obs)
    });
    SuiteReport::from_outcomes(Suite::Alpha, seed, &ALPHA_CHECKS, outcomes, started)
}

/// Start system, target and homotopy for one tracking experiment.
pub struct TrackingProblem {
    pub index: u64,
    pub target: HomogeneousSystem,
    pub homotopy: LinearHomotopy,
    pub starts: Vec<ProjectivePoint>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StartKind {
    Canonical,
    UnitRoots,
}

/// The `index`-th seeded random target of shape `degrees` joined to a start system,
/// both normalized.
pub fn tracking_problem(
    degrees: &[u32],
    start: StartKind,
    seed: u64,
    index: u64,
) -> Result<TrackingProblem> {
    let mut rng = sampling::rng_for(seed, index);
    let target = sampling::bw_gaussian_system(&mut rng, degrees).normalized();
    let pair = match start {
        StartKind::Canonical => canonical_start(degrees)?,
        StartKind::UnitRoots => unit_roots_start(degrees)?,
    };
    let homotopy = LinearHomotopy::new(pair.system.normalized(), target.clone())?;
    Ok(TrackingProblem {
        index,
        target,
        homotopy,
        starts: pair.zeros,
    })
}

/// Tracks every start of every problem; `config.stream` is set per path.
pub fn track_all(
    problems: &[TrackingProblem],
    config: &TrackerConfig,
    exec: Execution,
) -> Vec<Vec<Result<TrackingResult>>> {
    let jobs: Vec<(usize, usize)> = problems
        .iter()
        .enumerate()
        .flat_map(|(p, prob)| (0..prob.starts.len()).map(move |s| (p, s)))
        .collect();
    let results = map_indexed(exec, jobs.len() as u64, |j| {
        let (p, s) = jobs[j as usize];
        let prob = &problems[p];
        let cfg = TrackerConfig {
            stream: prob.index * 1000 + s as u64,
            ..config.clone()
        };
        tracker::track(&prob.homotopy, &prob.starts[s], &cfg)
    });
    let mut out: Vec<Vec<Result<TrackingResult>>> = problems.iter().map(|_| Vec::new()).collect();
    for ((p, _), r) in jobs.into_iter().zip(results) {
        out[p].push(r);
    }
    out
}

/// Whether `a` and `b` can be paired one-to-one with all pair distances `<= tol`.
pub fn bijective_match(a: &[ProjectivePoint], b: &[ProjectivePoint], tol: f64) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let close: Vec<Vec<bool>> = a
        .iter()
        .map(|p| {
            b.iter()
                .map(|q| projgeom::d_riemann(p, q).is_ok_and(|d| d <= tol))
                .collect()
        })
        .collect();
    // Kuhn's augmenting paths
    fn augment(
        i: usize,
        close: &[Vec<bool>],
        seen: &mut [bool],
        owner: &mut [Option<usize>],
    ) -> bool {
        for j in 0..close[i].len() {
            if close[i][j] && !seen[j] {
                seen[j] = true;
                if owner[j].is_none_or(|k| augment(k, close, seen, owner)) {
                    owner[j] = Some(i);
                    return true;
                }
            }
        }
        false
    }
    let mut owner = vec![None; b.len()];
    (0..a.len()).all(|i| augment(i, &close, &mut vec![false; b.len()], &mut owner))
}

/// Largest distance from a point of `a` to the nearest point of `b`.
pub fn max_nearest_distance(a: &[ProjectivePoint], b: &[ProjectivePoint]) -> f64 {
    a.iter()
        .map(|p| {
            b.iter()
                .filter_map(|q| projgeom::d_riemann(p, q).ok())
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max)
}

pub const TRACKER_CHECKS: [&str; 6] = [
    "terminates_certified",
    "induction_invariant",
    "step_bound",
    "progress_floor",
    "phi_resample",
    "roots_match_oracle",
];

/// Tracks every root of seeded random cubics from the unit-roots start and audits the
/// runs; one sample is one target.
pub fn tracker_audit(samples: usize, seed: u64, exec: Execution) -> Result<SuiteReport> {
    let started = Instant::now();
    let problems = (0..samples as u64)
        .map(|i| tracking_problem(&[3], StartKind::UnitRoots, seed, i))
        .collect::<Result<Vec<_>>>()?;
    let config = TrackerConfig::default();
    let runs = track_all(&problems, &config, exec);
    let outcomes = problems
        .iter()
        .zip(runs)
        .map(|(prob, results)| Some(audit_target(prob, &results, &config)))
        .collect();
    Ok(SuiteReport::from_outcomes(
        Suite::TrackerAudit,
        seed,
        &TRACKER_CHECKS,
        outcomes,
        started,
    ))
}

fn audit_target(
    prob: &TrackingProblem,
    results: &[Result<TrackingResult>],
    config: &TrackerConfig,
) -> Vec<Observation> {
    let alpha = config.alpha();
    let mut obs = Vec::new();
    let mut endpoints = Vec::new();
    for r in results {
        let Ok(r) = r else {
            obs.push(Observation::new(
                "terminates_certified",
                false,
                f64::INFINITY,
            ));
            continue;
        };
        obs.push(Observation::new(
            "terminates_certified",
            r.final_certificate.certified,
            r.final_certificate.alpha_bound / APPROX_ZERO_THRESHOLD,
        ));
        let worst_alpha = r.steps.iter().map(|s| s.alpha_bound).fold(0.0, f64::max);
        obs.push(Observation::new(
            "induction_invariant",
            worst_alpha < alpha,
            worst_alpha / alpha,
        ));
        let bound = 1.1 * r.step_bound;
        obs.push(Observation::new(
            "step_bound",
            r.k as f64 <= bound,
            r.k as f64 / bound,
        ));
        match tracker::progress_audit(r, &prob.homotopy, 0.1, 10) {
            Ok(a) => {
                obs.push(Observation::new(
                    "progress_floor",
                    a.violations.is_empty(),
                    a.min_ratio.map_or(0.0, |m| 1.0 / m),
                ));
                obs.push(Observation::new(
                    "phi_resample",
                    a.phi_resample_violations == 0,
                    a.phi_resample_violations as f64,
                ));
            }
            Err(_) => obs.push(Observation::new("progress_floor", false, f64::INFINITY)),
        }
        if let Ok(z) = tracker::refined_endpoint(&prob.homotopy, r) {
            endpoints.push(z);
        }
    }
    let matched = oracle::univariate_roots(&prob.target)
        .map(|roots| {
            let ok = endpoints.len() == results.len() && bijective_match(&endpoints, &roots, 1e-8);
            (ok, max_nearest_distance(&endpoints, &roots))
        })
        .unwrap_or((false, f64::INFINITY));
    obs.push(Observation::new(
        "roots_match_oracle",
        matched.0,
        matched.1 / 1e-8,
    ));
    obs
}

/// End-to-end check for one `n = 2` problem: the canonical zero tracked to the target
/// is certified there and lies near a root found by multistart Newton.
pub fn canonical_smoke(
    degrees: &[u32],
    seed: u64,
    index: u64,
    config: &TrackerConfig,
) -> Result<(TrackingResult, f64)> {
    let prob = tracking_problem(degrees, StartKind::Canonical, seed, index)?;
    let result = tracker::track(&prob.homotopy, &prob.starts[0], config)?;
    let endpoint = tracker::refined_endpoint(&prob.homotopy, &result)?;
    let roots = oracle::multistart_solve(
        &prob.homotopy.at(prob.homotopy.domain().1)?,
        512,
        &OracleConfig {
            seed: index,
            ..OracleConfig::default()
        },
    )?;
    let dist = max_nearest_distance(std::slice::from_ref(&endpoint), &roots);
    Ok((result, dist))
}

/// Largest `||f(x)|| / ||f||` over the given unit points.
pub fn max_residual(f: &HomogeneousSystem, points: &[ProjectivePoint]) -> f64 {
    points
        .iter()
        .map(|p| linalg::norm(&f.evaluate(p).unwrap_or_default()) / f.bw_norm())
        .fold(0.0, f64::max)
}
