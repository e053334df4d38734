//! Adaptive step-size path tracking with a certificate at every step.
//!
//! Each step moves from `t_i` to `t_{i+1} = min(s, s')`, where `s` is chosen from the
//! arc length of the path of systems and `s'` from the gauge `phi`. The next iterate is
//! one projective Newton step for `f_{t_{i+1}}` started at `x_i`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::homotopy::{self, HomotopyPath};
use crate::invariants::{self, gamma_factor};
use crate::linalg::C64;
use crate::newton_alpha::{self, AlphaCertificate, APPROX_ZERO_THRESHOLD};
use crate::polysys::{HomogeneousSystem, ProjectivePoint};
use crate::projgeom::{self, RestrictedInverse};
use crate::sampling;

/// Largest admissible `epsilon`.
pub const EPSILON_MAX: f64 = 1.0 / 20.0;
/// Relative width kept below the upper edge of a step band when the band is
/// (nearly) a single point, as it is for `epsilon = 1/20`.
pub const BAND_FLOOR: f64 = 1e-8;
const BISECTION_ITERATIONS: usize = 60;
const PHI_SAMPLES: usize = 64;
const PHI_MIN_OFFSET: f64 = 1e-12;
const HARD_STEP_CAP: usize = 1_000_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrackerConfig {
    pub epsilon: f64,
    /// Multiplier on the theoretical step bound before tracking gives up.
    pub max_steps_factor: f64,
    /// Absolute arc-length quadrature tolerance, relative to the upper edge of the band.
    pub quad_tol: f64,
    /// Tolerance of the condition-length quadrature used for the step bound.
    pub length_tol: f64,
    /// Corrector noise as a fraction of the allowed corrector radius; must be `< 1`.
    pub perturbation: Option<f64>,
    pub seed: u64,
    /// Random stream used for corrector noise (e.g. the index of the tracked root).
    pub stream: u64,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        Self {
            epsilon: EPSILON_MAX,
            max_steps_factor: 4.0,
            quad_tol: 1e-10,
            length_tol: 1e-6,
            perturbation: None,
            seed: 0,
            stream: 0,
        }
    }
}

impl TrackerConfig {
    pub fn with_epsilon(epsilon: f64) -> Self {
        Self {
            epsilon,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon <= EPSILON_MAX) {
            return Err(Error::ParameterOutOfRange {
                name: "epsilon",
                value: self.epsilon,
                reason: "need 0 < epsilon <= 1/20",
            });
        }
        if !(self.max_steps_factor >= 1.0) {
            return Err(Error::ParameterOutOfRange {
                name: "max_steps_factor",
                value: self.max_steps_factor,
                reason: "need max_steps_factor >= 1",
            });
        }
        for (name, v) in [("quad_tol", self.quad_tol), ("length_tol", self.length_tol)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::ParameterOutOfRange {
                    name,
                    value: v,
                    reason: "tolerances lie in (0, 1)",
                });
            }
        }
        if let Some(p) = self.perturbation {
            if !(0.0..1.0).contains(&p) {
                return Err(Error::ParameterOutOfRange {
                    name: "perturbation",
                    value: p,
                    reason: "corrector noise must stay strictly inside the corrector radius",
                });
            }
        }
        Ok(())
    }

    /// `epsilon^2 / 2`, the bound kept on `(D^{3/2}/2) mu beta0` at every step.
    pub fn alpha(&self) -> f64 {
        self.epsilon * self.epsilon / 2.0
    }

    pub fn xi(&self) -> f64 {
        20.0 * self.epsilon
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum StepTrigger {
    Start,
    S1Arc,
    S2Phi,
    End,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub t: f64,
    /// Unit-norm iterate.
    pub x: ProjectivePoint,
    pub mu: f64,
    pub beta0: f64,
    pub alpha_bound: f64,
    pub trigger: StepTrigger,
    /// Arc length of the path of systems since the previous step.
    pub arc_increment: f64,
    /// `phi_{t_{i-1}, t_i}(x_{i-1})`.
    pub phi_at_step: f64,
    /// `(D^{3/2}/2) mu beta0` of the previous iterate for this step's system.
    pub predictor_alpha: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrackingResult {
    pub epsilon: f64,
    pub steps: Vec<StepRecord>,
    pub k: usize,
    pub condition_length_estimate: f64,
    /// Condition length over each step interval.
    pub condition_increments: Vec<f64>,
    /// `1 + 0.65 D^{3/2} epsilon^{-2} L`.
    pub step_bound: f64,
    pub final_certificate: AlphaCertificate,
}

impl TrackingResult {
    pub fn endpoint(&self) -> &ProjectivePoint {
        &self.steps.last().expect("a result has at least one step").x
    }

    pub fn samples(&self) -> Vec<(f64, ProjectivePoint)> {
        self.steps.iter().map(|s| (s.t, s.x.clone())).collect()
    }
}

/// `1 + 0.65 D^{3/2} epsilon^{-2} L`.
pub fn theoretical_step_bound(max_degree: u32, epsilon: f64, condition_length: f64) -> f64 {
    1.0 + 0.65 * f64::from(max_degree).powf(1.5) * condition_length / (epsilon * epsilon)
}

/// `f_t / ||f_t||`, rotated so that its inner product with `reference` is real and
/// non-negative.
pub fn unit_system<H: HomotopyPath + ?Sized>(
    h: &H,
    t: f64,
    reference: Option<&HomogeneousSystem>,
) -> Result<HomogeneousSystem> {
    let f = h.at(t)?;
    let nrm = f.bw_norm();
    let mut scale = C64::new(1.0 / nrm, 0.0);
    if let Some(r) = reference {
        let c = r.bw_inner(&f)?;
        if c.norm() > 0.0 {
            scale *= c / c.norm();
        }
    }
    Ok(f.scaled(scale))
}

/// Certificate at threshold `epsilon^2 / 2`, with a strict inequality.
pub fn certify_start(f_a: &HomogeneousSystem, x0: &[C64], epsilon: f64) -> AlphaCertificate {
    let threshold = epsilon * epsilon / 2.0;
    let mut cert = newton_alpha::certify(f_a, x0, threshold);
    cert.certified = cert.alpha_bound < threshold;
    cert
}

fn check_degree(f: &HomogeneousSystem) -> Result<()> {
    if f.max_degree() < 2 {
        return Err(Error::InvalidSystem(
            "path tracking needs max degree >= 2".into(),
        ));
    }
    Ok(())
}

/// `[lower, upper]` of a step band, with the lower edge relaxed to `upper (1 - BAND_FLOOR)`
/// when the band is narrower than that.
fn effective_band(lower: f64, upper: f64) -> (f64, f64) {
    (lower.min(upper * (1.0 - BAND_FLOOR)), upper)
}

/// Arc-length band `[4 eps^2 / (D^{1/2} mu), eps / (5 D^{1/2} mu)]`.
pub fn s1_band(max_degree: u32, mu: f64, epsilon: f64) -> (f64, f64) {
    let sd = f64::from(max_degree).sqrt();
    (
        4.0 * epsilon * epsilon / (sd * mu),
        epsilon / (5.0 * sd * mu),
    )
}

/// Gauge band `[4 eps^2 / (D^{3/2} mu), eps / (5 D^{3/2} mu)]`.
pub fn s2_band(max_degree: u32, mu: f64, epsilon: f64) -> (f64, f64) {
    let d32 = f64::from(max_degree).powf(1.5);
    (
        4.0 * epsilon * epsilon / (d32 * mu),
        epsilon / (5.0 * d32 * mu),
    )
}

/// Corrector radius `4 eps^2 / (5 D^2 mu^2)`.
pub fn s3_radius(max_degree: u32, mu: f64, epsilon: f64) -> f64 {
    let d = f64::from(max_degree);
    4.0 * epsilon * epsilon / (5.0 * d * d * mu * mu)
}

/// Next time from the arc-length band; returns `(s, arc_length(t_i, s))`.
pub fn find_step_s<H: HomotopyPath + ?Sized>(
    h: &H,
    t_i: f64,
    mu_i: f64,
    epsilon: f64,
    quad_tol: f64,
) -> Result<(f64, f64)> {
    let (_, b) = h.domain();
    let d = h.at(t_i)?.max_degree();
    let (lower, upper) = effective_band(s1_band(d, mu_i, epsilon).0, s1_band(d, mu_i, epsilon).1);
    let tol = quad_tol * upper;
    let total = homotopy::arc_length(h, t_i, b, tol)?;
    if total <= upper {
        return Ok((b, total));
    }
    let target = 0.5 * (lower + upper);
    let (mut lo, mut hi) = (t_i, b);
    let mut lo_len = 0.0;
    for _ in 0..BISECTION_ITERATIONS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let len = homotopy::arc_length(h, t_i, mid, tol)?;
        if (lower..=upper).contains(&len) {
            return Ok((mid, len));
        }
        if len > target {
            hi = mid;
        } else {
            lo = mid;
            lo_len = len;
        }
    }
    Ok((lo, lo_len))
}

/// `phi_{t_i, sigma}(x_i)` for unit systems, `f_sigma` phase-aligned with `f_i`.
fn phi_at<H: HomotopyPath + ?Sized>(
    h: &H,
    inv: &RestrictedInverse,
    f_i: &HomogeneousSystem,
    x_i: &[C64],
    sigma: f64,
) -> Result<f64> {
    let f_sigma = unit_system(h, sigma, Some(f_i))?;
    invariants::phi_with(inv, f_i, &f_sigma, x_i)
}

/// Next time from the `phi` band; returns `(s', phi_{t_i, s'}(x_i))`. The upper edge is
/// enforced on a geometric sample of `(t_i, s']`, the lower edge only at `s'`.
pub fn find_step_sprime<H: HomotopyPath + ?Sized>(
    h: &H,
    t_i: f64,
    f_i: &HomogeneousSystem,
    x_i: &[C64],
    mu_i: f64,
    epsilon: f64,
) -> Result<(f64, f64)> {
    let (_, b) = h.domain();
    let (lower, upper) = effective_band(
        s2_band(f_i.max_degree(), mu_i, epsilon).0,
        s2_band(f_i.max_degree(), mu_i, epsilon).1,
    );
    let inv = RestrictedInverse::new(f_i, x_i)?;
    let span = b - t_i;
    let mut prev = (t_i, 0.0);
    let mut crossing = None;
    for j in 0..PHI_SAMPLES {
        let frac = PHI_MIN_OFFSET.powf(1.0 - j as f64 / (PHI_SAMPLES - 1) as f64);
        let sigma = if j == PHI_SAMPLES - 1 {
            b
        } else {
            t_i + span * frac
        };
        if sigma <= prev.0 {
            continue;
        }
        let p = phi_at(h, &inv, f_i, x_i, sigma)?;
        if p > upper {
            crossing = Some(sigma);
            break;
        }
        prev = (sigma, p);
    }
    let Some(mut hi) = crossing else {
        return Ok(prev);
    };
    let (mut lo, mut lo_phi) = prev;
    if lo_phi >= lower {
        return Ok((lo, lo_phi));
    }
    for _ in 0..BISECTION_ITERATIONS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let p = phi_at(h, &inv, f_i, x_i, mid)?;
        if p > upper {
            hi = mid;
        } else {
            lo = mid;
            lo_phi = p;
            if p >= lower {
                break;
            }
        }
    }
    Ok((lo, lo_phi))
}

/// `N_{f_next}(x_i)`, optionally moved by a random displacement of Riemannian length
/// `radius` (renormalized).
pub fn corrector<R: Rng + ?Sized>(
    f_next: &HomogeneousSystem,
    x_i: &[C64],
    noise: Option<(f64, &mut R)>,
) -> Result<ProjectivePoint> {
    let y = newton_alpha::newton_step(f_next, x_i)?;
    Ok(match noise {
        Some((radius, rng)) if radius > 0.0 => sampling::point_at_distance(rng, &y, radius),
        _ => y,
    })
}

fn violation(record: StepRecord, reason: String) -> Error {
    Error::StepInvariantViolated {
        record: Box::new(record),
        reason,
    }
}

/// Tracks the zero `x0` of `f_a` along `h`.
pub fn track<H: HomotopyPath + ?Sized>(
    h: &H,
    x0: &ProjectivePoint,
    config: &TrackerConfig,
) -> Result<TrackingResult> {
    config.validate()?;
    let (a, b) = h.domain();
    let eps = config.epsilon;
    let alpha = config.alpha();
    let mut f_i = unit_system(h, a, None)?;
    check_degree(&f_i)?;
    let dmax = f_i.max_degree();
    let gf = gamma_factor(&f_i);

    let start = certify_start(&f_i, x0, eps);
    if !start.certified {
        return Err(Error::StartNotCertified {
            alpha_bound: start.alpha_bound,
            threshold: alpha,
        });
    }
    let mut x_i = x0.normalized();
    let mut steps = vec![StepRecord {
        t: a,
        x: x_i.clone(),
        mu: start.mu,
        beta0: start.beta0,
        alpha_bound: start.alpha_bound,
        trigger: StepTrigger::Start,
        arc_increment: 0.0,
        phi_at_step: 0.0,
        predictor_alpha: None,
    }];
    let mut rng = sampling::rng_for(config.seed, config.stream);
    let mut t_i = a;
    let mut mu_i = start.mu;
    let mut running_length = 0.0;

    while t_i < b {
        let (s, arc_s) = find_step_s(h, t_i, mu_i, eps, config.quad_tol)?;
        let (sp, phi_sp) = find_step_sprime(h, t_i, &f_i, &x_i, mu_i, eps)?;
        let t_next = s.min(sp);
        let trigger = if t_next >= b {
            StepTrigger::End
        } else if s <= sp {
            StepTrigger::S1Arc
        } else {
            StepTrigger::S2Phi
        };
        let arc_increment = if t_next == s {
            arc_s
        } else {
            homotopy::arc_length(h, t_i, t_next, config.quad_tol * s1_band(dmax, mu_i, eps).1)?
        };
        let f_next = unit_system(h, t_next, Some(&f_i))?;
        let phi_at_step = if t_next == sp {
            phi_sp
        } else {
            invariants::phi(&f_i, &f_next, &x_i)?
        };

        let pred_mu = invariants::mu(&f_next, &x_i);
        let pred_beta = invariants::beta0(&f_next, &x_i)?;
        let predictor_alpha = gf * pred_mu * pred_beta;

        let radius = config.perturbation.map(|p| p * s3_radius(dmax, mu_i, eps));
        let x_next = corrector(&f_next, &x_i, radius.map(|r| (r, &mut rng)))?;
        let cert = newton_alpha::certify(&f_next, &x_next, APPROX_ZERO_THRESHOLD);
        let record = StepRecord {
            t: t_next,
            x: x_next.clone(),
            mu: cert.mu,
            beta0: cert.beta0,
            alpha_bound: cert.alpha_bound,
            trigger,
            arc_increment,
            phi_at_step,
            predictor_alpha: Some(predictor_alpha),
        };
        if !(t_next > t_i) {
            return Err(violation(record, format!("no progress from t = {t_i}")));
        }
        if !(cert.alpha_bound < alpha) {
            return Err(violation(
                record,
                format!(
                    "alpha bound {:e} is not below epsilon^2/2 = {alpha:e}",
                    cert.alpha_bound
                ),
            ));
        }
        if !(cert.mu <= mu_i / (1.0 - eps) + 1e-9) {
            return Err(violation(
                record,
                format!(
                    "mu grew from {mu_i} to {} (more than 1/(1-epsilon))",
                    cert.mu
                ),
            ));
        }
        if !(predictor_alpha <= APPROX_ZERO_THRESHOLD) {
            return Err(violation(
                record,
                format!("previous iterate has alpha bound {predictor_alpha:e} > 0.049 for the new system"),
            ));
        }

        running_length += mu_i * arc_increment.hypot(projgeom::d_riemann(&x_i, &x_next)?);
        let limit = config.max_steps_factor * theoretical_step_bound(dmax, eps, running_length);
        let k = steps.len();
        if k as f64 > limit.max(2.0 * config.max_steps_factor) || k >= HARD_STEP_CAP {
            return Err(Error::MaxStepsExceeded { steps: k, limit });
        }

        steps.push(record);
        t_i = t_next;
        mu_i = cert.mu;
        x_i = x_next;
        f_i = f_next;
    }

    let k = steps.len() - 1;
    let samples: Vec<(f64, ProjectivePoint)> = steps.iter().map(|s| (s.t, s.x.clone())).collect();
    let profile = homotopy::condition_profile(h, &samples, config.length_tol)?;
    let step_bound = theoretical_step_bound(dmax, eps, profile.total);
    if k as f64 > config.max_steps_factor * step_bound {
        return Err(Error::MaxStepsExceeded {
            steps: k,
            limit: config.max_steps_factor * step_bound,
        });
    }
    let final_certificate = newton_alpha::certify(&f_i, &x_i, APPROX_ZERO_THRESHOLD);
    Ok(TrackingResult {
        epsilon: eps,
        steps,
        k,
        condition_length_estimate: profile.total,
        condition_increments: profile.increments,
        step_bound,
        final_certificate,
    })
}

/// Condition-length progress per step against the per-step floors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProgressAudit {
    pub checked: usize,
    /// Indices `i` of steps `t_i -> t_{i+1}` whose increment is below its floor.
    pub violations: Vec<usize>,
    pub s1_floor: f64,
    pub s2_floor: f64,
    pub min_increment: Option<f64>,
    /// Smallest increment divided by its floor.
    pub min_ratio: Option<f64>,
    pub increments_sum: f64,
    /// Sampled points of `(t_i, t_{i+1}]` where `phi` exceeds the upper edge of its band.
    pub phi_resample_violations: usize,
}

/// Checks every non-terminal step's condition-length increment against
/// `xi eps / (5 D^{3/2})` (arc steps) or `xi eps / (13 D^{3/2})` (gauge steps), each
/// relaxed by `slack`, and re-samples `phi` at `phi_density` points per step.
pub fn progress_audit<H: HomotopyPath + ?Sized>(
    result: &TrackingResult,
    h: &H,
    slack: f64,
    phi_density: usize,
) -> Result<ProgressAudit> {
    let eps = result.epsilon;
    let xi = 20.0 * eps;
    let f0 = h.at(h.domain().0)?;
    let dmax = f0.max_degree();
    let d32 = f64::from(dmax).powf(1.5);
    let s1_floor = xi * eps / (5.0 * d32);
    let s2_floor = xi * eps / (13.0 * d32);
    let mut audit = ProgressAudit {
        checked: 0,
        violations: Vec::new(),
        s1_floor,
        s2_floor,
        min_increment: None,
        min_ratio: None,
        increments_sum: result.condition_increments.iter().sum(),
        phi_resample_violations: 0,
    };
    let mut f_i = unit_system(h, result.steps[0].t, None)?;
    for (i, w) in result.steps.windows(2).enumerate() {
        let (prev, next) = (&w[0], &w[1]);
        let floor = match next.trigger {
            StepTrigger::S1Arc => Some(s1_floor),
            StepTrigger::S2Phi => Some(s2_floor),
            _ => None,
        };
        if let (Some(floor), Some(&inc)) = (floor, result.condition_increments.get(i)) {
            audit.checked += 1;
            audit.min_increment = Some(audit.min_increment.map_or(inc, |m: f64| m.min(inc)));
            let ratio = inc / floor;
            audit.min_ratio = Some(audit.min_ratio.map_or(ratio, |m: f64| m.min(ratio)));
            if inc < (1.0 - slack) * floor {
                audit.violations.push(i);
            }
        }
        if phi_density > 0 {
            let upper = s2_band(dmax, prev.mu, eps).1;
            let inv = RestrictedInverse::new(&f_i, &prev.x)?;
            for j in 1..=phi_density {
                let sigma = prev.t + (next.t - prev.t) * j as f64 / phi_density as f64;
                if phi_at(h, &inv, &f_i, &prev.x, sigma)? > upper * (1.0 + 1e-9) {
                    audit.phi_resample_violations += 1;
                }
            }
        }
        f_i = unit_system(h, next.t, Some(&f_i))?;
    }
    Ok(audit)
}

/// Distance between the refined zeros associated with two iterates.
pub fn associated_zero_gap(f: &HomogeneousSystem, x: &[C64], y: &[C64]) -> Result<f64> {
    let zx = newton_alpha::refine_zero(f, x)?;
    let zy = newton_alpha::refine_zero(f, y)?;
    projgeom::d_riemann(&zx, &zy)
}

/// Refined endpoint of a result (deep Newton refinement at the final system).
pub fn refined_endpoint<H: HomotopyPath + ?Sized>(
    h: &H,
    result: &TrackingResult,
) -> Result<ProjectivePoint> {
    let f_b = h.at(h.domain().1)?;
    newton_alpha::refine_zero(&f_b, result.endpoint())
}

/// Unit iterate difference helper used in reports.
pub fn step_displacements(result: &TrackingResult) -> Vec<f64> {
    result
        .steps
        .windows(2)
        .map(|w| projgeom::d_riemann(&w[0].x, &w[1].x).unwrap_or(f64::NAN))
        .collect()
}
