//! Homotopy paths, start systems, and path-length quadrature.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::invariants;
use crate::linalg::{self, C64};
use crate::newton_alpha;
use crate::polysys::{HomogeneousSystem, ProjectivePoint};

/// A `C^1` path of systems over a closed interval. The tracker only talks to paths
/// through this trait.
pub trait HomotopyPath: Send + Sync {
    fn domain(&self) -> (f64, f64);

    fn at(&self, t: f64) -> Result<HomogeneousSystem>;

    fn derivative_at(&self, t: f64) -> Result<HomogeneousSystem>;

    /// `||f'_t||_{f_t}`: the part of the velocity orthogonal to `f_t`, divided by `||f_t||`.
    fn speed(&self, t: f64) -> Result<f64> {
        let f = self.at(t)?;
        let nf2 = f.bw_norm().powi(2);
        if nf2 == 0.0 {
            return Err(Error::ZeroSystem { t });
        }
        let df = self.derivative_at(t)?;
        let coef = df.bw_inner(&f)? / nf2;
        let perp = HomogeneousSystem::combine(C64::new(1.0, 0.0), &df, -coef, &f)?;
        Ok(perp.bw_norm() / nf2.sqrt())
    }

    fn check_time(&self, t: f64) -> Result<()> {
        let (a, b) = self.domain();
        if t >= a && t <= b {
            Ok(())
        } else {
            Err(Error::TimeOutOfDomain { t, a, b })
        }
    }
}

/// `f_t = (1 - tau) f_start + tau f_end` with `tau = (t - a) / (b - a)`.
#[derive(Clone, Debug)]
pub struct LinearHomotopy {
    f_start: HomogeneousSystem,
    f_end: HomogeneousSystem,
    a: f64,
    b: f64,
    // Gram data for the closed-form speed
    start_sq: f64,
    dir_sq: f64,
    dir_start_re: f64,
    gram: f64,
}

impl LinearHomotopy {
    pub fn new(f_start: HomogeneousSystem, f_end: HomogeneousSystem) -> Result<Self> {
        Self::with_domain(f_start, f_end, 0.0, 1.0)
    }

    pub fn with_domain(
        f_start: HomogeneousSystem,
        f_end: HomogeneousSystem,
        a: f64,
        b: f64,
    ) -> Result<Self> {
        if !f_start.same_shape(&f_end) {
            return Err(Error::DegreeMismatch);
        }
        if !(a < b) || !a.is_finite() || !b.is_finite() {
            return Err(Error::ParameterOutOfRange {
                name: "domain",
                value: b - a,
                reason: "need a finite interval with a < b",
            });
        }
        let one = C64::new(1.0, 0.0);
        let dir = HomogeneousSystem::combine(-one, &f_start, one, &f_end)?;
        let start_sq = f_start.bw_norm().powi(2);
        let dir_sq = dir.bw_norm().powi(2);
        let dir_start = dir.bw_inner(&f_start)?;
        // ||a||^2 ||c||^2 - |<c,a>|^2 through the explicit orthogonal part of c
        let gram = if start_sq > 0.0 {
            let perp = HomogeneousSystem::combine(one, &dir, -dir_start / start_sq, &f_start)?;
            start_sq * perp.bw_norm().powi(2)
        } else {
            0.0
        };
        Ok(Self {
            f_start,
            f_end,
            a,
            b,
            start_sq,
            dir_sq,
            dir_start_re: dir_start.re,
            gram,
        })
    }

    pub fn f_start(&self) -> &HomogeneousSystem {
        &self.f_start
    }

    pub fn f_end(&self) -> &HomogeneousSystem {
        &self.f_end
    }

    fn tau(&self, t: f64) -> f64 {
        (t - self.a) / (self.b - self.a)
    }
}

impl HomotopyPath for LinearHomotopy {
    fn domain(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    fn at(&self, t: f64) -> Result<HomogeneousSystem> {
        self.check_time(t)?;
        let tau = self.tau(t);
        let f = HomogeneousSystem::combine(
            C64::new(1.0 - tau, 0.0),
            &self.f_start,
            C64::new(tau, 0.0),
            &self.f_end,
        )?;
        if f.bw_norm() == 0.0 {
            return Err(Error::ZeroSystem { t });
        }
        Ok(f)
    }

    fn derivative_at(&self, t: f64) -> Result<HomogeneousSystem> {
        self.check_time(t)?;
        let s = 1.0 / (self.b - self.a);
        HomogeneousSystem::combine(
            C64::new(-s, 0.0),
            &self.f_start,
            C64::new(s, 0.0),
            &self.f_end,
        )
    }

    fn speed(&self, t: f64) -> Result<f64> {
        self.check_time(t)?;
        let tau = self.tau(t);
        let q = self.start_sq + 2.0 * tau * self.dir_start_re + tau * tau * self.dir_sq;
        if !(q > 0.0) {
            return Err(Error::ZeroSystem { t });
        }
        Ok(self.gram.sqrt() / (q * (self.b - self.a)))
    }
}

const SIMPSON_MAX_DEPTH: u32 = 48;

/// `int_{t0}^{t1} ||f'_t||_{f_t} dt` by adaptive Simpson quadrature to absolute `tol`.
pub fn arc_length<H: HomotopyPath + ?Sized>(h: &H, t0: f64, t1: f64, tol: f64) -> Result<f64> {
    h.check_time(t0)?;
    h.check_time(t1)?;
    if t1 < t0 {
        return Err(Error::ParameterOutOfRange {
            name: "t1",
            value: t1,
            reason: "need t0 <= t1",
        });
    }
    if !(tol > 0.0) {
        return Err(Error::ParameterOutOfRange {
            name: "tol",
            value: tol,
            reason: "quadrature tolerance must be positive",
        });
    }
    if t0 == t1 {
        return Ok(0.0);
    }
    let (fa, fb) = (h.speed(t0)?, h.speed(t1)?);
    let m = 0.5 * (t0 + t1);
    let fm = h.speed(m)?;
    let whole = (t1 - t0) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(h, t0, t1, fa, fm, fb, whole, tol, 0)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<H: HomotopyPath + ?Sized>(
    h: &H,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (h.speed(lm)?, h.speed(rm)?);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let err = left + right - whole;
    if err.abs() <= 15.0 * tol {
        return Ok(left + right + err / 15.0);
    }
    if depth >= SIMPSON_MAX_DEPTH || m <= a || m >= b {
        return Err(Error::QuadratureFailure { t0: a, t1: b });
    }
    Ok(
        simpson_step(h, a, m, fa, flm, fm, left, tol / 2.0, depth + 1)?
            + simpson_step(h, m, b, fm, frm, fb, right, tol / 2.0, depth + 1)?,
    )
}

/// Condition length between consecutive samples of a lifted path.
#[derive(Clone, Debug, PartialEq)]
pub struct ConditionProfile {
    pub times: Vec<f64>,
    /// `increments[i]` covers `[times[i], times[i+1]]`.
    pub increments: Vec<f64>,
    pub total: f64,
}

const FD_STEP: f64 = 1e-5;
const MAX_GRID_LEVEL: u32 = 14;

/// `z` rotated so that `<z, reference>` is real and non-negative.
pub(crate) fn phase_align(z: &[C64], reference: &[C64]) -> Vec<C64> {
    let c = linalg::inner(reference, z);
    if c.norm() == 0.0 {
        return z.to_vec();
    }
    linalg::scale(z, c / c.norm())
}

/// `sqrt(||f'_t||_{f_t}^2 + ||zeta'_t||^2) mu(f_t, zeta_t)` with `zeta_t` refined from `seed`.
fn condition_integrand<H: HomotopyPath + ?Sized>(h: &H, t: f64, seed: &[C64]) -> Result<f64> {
    let (a, b) = h.domain();
    let zeta_at = |s: f64, from: &[C64]| -> Result<Vec<C64>> {
        Ok(newton_alpha::refine_zero(&h.at(s)?, from)?.into_coords())
    };
    let z = zeta_at(t, seed)?;
    let step = FD_STEP * (b - a);
    let deriv: Vec<C64> = if t - step >= a && t + step <= b {
        let zp = phase_align(&zeta_at(t + step, &z)?, &z);
        let zm = phase_align(&zeta_at(t - step, &z)?, &z);
        zp.iter()
            .zip(&zm)
            .map(|(p, m)| (p - m) / (2.0 * step))
            .collect()
    } else {
        // second-order one-sided difference pointing into the domain
        let s = if t - step < a { step } else { -step };
        let z1 = phase_align(&zeta_at(t + s, &z)?, &z);
        let z2 = phase_align(&zeta_at(t + 2.0 * s, &z)?, &z);
        (0..z.len())
            .map(|i| (-3.0 * z[i] + 4.0 * z1[i] - z2[i]) / (2.0 * s))
            .collect()
    };
    let radial = linalg::inner(&deriv, &z);
    let tangent: Vec<C64> = deriv
        .iter()
        .zip(&z)
        .map(|(d, zi)| d - radial * zi)
        .collect();
    let zeta_speed = linalg::norm(&tangent);
    let mu = invariants::mu(&h.at(t)?, &z);
    if !mu.is_finite() {
        return Err(Error::RankDeficient { ratio: 0.0 });
    }
    Ok(h.speed(t)?.hypot(zeta_speed) * mu)
}

fn composite_simpson(values: &[f64], width: f64) -> f64 {
    let m = values.len() - 1;
    let hstep = width / m as f64;
    let mut s = values[0] + values[m];
    for (i, v) in values.iter().enumerate().take(m).skip(1) {
        s += if i % 2 == 1 { 4.0 * v } else { 2.0 * v };
    }
    s * hstep / 3.0
}

/// Condition length of the path lifted through the samples, interval by interval.
/// Each interval is integrated by composite Simpson on a grid that is doubled until
/// the integral moves by less than its share of `tol`.
pub fn condition_profile<H: HomotopyPath + ?Sized>(
    h: &H,
    samples: &[(f64, ProjectivePoint)],
    tol: f64,
) -> Result<ConditionProfile> {
    if !(tol > 0.0) {
        return Err(Error::ParameterOutOfRange {
            name: "tol",
            value: tol,
            reason: "quadrature tolerance must be positive",
        });
    }
    for (t, _) in samples {
        h.check_time(*t)?;
    }
    if samples.windows(2).any(|w| !(w[0].0 < w[1].0)) {
        return Err(Error::ParameterOutOfRange {
            name: "samples",
            value: f64::NAN,
            reason: "sample times must be strictly increasing",
        });
    }
    let times: Vec<f64> = samples.iter().map(|s| s.0).collect();
    if samples.len() < 2 {
        return Ok(ConditionProfile {
            times,
            increments: Vec::new(),
            total: 0.0,
        });
    }
    let span = times[times.len() - 1] - times[0];
    let mut increments = Vec::with_capacity(samples.len() - 1);
    for w in samples.windows(2) {
        let ((t0, seed), (t1, _)) = (&w[0], &w[1]);
        let width = t1 - t0;
        let share = tol * width / span;
        let node = |k: usize, m: usize| t0 + width * k as f64 / m as f64;
        let mut m = 4usize;
        let mut values = (0..=m)
            .map(|k| condition_integrand(h, node(k, m), seed))
            .collect::<Result<Vec<f64>>>()?;
        let mut estimate = composite_simpson(&values, width);
        let mut level = 2;
        loop {
            let m2 = 2 * m;
            let mut refined = Vec::with_capacity(m2 + 1);
            for (k, v) in values.iter().take(m).enumerate() {
                refined.push(*v);
                refined.push(condition_integrand(h, node(2 * k + 1, m2), seed)?);
            }
            refined.push(values[m]);
            let next = composite_simpson(&refined, width);
            let change = (next - estimate).abs();
            values = refined;
            m = m2;
            estimate = next;
            level += 1;
            if change < share {
                break;
            }
            if level > MAX_GRID_LEVEL {
                return Err(Error::QuadratureFailure { t0: *t0, t1: *t1 });
            }
        }
        increments.push(estimate);
    }
    let total = increments.iter().sum();
    Ok(ConditionProfile {
        times,
        increments,
        total,
    })
}

/// Total of [`condition_profile`].
pub fn condition_length<H: HomotopyPath + ?Sized>(
    h: &H,
    samples: &[(f64, ProjectivePoint)],
    tol: f64,
) -> Result<f64> {
    condition_profile(h, samples, tol).map(|p| p.total)
}

/// A start system together with known zeros.
#[derive(Clone, Debug)]
pub struct StartPair {
    pub system: HomogeneousSystem,
    pub zeros: Vec<ProjectivePoint>,
}

fn check_degrees(degrees: &[u32]) -> Result<()> {
    if degrees.is_empty() || degrees.contains(&0) {
        return Err(Error::InvalidSystem(
            "need at least one equation and all degrees >= 1".into(),
        ));
    }
    Ok(())
}

/// `f_i = sqrt(d_i) z_0^{d_i - 1} z_i` with its zero `e_0`.
pub fn canonical_start(degrees: &[u32]) -> Result<StartPair> {
    check_degrees(degrees)?;
    let n = degrees.len();
    let terms = degrees
        .iter()
        .enumerate()
        .map(|(i, &d)| {
            let mut e = vec![0u32; n + 1];
            e[0] = d - 1;
            e[i + 1] += 1;
            vec![(e, C64::new(f64::from(d).sqrt(), 0.0))]
        })
        .collect();
    Ok(StartPair {
        system: HomogeneousSystem::from_terms(degrees, terms)?,
        zeros: vec![ProjectivePoint::unit(n + 1, 0)],
    })
}

/// `g_i = z_i^{d_i} - z_0^{d_i}` with all of its `prod d_i` zeros `(1, w_1, ..., w_n)`.
pub fn unit_roots_start(degrees: &[u32]) -> Result<StartPair> {
    check_degrees(degrees)?;
    let n = degrees.len();
    let terms = degrees
        .iter()
        .enumerate()
        .map(|(i, &d)| {
            let mut lead = vec![0u32; n + 1];
            lead[i + 1] = d;
            let mut tail = vec![0u32; n + 1];
            tail[0] = d;
            vec![(lead, C64::new(1.0, 0.0)), (tail, C64::new(-1.0, 0.0))]
        })
        .collect();
    let system = HomogeneousSystem::from_terms(degrees, terms)?;
    let mut zeros = vec![vec![C64::new(1.0, 0.0)]];
    for &d in degrees {
        let roots: Vec<C64> = (0..d)
            .map(|k| C64::from_polar(1.0, 2.0 * PI * f64::from(k) / f64::from(d)))
            .collect();
        zeros = zeros
            .into_iter()
            .flat_map(|prefix| {
                roots.iter().map(move |r| {
                    let mut p = prefix.clone();
                    p.push(*r);
                    p
                })
            })
            .collect();
    }
    let zeros = zeros
        .into_iter()
        .map(|z| ProjectivePoint::new(z).map(|p| p.normalized()))
        .collect::<Result<Vec<_>>>()?;
    Ok(StartPair { system, zeros })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling;
    use approx::assert_relative_eq;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    /// Two BW-orthonormal quadrics in two variables.
    fn orthonormal_pair() -> (HomogeneousSystem, HomogeneousSystem) {
        let f = HomogeneousSystem::from_terms(&[2], vec![vec![(vec![2, 0], c(1.0))]]).unwrap();
        let g = HomogeneousSystem::from_terms(&[2], vec![vec![(vec![0, 2], c(1.0))]]).unwrap();
        (f, g)
    }

    #[test]
    fn at_and_derivative() {
        let (f, g) = orthonormal_pair();
        let h = LinearHomotopy::new(f.clone(), g.clone()).unwrap();
        let diff = HomogeneousSystem::combine(c(1.0), &h.at(0.0).unwrap(), c(-1.0), &f).unwrap();
        assert_eq!(diff.bw_norm(), 0.0);
        let mid = h.at(0.5).unwrap();
        assert_eq!(mid.equations()[0][0].coeff, c(0.5));
        assert_eq!(h.derivative_at(0.1).unwrap(), h.derivative_at(0.9).unwrap());
        assert!(matches!(h.at(1.5), Err(Error::TimeOutOfDomain { .. })));
    }

    #[test]
    fn speed_examples() {
        let (f, g) = orthonormal_pair();
        let h = LinearHomotopy::new(f.clone(), g).unwrap();
        assert_relative_eq!(h.speed(0.0).unwrap(), 1.0, epsilon = 1e-15);
        let radial = LinearHomotopy::new(f.clone(), f.scaled(c(2.0))).unwrap();
        assert_eq!(radial.speed(0.3).unwrap(), 0.0);
        assert_eq!(arc_length(&radial, 0.0, 1.0, 1e-10).unwrap(), 0.0);
    }

    #[test]
    fn closed_form_speed_matches_projection() {
        struct Generic(LinearHomotopy);
        impl HomotopyPath for Generic {
            fn domain(&self) -> (f64, f64) {
                self.0.domain()
            }
            fn at(&self, t: f64) -> Result<HomogeneousSystem> {
                self.0.at(t)
            }
            fn derivative_at(&self, t: f64) -> Result<HomogeneousSystem> {
                self.0.derivative_at(t)
            }
        }
        let mut rng = sampling::rng_for(21, 0);
        let f = sampling::bw_gaussian_system(&mut rng, &[2, 3]);
        let g = sampling::bw_gaussian_system(&mut rng, &[2, 3]);
        let h = LinearHomotopy::with_domain(f, g, -1.0, 2.0).unwrap();
        let generic = Generic(h.clone());
        for t in [-1.0, -0.3, 0.5, 1.7, 2.0] {
            assert_relative_eq!(
                h.speed(t).unwrap(),
                generic.speed(t).unwrap(),
                max_relative = 1e-10
            );
        }
    }

    #[test]
    fn arc_length_orthonormal_endpoints() {
        // p(t) = (1-t) f + t g is a quarter circle in the plane spanned by f and g
        let (f, g) = orthonormal_pair();
        let h = LinearHomotopy::new(f, g).unwrap();
        assert_relative_eq!(
            arc_length(&h, 0.0, 1.0, 1e-12).unwrap(),
            std::f64::consts::FRAC_PI_2,
            epsilon = 1e-10
        );
        assert_eq!(arc_length(&h, 0.4, 0.4, 1e-12).unwrap(), 0.0);
    }

    #[test]
    fn condition_length_of_constant_path_is_zero() {
        let pair = canonical_start(&[2, 2]).unwrap();
        let h = LinearHomotopy::new(pair.system.clone(), pair.system.clone()).unwrap();
        let e0 = pair.zeros[0].clone();
        let l =
            condition_length(&h, &[(0.0, e0.clone()), (0.5, e0.clone()), (1.0, e0)], 1e-8).unwrap();
        assert!(l.abs() < 1e-9, "{l}");
    }

    #[test]
    fn start_pairs() {
        let pair = canonical_start(&[2, 3]).unwrap();
        let eq = pair.system.equations();
        assert_eq!(eq[0][0].exponents, vec![1, 1, 0]);
        assert_relative_eq!(eq[1][0].coeff.re, 3f64.sqrt());
        assert_eq!(eq[1][0].exponents, vec![2, 0, 1]);
        assert_relative_eq!(
            invariants::mu(&pair.system, &pair.zeros[0]),
            2f64.sqrt(),
            epsilon = 1e-12
        );

        let pair = unit_roots_start(&[3]).unwrap();
        assert_eq!(pair.zeros.len(), 3);
        let pair = unit_roots_start(&[2, 3]).unwrap();
        assert_eq!(pair.zeros.len(), 6);
        for z in &pair.zeros {
            assert!(linalg::norm(&pair.system.evaluate(z).unwrap()) <= 1e-12);
            let cert = newton_alpha::certify(&pair.system, z, newton_alpha::APPROX_ZERO_THRESHOLD);
            assert!(cert.certified && cert.mu.is_finite());
        }
        assert!(canonical_start(&[]).is_err());
        assert!(unit_roots_start(&[0]).is_err());
    }
}
