//! Projective Newton operator and alpha-theory certification.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::invariants::{self, gamma_factor};
use crate::linalg::{self, CMat, C64};
use crate::polysys::{HomogeneousSystem, ProjectivePoint};
use crate::projgeom::{self, OrthoFrame, RestrictedInverse};

/// Threshold below which a point is certified as an approximate zero.
pub const APPROX_ZERO_THRESHOLD: f64 = 0.049;
pub const BETA_DIST_CONSTANT: f64 = 1.128;
pub const ITERATE_BETA_CONSTANT: f64 = 1.23;
/// Number of Newton iterations used to locate an associated zero.
pub const REFINE_ITERATIONS: usize = 20;
/// Relative residual `||f(zeta)|| / ||f||` a refined zero must reach.
pub const REFINE_RESIDUAL: f64 = 1e-12;

/// `(13 - 3 sqrt 17) / 4`, the zero-existence threshold.
pub fn alpha0() -> f64 {
    (13.0 - 3.0 * 17f64.sqrt()) / 4.0
}

/// `1/4 + (1 - sqrt((1+a)^2 - 8a)) / (4a)`, evaluated without cancellation near 0.
pub fn sigma(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= alpha0()) {
        return Err(Error::ParameterOutOfRange {
            name: "alpha",
            value: alpha,
            reason: "sigma is defined on (0, alpha0]",
        });
    }
    Ok(sigma_unchecked(alpha))
}

fn sigma_unchecked(alpha: f64) -> f64 {
    let root = ((1.0 + alpha).powi(2) - 8.0 * alpha).sqrt();
    0.25 + (6.0 - alpha) / (4.0 * (1.0 + root))
}

/// `1 - 4u + 2u^2`.
pub fn psi(u: f64) -> Result<f64> {
    if !(u >= 0.0) {
        return Err(Error::ParameterOutOfRange {
            name: "u",
            value: u,
            reason: "psi is evaluated for u >= 0",
        });
    }
    Ok(1.0 - 4.0 * u + 2.0 * u * u)
}

/// `x - Df(x)|_{x^perp}^{-1} f(x)`, renormalized to unit length.
pub fn newton_step(f: &HomogeneousSystem, x: &[C64]) -> Result<ProjectivePoint> {
    let inv = RestrictedInverse::new(f, x)?;
    newton_step_with(&inv, f, x)
}

pub(crate) fn newton_step_with(
    inv: &RestrictedInverse,
    f: &HomogeneousSystem,
    x: &[C64],
) -> Result<ProjectivePoint> {
    let step = inv.solve(&f.evaluate(x)?);
    Ok(ProjectivePoint::new(linalg::sub(x, &step))?.normalized())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlphaCertificate {
    /// `(D^{3/2}/2) mu beta0`, an upper bound for `alpha_0(f, x)`.
    #[serde(with = "crate::float_serde")]
    pub alpha_bound: f64,
    pub certified: bool,
    pub threshold_used: f64,
    /// `sigma(alpha_bound) beta0`, a bound on `d_T(x, zeta)` when certified.
    #[serde(with = "crate::float_serde")]
    pub zero_radius_tan: f64,
    #[serde(with = "crate::float_serde")]
    pub mu: f64,
    #[serde(with = "crate::float_serde")]
    pub beta0: f64,
    /// Certified with `alpha_bound <= 0.049`, so Newton contracts quadratically from `x`.
    pub approximate_zero: bool,
}

/// Certifies `x` against `threshold`; thresholds above `alpha0` never certify.
pub fn certify(f: &HomogeneousSystem, x: &[C64], threshold: f64) -> AlphaCertificate {
    let mu = invariants::mu(f, x);
    let beta0 = if mu.is_finite() {
        invariants::beta0(f, x).unwrap_or(f64::INFINITY)
    } else {
        f64::INFINITY
    };
    let alpha_bound = if beta0 == 0.0 {
        0.0
    } else {
        gamma_factor(f) * mu * beta0
    };
    let certified = alpha_bound.is_finite() && alpha_bound <= threshold && threshold <= alpha0();
    let zero_radius_tan = if certified {
        sigma_unchecked(alpha_bound) * beta0
    } else {
        f64::INFINITY
    };
    AlphaCertificate {
        alpha_bound,
        certified,
        threshold_used: threshold,
        zero_radius_tan,
        mu,
        beta0,
        approximate_zero: certified && alpha_bound <= APPROX_ZERO_THRESHOLD,
    }
}

fn relative_residual(f: &HomogeneousSystem, z: &[C64]) -> Result<f64> {
    Ok(linalg::norm(&f.evaluate(z)?) / f.bw_norm())
}

/// Runs [`REFINE_ITERATIONS`] Newton steps from `x` and gates the unit-norm result on
/// its residual.
pub fn refine_zero(f: &HomogeneousSystem, x: &[C64]) -> Result<ProjectivePoint> {
    refine_zero_iters(f, x, REFINE_ITERATIONS)
}

pub fn refine_zero_iters(
    f: &HomogeneousSystem,
    x: &[C64],
    iters: usize,
) -> Result<ProjectivePoint> {
    let mut z = ProjectivePoint::new(x.to_vec())?.normalized();
    for _ in 0..iters {
        let next = newton_step(f, &z).map_err(|_| Error::RefinementFailed {
            residual: relative_residual(f, &z).unwrap_or(f64::INFINITY),
        })?;
        let moved = projgeom::d_riemann(&z, &next)?;
        z = next;
        if moved < 1e-15 {
            break;
        }
    }
    let residual = relative_residual(f, &z)?;
    if !(residual <= REFINE_RESIDUAL) {
        return Err(Error::RefinementFailed { residual });
    }
    Ok(z)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BetaDistVerdict {
    pub beta0: f64,
    pub d_tan: f64,
    pub bound: f64,
    pub holds: bool,
}

/// Checks `beta0(f, x) <= 1.128 d_T(x, zeta)` for the associated zero `zeta`.
pub fn beta_dist_check(f: &HomogeneousSystem, x: &[C64]) -> Result<BetaDistVerdict> {
    let cert = certify(f, x, APPROX_ZERO_THRESHOLD);
    if !cert.certified {
        return Err(Error::ParameterOutOfRange {
            name: "alpha_bound",
            value: cert.alpha_bound,
            reason: "requires alpha_bound <= 0.049",
        });
    }
    let zeta = refine_zero(f, x).map_err(|e| Error::Oracle(format!("zero refinement: {e}")))?;
    let d_tan = projgeom::d_tan(x, &zeta)?;
    let bound = BETA_DIST_CONSTANT * d_tan;
    Ok(BetaDistVerdict {
        beta0: cert.beta0,
        d_tan,
        bound,
        holds: cert.beta0 <= bound + 1e-10,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterateBetaVerdict {
    pub a: f64,
    pub beta0_x: f64,
    pub beta0_y: f64,
    pub bound: f64,
    pub holds: bool,
}

/// Checks `beta0(f, N_f(x)) < 1.23 a beta0(f, x)` with `a = (D^{3/2}/2) mu beta0 <= 1/20`.
pub fn iterate_beta_check(f: &HomogeneousSystem, x: &[C64]) -> Result<IterateBetaVerdict> {
    let cert = certify(f, x, APPROX_ZERO_THRESHOLD);
    let a = cert.alpha_bound;
    if !(a <= 1.0 / 20.0) {
        return Err(Error::ParameterOutOfRange {
            name: "a",
            value: a,
            reason: "requires (D^{3/2}/2) mu beta0 <= 1/20",
        });
    }
    let y = newton_step(f, x)?;
    let beta0_y = invariants::beta0(f, &y)?;
    let bound = ITERATE_BETA_CONSTANT * a * cert.beta0;
    Ok(IterateBetaVerdict {
        a,
        beta0_x: cert.beta0,
        beta0_y,
        bound,
        holds: beta0_y <= bound + 1e-10,
    })
}

/// Affine coordinates `X -> base + basis X` on the tangent space at a unit point.
#[derive(Clone, Debug)]
pub struct AffineChart {
    pub base: ProjectivePoint,
    pub frame: OrthoFrame,
}

impl AffineChart {
    pub fn new(x: &[C64]) -> Result<Self> {
        let frame = projgeom::ortho_frame(x)?;
        let base = ProjectivePoint::new(frame.base.clone())?;
        Ok(Self { base, frame })
    }
}

/// `F(X) = f(base + basis X)` and `DF(X) = Df(base + basis X) basis`.
pub fn affine_localize(
    f: &HomogeneousSystem,
    chart: &AffineChart,
    big_x: &[C64],
) -> Result<(Vec<C64>, CMat)> {
    if big_x.len() != f.n() {
        return Err(Error::DimensionMismatch {
            expected: f.n(),
            found: big_x.len(),
        });
    }
    let p = chart.frame.lift(big_x);
    Ok((f.evaluate(&p)?, f.jacobian(&p)? * &chart.frame.basis))
}

/// `beta(F, X) = ||DF(X)^{-1} F(X)||` in a chart.
pub fn affine_beta(f: &HomogeneousSystem, chart: &AffineChart, big_x: &[C64]) -> Result<f64> {
    let (value, jac) = affine_localize(f, chart, big_x)?;
    let lu = jac.lu();
    let step = lu
        .solve(&DVector::from_column_slice(&value))
        .ok_or(Error::RankDeficient { ratio: 0.0 })?;
    Ok(step.norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn sqrt2_z0z1() -> HomogeneousSystem {
        HomogeneousSystem::from_terms(&[2], vec![vec![(vec![1, 1], c(2f64.sqrt()))]]).unwrap()
    }

    #[test]
    fn constants() {
        assert_relative_eq!(alpha0(), 0.157_670_780_786_754_78, epsilon = 1e-15);
        assert_relative_eq!(sigma(1e-12).unwrap(), 1.0, epsilon = 1e-10);
        assert_relative_eq!(0.049 * sigma(0.049).unwrap(), 0.0518, epsilon = 1e-4);
        assert_eq!(psi(0.0).unwrap(), 1.0);
        assert_relative_eq!(psi(0.05).unwrap(), 0.805, epsilon = 1e-15);
        assert!(sigma(0.0).is_err() && sigma(0.2).is_err() && psi(-1.0).is_err());
    }

    #[test]
    fn sigma_matches_literal_form_away_from_zero() {
        for a in [1e-3, 0.01, 0.049, 0.1, alpha0()] {
            let literal = 0.25 + (1.0 - ((1.0 + a) * (1.0 + a) - 8.0 * a).sqrt()) / (4.0 * a);
            assert_relative_eq!(sigma(a).unwrap(), literal, max_relative = 1e-11);
        }
    }

    #[test]
    fn sigma_increasing_psi_decreasing() {
        let mut prev = 1.0;
        for i in 1..=200 {
            let s = sigma(alpha0() * f64::from(i) / 200.0).unwrap();
            assert!(s > prev);
            prev = s;
        }
        let top = (2.0 - 2f64.sqrt()) / 2.0;
        let mut prev = 2.0;
        for i in 0..=200 {
            let p = psi(top * f64::from(i) / 200.0).unwrap();
            assert!(p < prev);
            prev = p;
        }
    }

    #[test]
    fn newton_step_example() {
        let f = sqrt2_z0z1();
        let y = newton_step(&f, &[c(1.0), c(0.1)]).unwrap();
        // the image is proportional to (1/0.99, -0.001/0.99)
        let ratio = y[1] / y[0];
        assert_relative_eq!(ratio.re, -0.001, epsilon = 1e-15);
        assert!(ratio.im.abs() < 1e-15);
        let z = newton_step(&f, &y).unwrap();
        assert!((z[1] / z[0]).norm() < 1e-8);
    }

    #[test]
    fn newton_fixes_exact_zero() {
        let f = sqrt2_z0z1();
        let y = newton_step(&f, &[c(1.0), c(0.0)]).unwrap();
        assert_eq!(projgeom::d_riemann(&y, &[c(1.0), c(0.0)]).unwrap(), 0.0);
    }

    #[test]
    fn certify_examples() {
        let f = sqrt2_z0z1();
        let cert = certify(&f, &[c(1.0), c(0.0)], APPROX_ZERO_THRESHOLD);
        assert!(cert.certified && cert.approximate_zero);
        assert_eq!((cert.alpha_bound, cert.zero_radius_tan), (0.0, 0.0));

        let x = [c(1.0), c(0.1)];
        let cert = certify(&f, &x, APPROX_ZERO_THRESHOLD);
        let m = invariants::mu(&f, &x);
        assert_relative_eq!(
            cert.alpha_bound,
            2f64.sqrt() * m * 0.1 / 0.99,
            max_relative = 1e-12
        );
        assert_eq!(cert.certified, cert.alpha_bound <= 0.049);

        let deg = HomogeneousSystem::from_terms(&[2], vec![vec![(vec![0, 2], c(1.0))]]).unwrap();
        let cert = certify(&deg, &[c(1.0), c(0.0)], APPROX_ZERO_THRESHOLD);
        assert!(!cert.certified && cert.alpha_bound.is_infinite());
    }

    #[test]
    fn beta_dist_example() {
        let f = sqrt2_z0z1();
        let x = [c(1.0), c(0.03)];
        let v = beta_dist_check(&f, &x).unwrap();
        assert_relative_eq!(v.d_tan, 0.03, max_relative = 1e-10);
        assert_relative_eq!(v.beta0, 0.03 / (1.0 - 0.0009), max_relative = 1e-12);
        assert!(v.holds);
        let v = beta_dist_check(&f, &[c(1.0), c(0.0)]).unwrap();
        assert!(v.holds && v.beta0 == 0.0);
    }

    #[test]
    fn iterate_beta_example() {
        let f = sqrt2_z0z1();
        let v = iterate_beta_check(&f, &[c(1.0), c(0.01)]).unwrap();
        assert!(v.holds);
        assert!(v.beta0_y < 0.1 * v.bound);
        assert!(iterate_beta_check(&f, &[c(1.0), c(0.5)]).is_err());
    }

    #[test]
    fn affine_beta_matches_beta0() {
        let f = sqrt2_z0z1();
        let x = ProjectivePoint::from_real(&[1.0, 0.2])
            .unwrap()
            .normalized();
        let chart = AffineChart::new(&x).unwrap();
        let b = affine_beta(&f, &chart, &[c(0.0)]).unwrap();
        assert_relative_eq!(b, invariants::beta0(&f, &x).unwrap(), max_relative = 1e-12);
        let (value, jac) = affine_localize(&f, &chart, &[c(0.0)]).unwrap();
        assert!(linalg::norm(&linalg::sub(&value, &f.evaluate(&x).unwrap())) < 1e-15);
        assert!((jac - f.jacobian(&x).unwrap() * &chart.frame.basis).norm() < 1e-14);
    }
}
