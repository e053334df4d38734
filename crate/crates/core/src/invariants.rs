//! Condition number and the Newton-type invariants built on the restricted Jacobian.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, C64};
use crate::polysys::HomogeneousSystem;
use crate::projgeom::{self, RestrictedInverse, RANK_RATIO};

/// Constants of the two-sided condition number comparison.
pub const SANDWICH_LOWER_U: f64 = 3.805;
pub const SANDWICH_UPPER_U: f64 = 3.504;
/// Largest gauge value the comparison theorem admits.
pub const GAUGE_LIMIT: f64 = 1.0 / 20.0;
/// Additive slack used by the verdicts in this module.
pub const SLACK: f64 = 1e-9;

fn d_max(f: &HomogeneousSystem) -> f64 {
    f64::from(f.max_degree())
}

/// `D^{3/2} / 2`, the factor turning `mu` into an upper bound on `gamma_0`.
pub fn gamma_factor(f: &HomogeneousSystem) -> f64 {
    d_max(f).powf(1.5) / 2.0
}

/// `||f|| / sigma_min(diag(d_i^{-1/2} ||x||^{1-d_i}) Df(x)|_{x^perp})`, or `+inf` when
/// the restricted Jacobian is numerically singular.
pub fn mu(f: &HomogeneousSystem, x: &[C64]) -> f64 {
    let Ok(frame) = projgeom::ortho_frame(x) else {
        return f64::INFINITY;
    };
    let Ok(mut jac) = f.jacobian(x) else {
        return f64::INFINITY;
    };
    let nx = linalg::norm(x);
    for (i, &d) in f.degrees().iter().enumerate() {
        let d = f64::from(d);
        let s = 1.0 / (d.sqrt() * nx.powf(d - 1.0));
        jac.row_mut(i).scale_mut(s);
    }
    let m = jac * &frame.basis;
    let (smax, smin) = linalg::extreme_singular_values(&m);
    if !(smax > 0.0) || !(smin / smax > RANK_RATIO) {
        return f64::INFINITY;
    }
    f.bw_norm() / smin
}

/// `||x||^{-1} ||Df(x)|_{x^perp}^{-1} f(x)||`.
pub fn beta0(f: &HomogeneousSystem, x: &[C64]) -> Result<f64> {
    let inv = RestrictedInverse::new(f, x)?;
    let fx = f.evaluate(x)?;
    Ok(linalg::norm(&inv.solve(&fx)) / linalg::norm(x))
}

/// `||x||^{-1} ||Df(x)|_{x^perp}^{-1} diag(d_i) f(x)||`.
pub fn delta(f: &HomogeneousSystem, x: &[C64]) -> Result<f64> {
    let inv = RestrictedInverse::new(f, x)?;
    let rhs: Vec<C64> = f
        .evaluate(x)?
        .iter()
        .zip(f.degrees())
        .map(|(v, &d)| v * f64::from(d))
        .collect();
    Ok(linalg::norm(&inv.solve(&rhs)) / linalg::norm(x))
}

/// `||x||^{-1} ||Df_t(x)|_{x^perp}^{-1} (f_t(x) - f_s(x))||`.
pub fn phi(f_t: &HomogeneousSystem, f_s: &HomogeneousSystem, x: &[C64]) -> Result<f64> {
    if !f_t.same_shape(f_s) {
        return Err(Error::DegreeMismatch);
    }
    let inv = RestrictedInverse::new(f_t, x)?;
    phi_with(&inv, f_t, f_s, x)
}

/// [`phi`] reusing a factorization of `Df_t(x)|_{x^perp}`.
pub fn phi_with(
    inv: &RestrictedInverse,
    f_t: &HomogeneousSystem,
    f_s: &HomogeneousSystem,
    x: &[C64],
) -> Result<f64> {
    let diff = linalg::sub(&f_t.evaluate(x)?, &f_s.evaluate(x)?);
    Ok(linalg::norm(&inv.solve(&diff)) / linalg::norm(x))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonGauge {
    pub u: f64,
    pub v: f64,
}

/// `u = D^{3/2} mu(f,x) d_R(x,y) / 2` and `v = D^{1/2} mu(f,x) ||f/||f|| - g/||g|| ||`.
pub fn gauges(
    f: &HomogeneousSystem,
    g: &HomogeneousSystem,
    x: &[C64],
    y: &[C64],
) -> Result<ComparisonGauge> {
    if !f.same_shape(g) {
        return Err(Error::DegreeMismatch);
    }
    let m = mu(f, x);
    if !m.is_finite() {
        return Err(Error::RankDeficient { ratio: 0.0 });
    }
    let dr = projgeom::d_riemann(x, y)?;
    let diff = HomogeneousSystem::combine(
        C64::new(1.0 / f.bw_norm(), 0.0),
        f,
        C64::new(-1.0 / g.bw_norm(), 0.0),
        g,
    )?;
    Ok(ComparisonGauge {
        u: gamma_factor(f) * m * dr,
        v: d_max(f).sqrt() * m * diff.bw_norm(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SandwichVerdict {
    pub gauge: ComparisonGauge,
    pub mu_fx: f64,
    pub mu_gy: f64,
    pub lower: f64,
    pub upper: f64,
    pub holds: bool,
    /// `(1 - eps) mu(g,y) <= mu(f,x) <= (1 + eps) mu(g,y)` with `eps = 5 max(u, v)`.
    pub corollary_holds: bool,
}

/// Checks `(1 - 3.805u - v) mu(g,y) <= mu(f,x) <= (1 + 3.504u + v) mu(g,y)`.
pub fn check_sandwich(
    f: &HomogeneousSystem,
    g: &HomogeneousSystem,
    x: &[C64],
    y: &[C64],
) -> Result<SandwichVerdict> {
    let gauge = gauges(f, g, x, y)?;
    let ComparisonGauge { u, v } = gauge;
    if u > GAUGE_LIMIT + 1e-12 || v > GAUGE_LIMIT + 1e-12 {
        return Err(Error::GaugeOutOfRange { u, v });
    }
    let mu_fx = mu(f, x);
    let mu_gy = mu(g, y);
    let lower = (1.0 - SANDWICH_LOWER_U * u - v) * mu_gy;
    let upper = (1.0 + SANDWICH_UPPER_U * u + v) * mu_gy;
    let holds = mu_gy.is_finite() && lower <= mu_fx + SLACK && mu_fx <= upper + SLACK;
    let eps = 5.0 * u.max(v);
    let corollary_holds = mu_gy.is_finite()
        && (1.0 - eps) * mu_gy <= mu_fx + SLACK
        && mu_fx <= (1.0 + eps) * mu_gy + SLACK;
    Ok(SandwichVerdict {
        gauge,
        mu_fx,
        mu_gy,
        lower,
        upper,
        holds,
        corollary_holds,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvariantReport {
    pub mu: f64,
    pub beta0: f64,
    pub delta: f64,
    pub gamma0_bound: f64,
    pub alpha_bound: f64,
}

/// All invariants at `(f, x)`; a singular restricted Jacobian gives infinite entries.
pub fn report(f: &HomogeneousSystem, x: &[C64]) -> Result<InvariantReport> {
    let m = mu(f, x);
    let gamma0_bound = gamma_factor(f) * m;
    if !m.is_finite() {
        return Ok(InvariantReport {
            mu: m,
            beta0: f64::INFINITY,
            delta: f64::INFINITY,
            gamma0_bound,
            alpha_bound: f64::INFINITY,
        });
    }
    let b = beta0(f, x)?;
    Ok(InvariantReport {
        mu: m,
        beta0: b,
        delta: delta(f, x)?,
        gamma0_bound,
        alpha_bound: b * gamma0_bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polysys::ProjectivePoint;
    use approx::assert_relative_eq;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn sqrt2_z0z1() -> HomogeneousSystem {
        HomogeneousSystem::from_terms(&[2], vec![vec![(vec![1, 1], c(2f64.sqrt()))]]).unwrap()
    }

    #[test]
    fn mu_examples() {
        assert_relative_eq!(mu(&sqrt2_z0z1(), &[c(1.0), c(0.0)]), 1.0, epsilon = 1e-14);
        let deg = HomogeneousSystem::from_terms(&[2], vec![vec![(vec![0, 2], c(1.0))]]).unwrap();
        assert!(mu(&deg, &[c(1.0), c(0.0)]).is_infinite());
    }

    #[test]
    fn beta_and_delta_examples() {
        let f = sqrt2_z0z1();
        let x = [c(1.0), c(0.1)];
        assert_relative_eq!(beta0(&f, &x).unwrap(), 0.1 / 0.99, max_relative = 1e-13);
        assert_relative_eq!(delta(&f, &x).unwrap(), 0.2 / 0.99, max_relative = 1e-13);
        let g = f.scaled(C64::new(3.0, 4.0));
        assert_relative_eq!(
            beta0(&g, &x).unwrap(),
            beta0(&f, &x).unwrap(),
            max_relative = 1e-13
        );
        assert_eq!(beta0(&f, &[c(1.0), c(0.0)]).unwrap(), 0.0);
        assert_eq!(delta(&f, &[c(1.0), c(0.0)]).unwrap(), 0.0);
    }

    #[test]
    fn phi_examples() {
        let f = sqrt2_z0z1();
        let e0 = [c(1.0), c(0.0)];
        assert_eq!(phi(&f, &f, &e0).unwrap(), 0.0);
        let shifted = |cc: f64| {
            HomogeneousSystem::from_terms(
                &[2],
                vec![vec![(vec![1, 1], c(2f64.sqrt())), (vec![2, 0], c(cc))]],
            )
            .unwrap()
        };
        let p = phi(&f, &shifted(0.3), &e0).unwrap();
        assert_relative_eq!(p, 0.3 / 2f64.sqrt(), max_relative = 1e-14);
        assert_relative_eq!(
            phi(&f, &shifted(0.6), &e0).unwrap(),
            2.0 * p,
            max_relative = 1e-14
        );
    }

    #[test]
    fn gauge_examples() {
        let f = sqrt2_z0z1();
        let e0 = [c(1.0), c(0.0)];
        let g = gauges(&f, &f, &e0, &e0).unwrap();
        assert_eq!((g.u, g.v), (0.0, 0.0));
        let g = gauges(&f, &f, &e0, &[c(1.0), c(0.01)]).unwrap();
        let expected = 2f64.powf(1.5) / 2.0 * (1.0 / 1.0001f64.sqrt()).acos();
        assert_relative_eq!(g.u, expected, max_relative = 1e-9);
        assert_relative_eq!(g.u, 0.014142, epsilon = 1e-6);
        let minus = f.scaled(c(-1.0));
        let g = gauges(&f, &minus, &e0, &e0).unwrap();
        assert_relative_eq!(g.v, 2.0 * 2f64.sqrt(), max_relative = 1e-14);
    }

    #[test]
    fn sandwich_trivial_and_out_of_range() {
        let f = sqrt2_z0z1();
        let e0 = [c(1.0), c(0.0)];
        let v = check_sandwich(&f, &f, &e0, &e0).unwrap();
        assert!(v.holds && v.corollary_holds);
        assert_eq!(v.mu_fx, v.mu_gy);
        let far = ProjectivePoint::from_real(&[1.0, 0.5]).unwrap();
        assert!(matches!(
            check_sandwich(&f, &f, &e0, &far),
            Err(Error::GaugeOutOfRange { .. })
        ));
    }

    #[test]
    fn report_is_consistent() {
        let f = sqrt2_z0z1();
        let r = report(&f, &[c(1.0), c(0.1)]).unwrap();
        assert_relative_eq!(r.gamma0_bound, 2f64.powf(1.5) / 2.0 * r.mu);
        assert_relative_eq!(r.alpha_bound, r.beta0 * r.gamma0_bound);
    }
}
