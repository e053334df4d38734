//! Brute-force reference computations for tests and acceptance checks. Nothing here
//! is used by the tracker.

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, C64};
use crate::newton_alpha::{self, APPROX_ZERO_THRESHOLD};
use crate::polysys::{HomogeneousSystem, ProjectivePoint};
use crate::projgeom::{self, RestrictedInverse};
use crate::sampling;

#[derive(Clone, Debug, PartialEq)]
pub struct OracleConfig {
    pub fd_step: f64,
    pub samples: usize,
    pub seed: u64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            fd_step: 1e-6,
            samples: 4096,
            seed: 0,
        }
    }
}

impl OracleConfig {
    pub fn validate(&self) -> Result<()> {
        if !(1e-9..=1e-3).contains(&self.fd_step) {
            return Err(Error::ParameterOutOfRange {
                name: "fd_step",
                value: self.fd_step,
                reason: "need 1e-9 <= fd_step <= 1e-3",
            });
        }
        if self.samples < 16 {
            return Err(Error::ParameterOutOfRange {
                name: "samples",
                value: self.samples as f64,
                reason: "need at least 16 samples",
            });
        }
        Ok(())
    }
}

/// Central-difference Jacobian along the real coordinate directions.
pub fn fd_jacobian(f: &HomogeneousSystem, x: &[C64], cfg: &OracleConfig) -> Result<CMat> {
    cfg.validate()?;
    let (n, m) = (f.n(), f.nvars());
    if x.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            found: x.len(),
        });
    }
    let h = cfg.fd_step;
    let mut jac = CMat::zeros(n, m);
    for j in 0..m {
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[j] += h;
        xm[j] -= h;
        // the exactly representable step actually taken
        let width = xp[j].re - xm[j].re;
        let (fp, fm) = (f.evaluate(&xp)?, f.evaluate(&xm)?);
        for i in 0..n {
            jac[(i, j)] = (fp[i] - fm[i]) / width;
        }
    }
    Ok(jac)
}

/// `||x|| ||Df(x)|_{x^perp}^{-1} (D^k f(x)/k!)(v, ..., v)||^{1/(k-1)}`.
fn gamma_term(
    inv: &RestrictedInverse,
    f: &HomogeneousSystem,
    x: &[C64],
    nx: f64,
    k: usize,
    v: &[C64],
) -> f64 {
    let t = f.taylor_term(x, k, v);
    nx * linalg::norm(&inv.solve(&t)).powf(1.0 / (k as f64 - 1.0))
}

fn unit(v: Vec<C64>) -> Vec<C64> {
    let nv = linalg::norm(&v);
    linalg::scale(&v, C64::new(1.0 / nv, 0.0))
}

/// Lower bound for `gamma_0(f, x)`: the best of `cfg.samples` random unit directions
/// per order `k`, improved by 20 steps of numerical gradient ascent on the sphere.
pub fn gamma0_sample(f: &HomogeneousSystem, x: &[C64], cfg: &OracleConfig) -> Result<f64> {
    cfg.validate()?;
    let dmax = f.max_degree() as usize;
    if dmax < 2 {
        return Err(Error::InvalidSystem(
            "gamma0 sampling needs max degree >= 2".into(),
        ));
    }
    let inv = RestrictedInverse::new(f, x)?;
    let nx = linalg::norm(x);
    let m = f.nvars();
    let mut best = 0.0f64;
    for k in 2..=dmax {
        let mut rng = sampling::rng_for(cfg.seed, k as u64);
        let value = |v: &[C64]| gamma_term(&inv, f, x, nx, k, v);
        let mut best_v = sampling::random_unit_point(&mut rng, m).into_coords();
        let mut best_k = value(&best_v);
        for _ in 1..cfg.samples {
            let v = sampling::random_unit_point(&mut rng, m).into_coords();
            let g = value(&v);
            if g > best_k {
                best_k = g;
                best_v = v;
            }
        }
        let mut step = 0.1;
        for _ in 0..20 {
            let h = 1e-7;
            let mut grad = vec![C64::new(0.0, 0.0); m];
            for j in 0..m {
                for dir in [C64::new(1.0, 0.0), C64::new(0.0, 1.0)] {
                    let mut vp = best_v.clone();
                    vp[j] += dir * h;
                    let d = (value(&unit(vp)) - best_k) / h;
                    grad[j] += dir * d;
                }
            }
            let gn = linalg::norm(&grad);
            if gn == 0.0 {
                break;
            }
            loop {
                let cand = unit(linalg::add(
                    &best_v,
                    &linalg::scale(&grad, C64::new(step / gn, 0.0)),
                ));
                let g = value(&cand);
                if g > best_k {
                    best_k = g;
                    best_v = cand;
                    break;
                }
                step /= 2.0;
                if step < 1e-12 {
                    break;
                }
            }
        }
        best = best.max(best_k);
    }
    Ok(best)
}

const ABERTH_SWEEPS: usize = 500;

fn horner(coeffs: &[C64], w: C64) -> (C64, C64) {
    let mut p = C64::new(0.0, 0.0);
    let mut dp = C64::new(0.0, 0.0);
    for &c in coeffs.iter().rev() {
        dp = dp * w + p;
        p = p * w + c;
    }
    (p, dp)
}

/// Roots of a polynomial given by ascending coefficients with a nonzero leading term.
fn aberth(coeffs: &[C64]) -> Result<Vec<C64>> {
    let deg = coeffs.len() - 1;
    if deg == 0 {
        return Ok(Vec::new());
    }
    let lead = coeffs[deg];
    let radius = 1.0
        + coeffs[..deg]
            .iter()
            .map(|c| (c / lead).norm())
            .fold(0.0, f64::max);
    let mut roots: Vec<C64> = (0..deg)
        .map(|k| {
            C64::from_polar(
                0.5 * radius,
                2.0 * std::f64::consts::PI * (k as f64 + 0.25) / deg as f64,
            )
        })
        .collect();
    for _ in 0..ABERTH_SWEEPS {
        let mut max_move = 0.0f64;
        for k in 0..deg {
            let (p, dp) = horner(coeffs, roots[k]);
            if p == C64::new(0.0, 0.0) {
                continue;
            }
            let ratio = p / dp;
            let repulsion: C64 = (0..deg)
                .filter(|&j| j != k)
                .map(|j| C64::new(1.0, 0.0) / (roots[k] - roots[j]))
                .sum();
            let corr = ratio / (C64::new(1.0, 0.0) - ratio * repulsion);
            roots[k] -= corr;
            max_move = max_move.max(corr.norm() / (1.0 + roots[k].norm()));
        }
        if max_move <= 1e-15 {
            return Ok(roots);
        }
    }
    Err(Error::Oracle(format!(
        "Aberth iteration stalled after {ABERTH_SWEEPS} sweeps"
    )))
}

/// All projective roots of a binary form (`n = 1`), with multiplicity.
pub fn univariate_roots(f: &HomogeneousSystem) -> Result<Vec<ProjectivePoint>> {
    if f.n() != 1 {
        return Err(Error::Oracle("univariate_roots needs n = 1".into()));
    }
    let d = f.degrees()[0] as usize;
    // coeffs[j] multiplies z0^{d-j} z1^j
    let mut coeffs = vec![C64::new(0.0, 0.0); d + 1];
    for m in &f.equations()[0] {
        coeffs[m.exponents[1] as usize] += m.coeff;
    }
    let top = coeffs.iter().rposition(|c| *c != C64::new(0.0, 0.0));
    let Some(top) = top else {
        return Err(Error::Oracle("the zero form has no isolated roots".into()));
    };
    if top == 0 && coeffs[0] == C64::new(0.0, 0.0) {
        return Err(Error::Oracle("degenerate form".into()));
    }
    let affine = aberth(&coeffs[..=top])?;
    let mut roots = Vec::with_capacity(d);
    for w in affine {
        let mut w = w;
        for _ in 0..3 {
            let (p, dp) = horner(&coeffs[..=top], w);
            if dp.norm() == 0.0 {
                break;
            }
            w -= p / dp;
        }
        roots.push(ProjectivePoint::new(vec![C64::new(1.0, 0.0), w])?.normalized());
    }
    for _ in top..d {
        roots.push(ProjectivePoint::unit(2, 1));
    }
    let scale = f.bw_norm();
    for r in &roots {
        let res = linalg::norm(&f.evaluate(r)?);
        if res > 1e-10 * scale {
            return Err(Error::Oracle(format!("root residual {res:e} too large")));
        }
    }
    Ok(roots)
}

const PRIMES: [u32; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

fn radical_inverse(mut i: u64, base: u32) -> f64 {
    let b = u64::from(base);
    let inv = 1.0 / f64::from(base);
    let (mut out, mut scale) = (0.0, inv);
    while i > 0 {
        out += (i % b) as f64 * scale;
        i /= b;
        scale *= inv;
    }
    out
}

/// Quasi-random unit point: Halton coordinates pushed through Box-Muller.
fn halton_sphere_point(index: u64, nvars: usize) -> Vec<C64> {
    let mut coords = Vec::with_capacity(nvars);
    for j in 0..nvars {
        let u1 = radical_inverse(index, PRIMES[2 * j]).max(1e-300);
        let u2 = radical_inverse(index, PRIMES[2 * j + 1]);
        let r = (-2.0 * u1.ln()).sqrt();
        coords.push(C64::from_polar(r, 2.0 * std::f64::consts::PI * u2));
    }
    unit(coords)
}

/// Newton refinement from `grid_size` quasi-random starts; returns the distinct
/// certified roots found (no completeness claim).
pub fn multistart_solve(
    f: &HomogeneousSystem,
    grid_size: usize,
    cfg: &OracleConfig,
) -> Result<Vec<ProjectivePoint>> {
    let nvars = f.nvars();
    if 2 * nvars > PRIMES.len() {
        return Err(Error::Oracle(
            "too many variables for the Halton table".into(),
        ));
    }
    let offset = cfg.seed % 100_000;
    let mut roots: Vec<ProjectivePoint> = Vec::new();
    for i in 0..grid_size as u64 {
        let start = halton_sphere_point(i + 1 + offset, nvars);
        let Ok(z) = newton_alpha::refine_zero_iters(f, &start, 60) else {
            continue;
        };
        if !newton_alpha::certify(f, &z, APPROX_ZERO_THRESHOLD).certified {
            continue;
        }
        let fresh = roots
            .iter()
            .all(|r| projgeom::d_riemann(r, &z).map_or(true, |d| d >= 1e-6));
        if fresh {
            roots.push(z);
        }
    }
    Ok(roots)
}
