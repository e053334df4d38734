//! Metric geometry of complex projective space and restrictions to `x^perp`.

use nalgebra::{linalg::LU, Dyn};

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, C64};
use crate::polysys::HomogeneousSystem;

/// Restricted Jacobians with `sigma_min / sigma_max` at or below this are treated as singular.
pub const RANK_RATIO: f64 = 1e-13;

/// The three distances between two projective points.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Distances {
    pub riemann: f64,
    pub proj: f64,
    pub tan: f64,
}

/// `d_R`, `d_P = sin d_R` and `d_T = tan d_R` (infinite for orthogonal lines).
pub fn distances(x: &[C64], y: &[C64]) -> Result<Distances> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            found: y.len(),
        });
    }
    let (nx, ny) = (linalg::norm(x), linalg::norm(y));
    if nx == 0.0 || ny == 0.0 {
        return Err(Error::ZeroVector);
    }
    let xh = linalg::scale(x, C64::new(1.0 / nx, 0.0));
    let yh = linalg::scale(y, C64::new(1.0 / ny, 0.0));
    let c = linalg::inner(&xh, &yh);
    // the component of x orthogonal to y gives the sine without arccos cancellation
    let perp: Vec<C64> = xh.iter().zip(&yh).map(|(a, b)| a - c * b).collect();
    let cos = c.norm().min(1.0);
    let sin = linalg::norm(&perp).min(1.0);
    let riemann = sin.atan2(cos);
    let tan = if cos == 0.0 { f64::INFINITY } else { sin / cos };
    Ok(Distances {
        riemann,
        proj: sin / sin.hypot(cos),
        tan,
    })
}

pub fn d_riemann(x: &[C64], y: &[C64]) -> Result<f64> {
    distances(x, y).map(|d| d.riemann)
}

pub fn d_proj(x: &[C64], y: &[C64]) -> Result<f64> {
    distances(x, y).map(|d| d.proj)
}

pub fn d_tan(x: &[C64], y: &[C64]) -> Result<f64> {
    distances(x, y).map(|d| d.tan)
}

/// Unit base point together with an orthonormal basis of its orthogonal complement.
#[derive(Clone, Debug)]
pub struct OrthoFrame {
    pub base: Vec<C64>,
    /// `(n+1) x n`, columns orthonormal and orthogonal to `base`.
    pub basis: CMat,
}

impl OrthoFrame {
    /// `base + basis * coords`.
    pub fn lift(&self, coords: &[C64]) -> Vec<C64> {
        let tangent = linalg::mat_vec(&self.basis, coords);
        linalg::add(&self.base, &tangent)
    }
}

/// Frame from the Householder reflector sending `e_0` to `x / ||x||` (phase chosen so
/// the pivot is real and non-negative); the basis is columns `1..=n` of the reflector.
pub fn ortho_frame(x: &[C64]) -> Result<OrthoFrame> {
    let nx = linalg::norm(x);
    if nx == 0.0 {
        return Err(Error::ZeroVector);
    }
    let m = x.len();
    let base = linalg::scale(x, C64::new(1.0 / nx, 0.0));
    let phase = if base[0].norm() > 0.0 {
        base[0].conj() / base[0].norm()
    } else {
        C64::new(1.0, 0.0)
    };
    let mut w: Vec<C64> = base.iter().map(|z| -z * phase).collect();
    w[0] += 1.0;
    let ww: f64 = w.iter().map(|z| z.norm_sqr()).sum();
    let mut basis = CMat::zeros(m, m - 1);
    for j in 1..m {
        for i in 0..m {
            let id = if i == j {
                C64::new(1.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            };
            basis[(i, j - 1)] = if ww > 0.0 {
                id - w[i] * w[j].conj() * (2.0 / ww)
            } else {
                id
            };
        }
    }
    Ok(OrthoFrame { base, basis })
}

/// Factorization of `Df(x)|_{x^perp}` in the coordinates of an [`OrthoFrame`],
/// reusable for several right-hand sides.
pub struct RestrictedInverse {
    frame: OrthoFrame,
    matrix: CMat,
    lu: LU<C64, Dyn, Dyn>,
}

impl RestrictedInverse {
    /// Restriction of `Df(x)` to `x^perp`, with the Jacobian taken at `x` as given.
    pub fn new(f: &HomogeneousSystem, x: &[C64]) -> Result<Self> {
        let jac = f.jacobian(x)?;
        Self::from_jacobian(&jac, ortho_frame(x)?)
    }

    pub fn from_jacobian(jac: &CMat, frame: OrthoFrame) -> Result<Self> {
        if jac.ncols() != frame.basis.nrows() {
            return Err(Error::DimensionMismatch {
                expected: frame.basis.nrows(),
                found: jac.ncols(),
            });
        }
        let matrix = jac * &frame.basis;
        let (smax, smin) = linalg::extreme_singular_values(&matrix);
        let ratio = if smax > 0.0 { smin / smax } else { 0.0 };
        if !(ratio > RANK_RATIO) {
            return Err(Error::RankDeficient { ratio });
        }
        let lu = matrix.clone().lu();
        Ok(Self { frame, matrix, lu })
    }

    pub fn frame(&self) -> &OrthoFrame {
        &self.frame
    }

    /// `Df(x) * basis`, an `n x n` matrix.
    pub fn restricted_matrix(&self) -> &CMat {
        &self.matrix
    }

    /// The unique `w` in `x^perp` with `Df(x) w = rhs`.
    pub fn solve(&self, rhs: &[C64]) -> Vec<C64> {
        let b = nalgebra::DVector::from_column_slice(rhs);
        let coords = self.lu.solve(&b).expect("nonsingular after the rank test");
        linalg::mat_vec(&self.frame.basis, coords.as_slice())
    }
}

/// Solves `Df(base) w = rhs` for `w` in `base^perp`.
pub fn restricted_solve(
    f: &HomogeneousSystem,
    frame: &OrthoFrame,
    rhs: &[C64],
) -> Result<Vec<C64>> {
    if rhs.len() != f.n() {
        return Err(Error::DimensionMismatch {
            expected: f.n(),
            found: rhs.len(),
        });
    }
    let jac = f.jacobian(&frame.base)?;
    Ok(RestrictedInverse::from_jacobian(&jac, frame.clone())?.solve(rhs))
}

/// Angle between `x` and the line `ker Df(x)`, from the smallest right singular vector.
pub fn kernel_angle(f: &HomogeneousSystem, x: &[C64]) -> Result<f64> {
    let fx = f.evaluate(x)?;
    if fx.iter().all(|z| *z == C64::new(0.0, 0.0)) {
        return Ok(0.0);
    }
    let n = f.n();
    let jac = f.jacobian(x)?;
    // pad with a zero row so the SVD returns a full set of right singular vectors
    let mut padded = CMat::zeros(n + 1, n + 1);
    padded.view_mut((0, 0), (n, n + 1)).copy_from(&jac);
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("requested");
    let sv = &svd.singular_values;
    let mut order: Vec<usize> = (0..sv.len()).collect();
    order.sort_by(|&a, &b| sv[b].total_cmp(&sv[a]));
    let (smax, s_rank) = (sv[order[0]], sv[order[n - 1]]);
    let ratio = if smax > 0.0 { s_rank / smax } else { 0.0 };
    if !(ratio > RANK_RATIO) {
        return Err(Error::RankDeficient { ratio });
    }
    let kidx = order[n];
    let kernel: Vec<C64> = (0..=n).map(|j| v_t[(kidx, j)].conj()).collect();
    distances(x, &kernel).map(|d| d.riemann)
}
