//! Seeded random systems, points and unitary matrices.
//!
//! Systems are drawn from the Bombieri-Weyl Gaussian ensemble: each coefficient
//! `f_{i,a}` is a standard complex Gaussian scaled by `sqrt(d_i! / a!)`, so the
//! coordinates in a BW-orthonormal basis are i.i.d. standard complex Gaussians.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::{self, CMat, C64};
use crate::polysys::{
    bw_weight, exponents_of_degree, HomogeneousSystem, Monomial, ProjectivePoint,
};

pub type SampleRng = ChaCha8Rng;

/// Independent stream for sample `index` of a seeded run.
pub fn rng_for(seed: u64, index: u64) -> SampleRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Standard complex Gaussian, `E|z|^2 = 1`.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn bw_gaussian_system<R: Rng + ?Sized>(rng: &mut R, degrees: &[u32]) -> HomogeneousSystem {
    let nvars = degrees.len() + 1;
    let equations = degrees
        .iter()
        .map(|&d| {
            exponents_of_degree(nvars, d)
                .into_iter()
                .map(|e| {
                    let scale = 1.0 / bw_weight(&e).sqrt();
                    Monomial::new(e, complex_gaussian(rng) * scale)
                })
                .collect()
        })
        .collect();
    HomogeneousSystem::new(degrees.to_vec(), equations).expect("generated system is well formed")
}

/// Uniform point on the unit sphere of `C^{nvars}`.
pub fn random_unit_point<R: Rng + ?Sized>(rng: &mut R, nvars: usize) -> ProjectivePoint {
    loop {
        let v: Vec<C64> = (0..nvars).map(|_| complex_gaussian(rng)).collect();
        if linalg::norm(&v) > 1e-8 {
            return ProjectivePoint::new(v).expect("nonzero").normalized();
        }
    }
}

/// Random unit vector orthogonal to the unit vector `x`.
pub fn random_tangent<R: Rng + ?Sized>(rng: &mut R, x: &[C64]) -> Vec<C64> {
    loop {
        let v: Vec<C64> = (0..x.len()).map(|_| complex_gaussian(rng)).collect();
        let proj = linalg::inner(&v, x);
        let w: Vec<C64> = v.iter().zip(x).map(|(a, b)| a - proj * b).collect();
        let nw = linalg::norm(&w);
        if nw > 1e-8 {
            return linalg::scale(&w, C64::new(1.0 / nw, 0.0));
        }
    }
}

/// A unit point at Riemannian distance exactly `r` from the unit point `x`.
pub fn point_at_distance<R: Rng + ?Sized>(
    rng: &mut R,
    x: &ProjectivePoint,
    r: f64,
) -> ProjectivePoint {
    let w = random_tangent(rng, x);
    let (s, c) = r.sin_cos();
    let y: Vec<C64> = x.iter().zip(&w).map(|(a, b)| a * c + b * s).collect();
    ProjectivePoint::new(y).expect("nonzero").normalized()
}

/// Haar-distributed unitary matrix (QR of a Ginibre matrix with phase fix).
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, m: usize) -> CMat {
    let g = CMat::from_fn(m, m, |_, _| complex_gaussian(rng));
    let qr = g.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..m {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 {
            d / d.norm()
        } else {
            C64::new(1.0, 0.0)
        };
        for i in 0..m {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// A BW-Gaussian system modified so that the unit point `zeta` is an exact zero:
/// `f_i(z) = g_i(z) - g_i(zeta) <z, zeta>^{d_i}`.
pub fn system_vanishing_at<R: Rng + ?Sized>(
    rng: &mut R,
    degrees: &[u32],
    zeta: &ProjectivePoint,
) -> HomogeneousSystem {
    let g = bw_gaussian_system(rng, degrees);
    let gz = g.evaluate(zeta).expect("dimensions agree");
    // <z, zeta>^d = (sum_j conj(zeta_j) z_j)^d is the d-th power of a linear form.
    let nvars = degrees.len() + 1;
    let mut correction = Vec::with_capacity(degrees.len());
    for (i, &d) in degrees.iter().enumerate() {
        let eq = exponents_of_degree(nvars, d)
            .into_iter()
            .map(|e| {
                // multinomial coefficient d! / e! times prod conj(zeta_j)^e_j
                let coeff = e
                    .iter()
                    .zip(zeta.iter())
                    .fold(C64::new(1.0 / bw_weight(&e), 0.0), |acc, (&a, z)| {
                        acc * z.conj().powu(a)
                    });
                Monomial::new(e, -gz[i] * coeff)
            })
            .collect();
        correction.push(eq);
    }
    let correction = HomogeneousSystem::new(degrees.to_vec(), correction).expect("well formed");
    HomogeneousSystem::combine(C64::new(1.0, 0.0), &g, C64::new(1.0, 0.0), &correction)
        .expect("same shape")
}

/// Uniformly random degree tuple with entries in `lo..=hi`.
pub fn random_degrees<R: Rng + ?Sized>(rng: &mut R, n: usize, lo: u32, hi: u32) -> Vec<u32> {
    (0..n).map(|_| rng.random_range(lo..=hi)).collect()
}
