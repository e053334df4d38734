use certhom::invariants::{beta0, delta, mu};
use certhom::linalg::{self, C64};
use certhom::projgeom::{d_proj, d_riemann, d_tan, distances, kernel_angle};
use certhom::sampling;
use proptest::prelude::*;

/// `min_lambda ||x - lambda y|| / ||x||` by scanning the phase of `lambda`; for a
/// fixed phase the best modulus is a one-dimensional least-squares problem.
fn d_proj_by_minimization(x: &[C64], y: &[C64]) -> f64 {
    let residual = |theta: f64| {
        let w = linalg::scale(y, C64::from_polar(1.0, theta));
        let r = (linalg::inner(x, &w).re / linalg::inner(&w, &w).re).max(0.0);
        linalg::norm(&linalg::sub(x, &linalg::scale(&w, C64::new(r, 0.0)))) / linalg::norm(x)
    };
    let n = 4096;
    let step = std::f64::consts::TAU / n as f64;
    let best = (0..n)
        .map(|k| k as f64 * step)
        .min_by(|a, b| residual(*a).total_cmp(&residual(*b)))
        .unwrap();
    // golden-section refinement around the best grid phase
    let (mut lo, mut hi) = (best - step, best + step);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..80 {
        let (m1, m2) = (hi - g * (hi - lo), lo + g * (hi - lo));
        if residual(m1) < residual(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    residual((lo + hi) / 2.0)
}

fn shape() -> impl Strategy<Value = (u64, Vec<u32>)> {
    (any::<u64>(), prop::collection::vec(1u32..=4, 1..=3))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn projective_distance_matches_minimization(seed in any::<u64>(), nvars in 2usize..=4) {
        let mut rng = sampling::rng_for(seed, 0);
        let x = linalg::scale(&sampling::random_unit_point(&mut rng, nvars), C64::new(2.5, -1.0));
        let y = linalg::scale(&sampling::random_unit_point(&mut rng, nvars), C64::new(0.3, 0.7));
        let oracle = d_proj_by_minimization(&x, &y);
        prop_assert!((d_proj(&x, &y).unwrap() - oracle).abs() <= 1e-9);
    }

    #[test]
    fn distance_relations(seed in any::<u64>(), nvars in 2usize..=5) {
        let mut rng = sampling::rng_for(seed, 1);
        let x = sampling::random_unit_point(&mut rng, nvars);
        let y = sampling::random_unit_point(&mut rng, nvars);
        let z = sampling::random_unit_point(&mut rng, nvars);
        let d = distances(&x, &y).unwrap();
        prop_assert!((d.proj - d.riemann.sin()).abs() <= 1e-14);
        prop_assert!((d.tan - d.riemann.tan()).abs() <= 1e-12 * (1.0 + d.tan));
        prop_assert!(d.proj <= d.riemann + 1e-15 && d.riemann <= d.tan + 1e-15);
        prop_assert!(d.riemann <= std::f64::consts::FRAC_PI_2 + 1e-15);
        let dxz = d_riemann(&x, &z).unwrap();
        let dzy = d_riemann(&z, &y).unwrap();
        prop_assert!(d.riemann <= dxz + dzy + 1e-14);
        prop_assert!((d_riemann(&y, &x).unwrap() - d.riemann).abs() <= 1e-15);
    }

    #[test]
    fn distances_are_projective_and_unitary_invariant(
        seed in any::<u64>(),
        nvars in 2usize..=4,
        re in -3.0f64..3.0,
        im in -3.0f64..3.0,
    ) {
        let lambda = C64::new(re, im);
        prop_assume!(lambda.norm() > 1e-2);
        let mut rng = sampling::rng_for(seed, 2);
        let x = sampling::random_unit_point(&mut rng, nvars);
        let y = sampling::random_unit_point(&mut rng, nvars);
        let u = sampling::random_unitary(&mut rng, nvars);
        let base = d_tan(&x, &y).unwrap();
        let scaled = d_tan(&linalg::scale(&x, lambda), &y).unwrap();
        let rotated = d_tan(&linalg::mat_vec(&u, &x), &linalg::mat_vec(&u, &y)).unwrap();
        prop_assert!((scaled - base).abs() <= 1e-12 * (1.0 + base));
        prop_assert!((rotated - base).abs() <= 1e-11 * (1.0 + base));
    }

    #[test]
    fn condition_number_invariances((seed, degrees) in shape(), re in -3.0f64..3.0, im in -3.0f64..3.0) {
        let lambda = C64::new(re, im);
        prop_assume!(lambda.norm() > 1e-2);
        let mut rng = sampling::rng_for(seed, 3);
        let f = sampling::bw_gaussian_system(&mut rng, &degrees);
        let x = sampling::random_unit_point(&mut rng, degrees.len() + 1);
        let m = mu(&f, &x);
        prop_assume!(m.is_finite() && m < 1e6);
        prop_assert!(m >= 1.0 - 1e-12, "mu = {m} below 1");
        let tol = 1e-9 * m;
        prop_assert!((mu(&f.scaled(lambda), &x) - m).abs() <= tol);
        prop_assert!((mu(&f, &linalg::scale(&x, lambda)) - m).abs() <= tol);
        let u = sampling::random_unitary(&mut rng, degrees.len() + 1);
        // (f o U)(U^* x) = f(x)
        let ux = linalg::mat_vec(&u.adjoint(), &x);
        prop_assert!((mu(&f.compose_unitary(&u).unwrap(), &ux) - m).abs() <= tol);
        let b = beta0(&f, &x).unwrap();
        let b_scaled = beta0(&f.scaled(lambda), &linalg::scale(&x, lambda)).unwrap();
        prop_assert!((b - b_scaled).abs() <= 1e-9 * (1.0 + b));
    }

    #[test]
    fn delta_is_the_tangent_of_the_kernel_angle((seed, degrees) in shape()) {
        let mut rng = sampling::rng_for(seed, 4);
        let f = sampling::bw_gaussian_system(&mut rng, &degrees).normalized();
        let x = sampling::random_unit_point(&mut rng, degrees.len() + 1);
        let m = mu(&f, &x);
        prop_assume!(m < 1e4);
        let d = delta(&f, &x).unwrap();
        let theta = kernel_angle(&f, &x).unwrap();
        prop_assert!((theta.tan() - d).abs() <= 1e-8 * d.max(1e-300));
        let cap = f64::from(*degrees.iter().max().unwrap()).sqrt() * m;
        prop_assert!(d <= cap + 1e-9);
    }
}
