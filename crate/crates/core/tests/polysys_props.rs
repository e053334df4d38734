use certhom::linalg::{self, C64};
use certhom::oracle::{fd_jacobian, OracleConfig};
use certhom::sampling;
use certhom::{HomogeneousSystem, ProjectivePoint};
use proptest::prelude::*;

fn shape() -> impl Strategy<Value = (u64, Vec<u32>)> {
    (any::<u64>(), prop::collection::vec(1u32..=4, 1..=3))
}

fn system_and_point(
    seed: u64,
    degrees: &[u32],
) -> (HomogeneousSystem, ProjectivePoint, sampling::SampleRng) {
    let mut rng = sampling::rng_for(seed, 0);
    let f = sampling::bw_gaussian_system(&mut rng, degrees);
    let x = sampling::random_unit_point(&mut rng, degrees.len() + 1);
    (f, x, rng)
}

fn rel_close(a: &[C64], b: &[C64], tol: f64) -> bool {
    let scale = linalg::norm(a).max(linalg::norm(b)).max(1e-300);
    linalg::norm(&linalg::sub(a, b)) <= tol * scale
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn homogeneity((seed, degrees) in shape(), re in -2.0f64..2.0, im in -2.0f64..2.0) {
        let (f, x, _) = system_and_point(seed, &degrees);
        let lambda = C64::new(re, im);
        prop_assume!(lambda.norm() > 1e-3);
        let lhs = f.evaluate(&linalg::scale(&x, lambda)).unwrap();
        let base = f.evaluate(&x).unwrap();
        let rhs: Vec<C64> = base
            .iter()
            .zip(&degrees)
            .map(|(v, &d)| v * lambda.powu(d))
            .collect();
        prop_assert!(rel_close(&lhs, &rhs, 1e-12));
    }

    #[test]
    fn euler_identity((seed, degrees) in shape()) {
        let (f, x, _) = system_and_point(seed, &degrees);
        let dfx = linalg::mat_vec(&f.jacobian(&x).unwrap(), &x);
        let fx: Vec<C64> = f
            .evaluate(&x)
            .unwrap()
            .iter()
            .zip(&degrees)
            .map(|(v, &d)| v * f64::from(d))
            .collect();
        prop_assert!(rel_close(&dfx, &fx, 1e-12));
    }

    #[test]
    fn bw_norm_is_unitarily_invariant((seed, degrees) in shape()) {
        let (f, _, mut rng) = system_and_point(seed, &degrees);
        let u = sampling::random_unitary(&mut rng, degrees.len() + 1);
        let g = f.compose_unitary(&u).unwrap();
        prop_assert!((g.bw_norm() - f.bw_norm()).abs() <= 1e-12 * f.bw_norm());
        let h = sampling::bw_gaussian_system(&mut rng, &degrees);
        let a = f.bw_inner(&h).unwrap();
        let b = g.bw_inner(&h.compose_unitary(&u).unwrap()).unwrap();
        prop_assert!((a - b).norm() <= 1e-11 * f.bw_norm() * h.bw_norm());
    }

    #[test]
    fn bw_inner_is_sesquilinear((seed, degrees) in shape(), re in -3.0f64..3.0, im in -3.0f64..3.0) {
        let (f, _, mut rng) = system_and_point(seed, &degrees);
        let g = sampling::bw_gaussian_system(&mut rng, &degrees);
        let lambda = C64::new(re, im);
        let scale = f.bw_norm() * g.bw_norm() * (1.0 + lambda.norm());
        let left = f.scaled(lambda).bw_inner(&g).unwrap();
        prop_assert!((left - lambda * f.bw_inner(&g).unwrap()).norm() <= 1e-12 * scale);
        let right = f.bw_inner(&g.scaled(lambda)).unwrap();
        prop_assert!((right - lambda.conj() * f.bw_inner(&g).unwrap()).norm() <= 1e-12 * scale);
        let swapped = g.bw_inner(&f).unwrap().conj();
        prop_assert!((swapped - f.bw_inner(&g).unwrap()).norm() <= 1e-12 * scale);
        prop_assert!(
            (f.scaled(lambda).bw_norm() - lambda.norm() * f.bw_norm()).abs()
                <= 1e-12 * lambda.norm() * f.bw_norm()
        );
    }

    #[test]
    fn jacobian_matches_finite_differences((seed, degrees) in shape()) {
        let (f, x, _) = system_and_point(seed, &degrees);
        let f = f.normalized();
        let exact = f.jacobian(&x).unwrap();
        let approx = fd_jacobian(&f, &x, &OracleConfig::default()).unwrap();
        let err = (exact - approx).iter().map(|z| z.norm()).fold(0.0, f64::max);
        prop_assert!(err <= 1e-6, "max entry error {err}");
    }
}
