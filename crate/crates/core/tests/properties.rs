use std::f64::consts::PI;

use eulerprod::approximator::{approximate, ApproximationProblem, Target};
use eulerprod::expansion::{
    b_coefficients_alternating_exact, b_coefficients_exact, log_eval, log_factor, nu_tail_bound, nu_threshold,
};
use eulerprod::factor::{CustomTable, DirichletCharacter, EulerFactorSpec};
use eulerprod::hardy::{delta_transform, H2Element};
use eulerprod::primes::primes_up_to;
use eulerprod::product::{PhaseAssignment, ProductEvaluator};
use eulerprod::quadrature::disc_integral_adaptive;
use eulerprod::torus::{ball_volume_mc, permutation_distance_floor, tikhonov_distance};
use eulerprod::Complex64;
use proptest::prelude::*;

fn complex() -> impl Strategy<Value = Complex64> {
    (-1.0f64..1.0, -1.0f64..1.0).prop_map(|(a, b)| Complex64::new(a, b))
}

fn h2(radius: f64) -> impl Strategy<Value = H2Element> {
    prop::collection::vec(complex(), 1..12).prop_map(move |c| H2Element::new(radius, c, 0.0).unwrap())
}

fn spec() -> impl Strategy<Value = EulerFactorSpec> {
    prop_oneof![
        Just(EulerFactorSpec::zeta()),
        Just(EulerFactorSpec::character(DirichletCharacter::mod4())),
        (0u64..10).prop_map(|j| EulerFactorSpec::character(DirichletCharacter::prime_modulus(11, j).unwrap())),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn norm_matches_area_integral(f in h2(0.1)) {
        let q = disc_integral_adaptive(|s| Complex64::new(f.eval(s).norm_sqr(), 0.0), Complex64::new(0.0, 0.0), 0.1, 1e-12, 0.0);
        prop_assert!((q.value.re - f.norm_sq()).abs() <= 1e-9 * f.norm_sq());
    }

    #[test]
    fn triangle_inequality(f in h2(0.2), g in h2(0.2)) {
        let n = f.add(&g).unwrap().norm();
        prop_assert!(n <= f.norm() + g.norm() + 1e-12);
        let ip = f.inner_product(&g).unwrap();
        prop_assert!(ip.abs() <= f.norm() * g.norm() * (1.0 + 1e-12) + 1e-300);
    }

    #[test]
    fn delta_bounded_for_unit_sources(f in h2(0.05), x in 0.0f64..30.0, sigma0 in 0.55f64..0.95) {
        let u = f.scale(Complex64::new(1.0 / f.norm(), 0.0));
        let d = delta_transform(&u, sigma0, x);
        let bound = PI.sqrt() * 0.05 * (-(sigma0 - 0.05) * x).exp();
        prop_assert!(d.norm() <= bound * (1.0 + 1e-12));
    }

    #[test]
    fn log_sum_exponentiates_to_product(sp in spec(), t in -50.0f64..50.0, x in 0.55f64..1.5, seed in 0u64..1000) {
        let primes = primes_up_to(60);
        let mut phases = PhaseAssignment::new(t);
        for (k, &p) in primes.iter().enumerate() {
            phases.set(p, ((seed + k as u64) % 7) as f64 / 7.0);
        }
        let ev = ProductEvaluator::new(&sp, &primes, &phases);
        let s = Complex64::new(x, t);
        let prod = ev.eval(s).unwrap();
        let lg = ev.log_eval(s).unwrap();
        prop_assert!((lg.exp() - prod).norm() <= 1e-12 * prod.norm().max(1.0));
    }

    #[test]
    fn nu_below_bound(sp in spec(), sigma0 in 0.55f64..0.95, rf in 0.0f64..1.0, eps in 0.01f64..0.3,
                      k in 0u64..200, theta in 0.0f64..1.0, ang in 0.0f64..6.3, t in -1e3f64..1e3) {
        let r = rf * (1.0f64 - sigma0).min(sigma0 - 0.5);
        let p0 = nu_threshold(&sp, eps, r, sigma0).unwrap();
        let p = (p0 + 37 * k..).find(|&n| eulerprod::primes::is_prime(n)).unwrap();
        let bound = nu_tail_bound(&sp, p, eps, r, sigma0).unwrap();
        let s = Complex64::new(sigma0, t) + Complex64::from_polar(r, ang);
        let lf = log_factor(&sp, p, s, theta, 0.0).unwrap();
        prop_assert!(lf.nu.norm() <= bound);
    }

    #[test]
    fn b_routes_agree_exactly(a1 in (-32i32..=32, -32i32..=32), rest in prop::collection::vec((-16i32..=16, -16i32..=16), 0..5)) {
        let mut table = CustomTable::new();
        table.set(3, 1, Complex64::new(f64::from(a1.0) / 64.0, f64::from(a1.1) / 64.0));
        for (m, (a, b)) in rest.iter().enumerate() {
            let scale = 0.125f64.powi(m as i32 + 2);
            table.set(3, m + 2, Complex64::new(f64::from(*a) * scale, f64::from(*b) * scale));
        }
        if let Ok(sp) = EulerFactorSpec::custom(table, vec![(1.0, 1.0)]) {
            prop_assert_eq!(b_coefficients_exact(&sp, 3, 10).unwrap(), b_coefficients_alternating_exact(&sp, 3, 10).unwrap());
        }
    }

    #[test]
    fn custom_logs_follow_the_factor(re in -0.5f64..0.5, im in -0.5f64..0.5, rho in 0.0f64..0.99, ang in 0.0f64..6.3) {
        let mut table = CustomTable::new();
        table.set(5, 1, Complex64::new(re, im));
        table.set(5, 2, Complex64::new(0.2, -0.1));
        let sp = EulerFactorSpec::custom(table, vec![(1.0, 1.0)]).unwrap();
        let w = Complex64::from_polar(rho, ang);
        let l = log_eval(&sp, 5, w).unwrap();
        prop_assert!((l.exp() - sp.eval(5, w)).norm() < 1e-12);
    }

    #[test]
    fn tikhonov_is_a_metric(x in prop::collection::vec(0.0f64..1.0, 12), y in prop::collection::vec(0.0f64..1.0, 12),
                            z in prop::collection::vec(0.0f64..1.0, 12)) {
        let d = |a: &[f64], b: &[f64]| tikhonov_distance(a, b, 12).unwrap().value;
        prop_assert_eq!(d(&x, &y), d(&y, &x));
        prop_assert!(d(&x, &z) <= d(&x, &y) + d(&y, &z) + 1e-15);
        prop_assert_eq!(d(&x, &x), 0.0);
    }

    #[test]
    fn ball_volume_monotone(n in 1usize..6, r1 in 0.05f64..2.0, dr in 0.0f64..0.5, seed in 0u64..100) {
        let a = ball_volume_mc(n, r1, 20_000, seed).unwrap();
        let b = ball_volume_mc(n, r1 + dr, 20_000, seed).unwrap();
        prop_assert!(a.estimate <= b.estimate);
    }
}

#[test]
fn permuted_orbits_stay_apart() {
    let mut floors = Vec::new();
    for (t1, t2) in [(1.3, 7.9), (10.0, 10.5), (123.4, 250.0), (0.5, 3.0)] {
        floors.push(permutation_distance_floor(t1, t2, 20, 100, 3).unwrap());
    }
    assert!(floors.iter().all(|&f| f > 1e-3), "{floors:?}");
}

#[test]
fn greedy_steps_decrease_and_survey_within_certificate() {
    for k in 0..20 {
        let a = Complex64::from_polar(0.05 + 0.01 * k as f64, 0.3 * k as f64);
        let target = match k % 3 {
            0 => Target::Exp(a),
            1 => Target::Constant(Complex64::new(1.0, 0.0) + a),
            _ => Target::Polynomial(vec![Complex64::new(1.5, 0.0), a, a * a]),
        };
        let mut problem = ApproximationProblem::new(EulerFactorSpec::zeta(), target);
        problem.p_max = 5_000 + 1_000 * k as u64;
        let res = match approximate(&problem) {
            Ok(r) => r,
            Err(eulerprod::Error::Stall { report, .. }) => *report,
            Err(e) => panic!("run {k}: {e}"),
        };
        assert!(res.trace.windows(2).all(|w| w[1] < w[0]), "run {k}");
        assert!(
            res.max_error <= res.certified_bound * (1.0 + 1e-9) + 1e-15,
            "run {k}: {} > {}",
            res.max_error,
            res.certified_bound
        );
        assert!(primes_up_to(problem.y).iter().all(|&p| res.phases.contains(p)));
    }
}
