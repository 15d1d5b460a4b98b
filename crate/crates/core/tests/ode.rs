use std::f64::consts::PI;

use hillspec::floquet::periodic_grid;
use hillspec::ode::*;
use hillspec::{Complex64, FourierPotential};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Classical RK4 on `y'' = (q - lambda) y` with a fixed step; returns
/// `[theta(1), phi(1), theta'(1), phi'(1)]`.
fn rk4(p: &FourierPotential, lambda: Complex64, steps: usize) -> [Complex64; 4] {
    let rhs = |x: f64, s: [Complex64; 4]| {
        let k = p.evaluate(x) - lambda;
        [s[2], s[3], k * s[0], k * s[1]]
    };
    let h = 1.0 / steps as f64;
    let mut s = [c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)];
    let axpy = |s: [Complex64; 4], k: [Complex64; 4], a: f64| std::array::from_fn(|i| s[i] + k[i] * a);
    for i in 0..steps {
        let x = i as f64 * h;
        let k1 = rhs(x, s);
        let k2 = rhs(x + h / 2.0, axpy(s, k1, h / 2.0));
        let k3 = rhs(x + h / 2.0, axpy(s, k2, h / 2.0));
        let k4 = rhs(x + h, axpy(s, k3, h));
        s = std::array::from_fn(|j| s[j] + (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]) * (h / 6.0));
    }
    s
}

fn random_potential(rng: &mut impl Rng) -> FourierPotential {
    let order = rng.random_range(1..=3);
    let coeffs: Vec<(i64, Complex64)> = (1..=order)
        .flat_map(|n| [n, -n])
        .map(|n| (n, c(rng.random_range(-0.8..0.8), rng.random_range(-0.8..0.8))))
        .collect();
    FourierPotential::from_fourier(coeffs).unwrap()
}

#[test]
fn matches_fixed_step_oracle_on_mathieu() {
    let p = FourierPotential::mathieu(c(0.5, 0.0));
    for lambda in [c(1.0, 0.0), c(30.0, -4.0), c(-3.0, 2.0)] {
        let m = fundamental_at_one(&p, lambda, 1e-12).unwrap();
        let o = rk4(&p, lambda, 4000);
        let got = [m.theta1, m.phi1, m.dtheta1, m.dphi1];
        for (g, w) in got.iter().zip(&o) {
            assert!((g - w).norm() < 1e-9 * (1.0 + w.norm()), "lambda={lambda}: {g} vs {w}");
        }
    }
}

#[test]
fn wronskian_is_one_along_traces() {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
    for _ in 0..20 {
        let p = random_potential(&mut rng);
        let lambda = c(rng.random_range(-20.0..400.0), rng.random_range(-30.0..30.0));
        let tr = fundamental_on_grid(&p, lambda, &periodic_grid(64), DEFAULT_TOL).unwrap();
        assert!(tr.wronskian_defect() < 1e-8, "{}", tr.wronskian_defect());
        let m = fundamental_at_one(&p, lambda, DEFAULT_TOL).unwrap();
        assert!((m.wronskian() - 1.0).norm() < 1e-8);
    }
}

#[test]
fn variational_derivative_matches_central_difference() {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let p = random_potential(&mut rng);
        let lambda = c(rng.random_range(-20.0..2000.0), rng.random_range(-20.0..20.0));
        let (m, mesh) = fundamental_with_mesh(&p, lambda, DEFAULT_TOL).unwrap();
        let d = 1e-4 * (1.0 + lambda.norm()).sqrt();
        let fp = monodromy_on_mesh(&p, lambda + d, &mesh).unwrap().f;
        let fm = monodromy_on_mesh(&p, lambda - d, &mesh).unwrap().f;
        let fd = (fp - fm) / (2.0 * d);
        let e = (fd - m.df).norm() / m.df.norm().max(1e-3);
        worst = worst.max(e);
    }
    assert!(worst < 1e-6, "{worst}");
}

#[test]
fn second_derivative_against_difference_of_first() {
    let p = FourierPotential::mathieu(c(0.3, 0.2));
    let lambda = c(50.0, 1.0);
    let (_, mesh) = fundamental_with_mesh(&p, lambda, DEFAULT_TOL).unwrap();
    let d = 1e-3;
    let fd = (monodromy_on_mesh(&p, lambda + d, &mesh).unwrap().df - monodromy_on_mesh(&p, lambda - d, &mesh).unwrap().df)
        / (2.0 * d);
    let f2 = discriminant_second_derivative(&p, lambda, DEFAULT_TOL).unwrap();
    assert!((f2 - fd).norm() < 1e-5 * fd.norm(), "{f2} vs {fd}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn free_discriminant_is_two_cos(re in -100.0f64..10000.0, im in -100.0f64..100.0) {
        let lambda = c(re, im);
        prop_assume!(lambda.norm() <= 1e4);
        let f = discriminant(&FourierPotential::zero(), lambda).unwrap();
        let want = 2.0 * lambda.sqrt().cos();
        prop_assert!((f - want).norm() < 1e-10 * (1.0 + want.norm()));
    }

    #[test]
    fn unimodular_monodromy(a in -1.0f64..1.0, b in -1.0f64..1.0, re in 0.0f64..500.0) {
        let p = FourierPotential::two_term(c(a, 0.0), c(0.0, b));
        let m = fundamental_at_one(&p, c(re, 0.0), DEFAULT_TOL).unwrap();
        prop_assert!((m.wronskian() - 1.0).norm() < 1e-8);
    }

    #[test]
    fn conjugate_potential_conjugates_discriminant(a in -1.0f64..1.0, b in -1.0f64..1.0, re in 0.0f64..300.0, im in -5.0f64..5.0) {
        let p = FourierPotential::two_term(c(a, b), c(b, -a));
        let lambda = c(re, im);
        let f = discriminant(&p, lambda).unwrap();
        let g = discriminant(&p.conj(), lambda.conj()).unwrap();
        prop_assert!((f.conj() - g).norm() < 1e-8 * (1.0 + f.norm()));
    }
}

#[test]
fn free_discriminant_at_pi_squared() {
    let f = discriminant(&FourierPotential::zero(), c(PI * PI, 0.0)).unwrap();
    assert!((f + 2.0).norm() < 1e-10);
}
