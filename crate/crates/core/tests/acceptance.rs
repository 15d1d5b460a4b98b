//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits nonzero if any fails.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use hillspec::diagnostics::*;
use hillspec::expansion::*;
use hillspec::floquet::*;
use hillspec::galerkin::galerkin_eigenvalues;
use hillspec::json::Cx;
use hillspec::ode::*;
use hillspec::par::with_workers;
use hillspec::spectrum::*;
use hillspec::{Complex64, FourierPotential};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn test_potentials() -> Vec<(&'static str, FourierPotential)> {
    vec![
        ("mathieu 0.3", FourierPotential::mathieu(c(0.3, 0.0))),
        ("mathieu 0.5i", FourierPotential::mathieu(c(0.0, 0.5))),
        ("mathieu 0.4e^{i pi/8}", FourierPotential::mathieu(Complex64::from_polar(0.4, PI / 8.0))),
        ("two-term 0.5, 0.5i", FourierPotential::two_term(c(0.5, 0.0), c(0.0, 0.5))),
    ]
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn within(elapsed: Duration, limit: f64) -> bool {
    elapsed.as_secs_f64() < limit
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let p = FourierPotential::zero();
    let cfg = TrackingConfig { nmax: 20, ..Default::default() };
    let mut worst_ev: f64 = 0.0;
    for t in [0.1, 0.5, 1.0, 2.0, 3.0] {
        match eigenvalues_at(&p, t, &cfg) {
            Ok(set) if set.issues.is_empty() && set.values.len() == 41 => {
                for v in &set.values {
                    let want = free_level(v.n, t);
                    worst_ev = worst_ev.max((v.lambda - c(want, 0.0)).norm() / want);
                }
            }
            _ => worst_ev = f64::INFINITY,
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst_f: f64 = 0.0;
    for _ in 0..200 {
        let r = 1e4 * rng.random::<f64>().sqrt();
        let lambda = Complex64::from_polar(r, rng.random_range(-PI..PI));
        let want = 2.0 * lambda.sqrt().cos();
        let e = match discriminant(&p, lambda) {
            Ok(f) => (f - want).norm() / want.norm().max(1.0),
            Err(_) => f64::INFINITY,
        };
        worst_f = worst_f.max(e);
    }
    let el = start.elapsed();
    outcome(
        worst_ev < 1e-8 && worst_f < 1e-10 && within(el, 10.0),
        format!("max rel eigenvalue error {worst_ev:.2e} (< 1e-8), max rel F error {worst_f:.2e} (< 1e-10), {el:.2?} (< 10 s)"),
    )
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let cfg = TrackingConfig { nmax: 5, ..Default::default() };
    let mut worst: f64 = 0.0;
    for a in [c(0.3, 0.0), c(0.0, 0.5), Complex64::from_polar(0.4, PI / 8.0)] {
        let p = FourierPotential::mathieu(a);
        for t in [0.5, 1.0, 2.5] {
            let (Ok(set), Ok(gal)) = (eigenvalues_at(&p, t, &cfg), galerkin_eigenvalues(&p, t, 32)) else {
                worst = f64::INFINITY;
                continue;
            };
            let mut ours: Vec<Complex64> = set.values.iter().map(|v| v.lambda).collect();
            ours.sort_by(|x, y| x.re.total_cmp(&y.re));
            if ours.len() != 11 {
                worst = f64::INFINITY;
            }
            for (x, y) in ours.iter().zip(&gal[..11]) {
                worst = worst.max((x - y).norm() / y.norm().max(1.0));
            }
        }
    }
    let el = start.elapsed();
    outcome(
        worst < 1e-6 && within(el, 30.0),
        format!("max rel Newton/Galerkin gap {worst:.2e} (< 1e-6), {el:.2?} (< 30 s)"),
    )
}

fn random_potential(rng: &mut impl Rng) -> FourierPotential {
    let order = rng.random_range(1..=3);
    let coeffs: Vec<(i64, Complex64)> = (1..=order)
        .flat_map(|n| [n, -n])
        .map(|n| (n, c(rng.random_range(-0.8..0.8), rng.random_range(-0.8..0.8))))
        .collect();
    FourierPotential::from_fourier(coeffs).expect("zero-mean coefficients")
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut wr: f64 = 0.0;
    let mut fd: f64 = 0.0;
    for _ in 0..100 {
        let p = random_potential(&mut rng);
        let lambda = c(rng.random_range(-20.0..2000.0), rng.random_range(-20.0..20.0));
        let Ok((m, mesh)) = fundamental_with_mesh(&p, lambda, DEFAULT_TOL) else {
            return outcome(false, format!("integration failed at lambda = {lambda}"));
        };
        wr = wr.max((m.wronskian() - 1.0).norm());
        if let Ok(tr) = fundamental_on_grid(&p, lambda, &periodic_grid(64), DEFAULT_TOL) {
            wr = wr.max(tr.wronskian_defect());
        } else {
            wr = f64::INFINITY;
        }
        let d = 1e-4 * (1.0 + lambda.norm()).sqrt();
        let (Ok(a), Ok(b)) = (monodromy_on_mesh(&p, lambda + d, &mesh), monodromy_on_mesh(&p, lambda - d, &mesh)) else {
            fd = f64::INFINITY;
            continue;
        };
        let diff = (a.f - b.f) / (2.0 * d);
        fd = fd.max((diff - m.df).norm() / m.df.norm().max(1e-3));
    }
    outcome(
        wr < 1e-8 && fd < 1e-6,
        format!("max Wronskian defect {wr:.2e} (< 1e-8), max rel dF/dlambda error {fd:.2e} (< 1e-6)"),
    )
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let cfg = TrackingConfig::default();
    let mut worst: f64 = 0.0;
    let mut failures = 0;
    for (_, p) in test_potentials() {
        for _ in 0..50 {
            let n = rng.random_range(-10..=10);
            let t = rng.random_range(0.05..PI - 0.05);
            match derivative_identity_check(&p, n, t, &cfg, DEFAULT_NX) {
                Ok(e) => worst = worst.max(e),
                Err(_) => failures += 1,
            }
        }
    }
    outcome(
        worst < 1e-6 && failures == 0,
        format!("max rel identity error {worst:.2e} (< 1e-6) over 4 x 50 samples, {failures} evaluation failures"),
    )
}

fn criterion_5() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut undefined = 0;
    let mut s_empty = true;
    let ts = t_grid(64);
    for a in [0.2, 0.4] {
        let p = FourierPotential::mathieu(c(a, 0.0));
        let cfg = TrackingConfig { nmax: 6, tgrid: 64, ..Default::default() };
        for n in -6..=6 {
            for s in alpha_profile(&p, n, &ts, &cfg, 128) {
                match s.alpha {
                    Some(al) => worst = worst.max((al.norm() - 1.0).abs()),
                    None => undefined += 1,
                }
            }
        }
        match track_bands(&p, &cfg).and_then(|b| find_singularities(&p, &b.curves, &cfg, &DiagnosticConfig::default())) {
            Ok(rep) => s_empty &= rep.s_bands.is_empty(),
            Err(_) => s_empty = false,
        }
    }
    outcome(
        worst < 1e-6 && s_empty,
        format!(
            "max ||alpha| - 1| {worst:.2e} (< 1e-6), S empty: {s_empty}, {undefined} grid points at a numerically double eigenvalue"
        ),
    )
}

fn criterion_6() -> Outcome {
    let mut pots = test_potentials();
    pots.push(("zero", FourierPotential::zero()));
    let cfg = TrackingConfig { nmax: 20, ..Default::default() };
    let mut violations = 0;
    let mut checked = 0;
    for (_, p) in &pots {
        for t in t_grid(64) {
            let Ok(set) = eigenvalues_at(p, t, &cfg) else {
                violations += 1;
                continue;
            };
            let vals: Vec<BlochEigenvalue> = set.values.iter().filter(|v| v.n.abs() >= 5).copied().collect();
            checked += vals.len();
            violations += separation_violations(&vals, 40).len();
        }
    }
    outcome(violations == 0, format!("{violations} violations over {checked} eigenvalues, 5 <= |n| <= 20, |k| <= 40"))
}

fn criterion_7() -> Outcome {
    let start = Instant::now();
    let q = 10_000;
    let zero = check_form(0.0, q);
    let one = check_form(1.0, q);
    let half = check_form(0.5, q);
    let analytic = zero.verdict == Condition2Verdict::Holds
        && zero.witness.min == 1.0
        && one.verdict == Condition2Verdict::Fails
        && one.witness.q == 1
        && half.verdict == Condition2Verdict::Fails
        && half.witness.q == 2;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut disagreements = 0;
    for _ in 0..50 {
        let n: i64 = rng.random_range(1..=50);
        let m: i64 = rng.random_range(-n..=n);
        let x = m as f64 / n as f64;
        let brute_fails = odd_search(x, q).min < FAIL_TOL;
        let cert = rational_certificate(x, q);
        let cert_fails = match cert {
            Some((mm, _)) => mm % 2 != 0,
            None => true,
        };
        if brute_fails != cert_fails || cert.is_none() {
            disagreements += 1;
        }
    }
    let el = start.elapsed();
    outcome(
        analytic && disagreements == 0 && within(el, 5.0),
        format!(
            "alpha=0 holds min {}, alpha=1 fails at q={}, alpha=1/2 fails at q={}; {disagreements} certificate disagreements in 50; {el:.2?} (< 5 s)",
            zero.witness.min, one.witness.q, half.witness.q
        ),
    )
}

fn criterion_8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let terms = (0..5)
        .map(|_| (rng.random_range(-15.0..15.0), Cx { re: rng.random_range(-1.0..1.0), im: rng.random_range(-1.0..1.0) }))
        .collect();
    let fs = [
        TestFunction::Bump { center: 0.5, radius: 0.45 },
        TestFunction::Bump { center: 5.5, radius: 0.45 },
        TestFunction::Gaussian { center: 0.0, width: 0.9, half_window: 3.0 },
        TestFunction::Trig { a: -3.0, b: 3.0, terms },
        TestFunction::Samples {
            a: -2.25,
            b: 1.75,
            values: (0..33).map(|i| Cx { re: (0.4 * i as f64).cos(), im: 0.05 * i as f64 }).collect(),
        },
    ];
    let mut worst: f64 = 0.0;
    for f in &fs {
        worst = worst.max(parseval_check(f).map(|r| (r - 1.0).abs()).unwrap_or(f64::INFINITY));
    }
    outcome(worst < 1e-6, format!("max |ratio - 1| {worst:.2e} (< 1e-6) over 5 functions"))
}

fn expansion_config(p: &FourierPotential, nmax: usize, tgrid: usize) -> hillspec::Result<ExpansionConfig> {
    let tcfg = TrackingConfig { nmax: 6, tgrid: 64, ..Default::default() };
    let bands = track_bands(p, &tcfg)?;
    let rep = find_singularities(p, &bands.curves, &tcfg, &DiagnosticConfig::default())?;
    Ok(ExpansionConfig { nmax, tgrid, ..Default::default() }.with_report(&rep))
}

fn criterion_9() -> Outcome {
    let start = Instant::now();
    let f = TestFunction::Bump { center: 0.2, radius: 1.3 };
    let mut lines = Vec::new();
    let mut pass = true;

    match reconstruct(&FourierPotential::zero(), &f, &ExpansionConfig::default()) {
        Ok(r) => {
            pass &= r.rel_error < 1e-3 && r.cross_discrepancy < 1e-6;
            lines.push(format!("q=0 rel {:.2e} cross {:.2e}", r.rel_error, r.cross_discrepancy));
        }
        Err(e) => {
            pass = false;
            lines.push(format!("q=0 failed: {e}"));
        }
    }
    for (name, a) in [("0.2", c(0.2, 0.0)), ("0.2e^{i pi/8}", Complex64::from_polar(0.2, PI / 8.0))] {
        let p = FourierPotential::mathieu(a);
        let run = |nmax, tgrid| expansion_config(&p, nmax, tgrid).and_then(|cfg| reconstruct(&p, &f, &cfg));
        match (run(15, 512), run(30, 256), run(30, 512)) {
            (Ok(half_n), Ok(half_t), Ok(full)) => {
                let ok_n = full.rel_error <= half_n.rel_error * 1.1;
                let ok_t = full.rel_error <= half_t.rel_error * 1.1;
                let cross = [&half_n, &half_t, &full].iter().map(|r| r.cross_discrepancy).fold(0.0, f64::max);
                pass &= ok_n && ok_t && cross < 1e-3 && full.nonconvergence.is_empty();
                lines.push(format!(
                    "a={name} rel {:.2e} (nmax 15: {:.2e}, tgrid 256: {:.2e}) cross {:.2e}",
                    full.rel_error, half_n.rel_error, half_t.rel_error, cross
                ));
            }
            (a, b, c) => {
                pass = false;
                let e = [a.err(), b.err(), c.err()].into_iter().flatten().next();
                lines.push(format!("a={name} failed: {e:?}"));
            }
        }
    }
    let el = start.elapsed();
    pass &= within(el, 300.0);
    outcome(pass, format!("{}; {el:.2?} (< 5 min)", lines.join("; ")))
}

fn outputs() -> hillspec::Result<[String; 3]> {
    let p = FourierPotential::mathieu(Complex64::from_polar(0.4, PI / 8.0));
    let cfg = TrackingConfig { nmax: 6, tgrid: 64, ..Default::default() };
    let bands = track_bands(&p, &cfg)?;
    let rep = find_singularities(&p, &bands.curves, &cfg, &DiagnosticConfig::default())?;
    let ecfg = ExpansionConfig { nmax: 8, tgrid: 64, nx: 128, ..Default::default() }.with_report(&rep);
    let rec = reconstruct(&p, &TestFunction::Bump { center: 0.2, radius: 1.3 }, &ecfg)?;
    Ok([bands_to_json(&bands.curves), rep.to_json(), rec.to_json()])
}

fn criterion_10() -> Outcome {
    let runs = [with_workers(1, outputs), with_workers(4, outputs), with_workers(4, outputs)];
    match runs {
        [Ok(a), Ok(b), Ok(c)] => {
            let same = a == b && b == c;
            outcome(same, format!("bands, singularity and reconstruction JSON identical across workers 1, 4, 4: {same}"))
        }
        _ => outcome(false, "a run failed".into()),
    }
}

fn main() {
    let criteria: [(usize, fn() -> Outcome); 10] = [
        (1, criterion_1),
        (2, criterion_2),
        (3, criterion_3),
        (4, criterion_4),
        (5, criterion_5),
        (6, criterion_6),
        (7, criterion_7),
        (8, criterion_8),
        (9, criterion_9),
        (10, criterion_10),
    ];
    let mut failed = 0;
    for (i, run) in criteria {
        let o = run();
        println!("{} criterion {i}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed += usize::from(!o.pass);
    }
    if failed > 0 {
        println!("{failed} of 10 criteria failed");
        std::process::exit(1);
    }
    println!("all 10 criteria passed");
}
