//! Quick invariant suite behind `hillspec selftest`.

use std::f64::consts::PI;

use hillspec::diagnostics::{check_condition2, find_singularities, Condition2Verdict, DiagnosticConfig};
use hillspec::expansion::{parseval_check, reconstruct, ExpansionConfig, TestFunction};
use hillspec::floquet::{derivative_identity_check, eigenfunction_pair, DEFAULT_NX};
use hillspec::ode::{discriminant, fundamental_on_grid};
use hillspec::par::with_workers;
use hillspec::spectrum::{bands_to_json, eigenvalues_at, free_level, track_bands, TrackingConfig};
use hillspec::{Complex64, FourierPotential, Result};

type Check = fn() -> Result<(bool, String)>;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn free_levels() -> Result<(bool, String)> {
    let cfg = TrackingConfig { nmax: 10, ..Default::default() };
    let mut worst: f64 = 0.0;
    for t in [0.3, 1.7, 3.0] {
        for v in eigenvalues_at(&FourierPotential::zero(), t, &cfg)?.values {
            let want = free_level(v.n, t);
            worst = worst.max((v.lambda - c(want, 0.0)).norm() / want);
        }
    }
    let f = discriminant(&FourierPotential::zero(), c(PI * PI, 0.0))?;
    Ok((worst < 1e-8 && (f + 2.0).norm() < 1e-10, format!("max rel error {worst:.1e}, F(pi^2) = {:.12}", f.re)))
}

fn wronskian() -> Result<(bool, String)> {
    let p = FourierPotential::mathieu(c(0.4, 0.3));
    let grid: Vec<f64> = (0..=64).map(|j| j as f64 / 64.0).collect();
    let mut worst: f64 = 0.0;
    for lam in [c(-5.0, 1.0), c(40.0, 0.0), c(900.0, -20.0)] {
        worst = worst.max(fundamental_on_grid(&p, lam, &grid, 1e-10)?.wronskian_defect());
    }
    Ok((worst < 1e-8, format!("max defect {worst:.1e}")))
}

fn identity() -> Result<(bool, String)> {
    let p = FourierPotential::mathieu(Complex64::from_polar(0.4, PI / 8.0));
    let cfg = TrackingConfig::default();
    let mut worst: f64 = 0.0;
    for (n, t) in [(0, 0.7), (-2, 1.9), (3, 2.6)] {
        worst = worst.max(derivative_identity_check(&p, n, t, &cfg, DEFAULT_NX)?);
    }
    Ok((worst < 1e-6, format!("max rel error {worst:.1e}")))
}

fn real_alpha() -> Result<(bool, String)> {
    let p = FourierPotential::mathieu(c(0.3, 0.0));
    let rec = eigenfunction_pair(&p, 1, 1.1, &TrackingConfig::default(), DEFAULT_NX)?;
    let d = (rec.alpha.norm() - 1.0).abs();
    Ok((d < 1e-6, format!("||alpha| - 1| = {d:.1e}")))
}

fn real_no_singularities() -> Result<(bool, String)> {
    let p = FourierPotential::mathieu(c(0.2, 0.0));
    let cfg = TrackingConfig { nmax: 4, tgrid: 32, ..Default::default() };
    let bands = track_bands(&p, &cfg)?;
    let rep = find_singularities(&p, &bands.curves, &cfg, &DiagnosticConfig::default())?;
    Ok((rep.s_bands.is_empty(), format!("S = {:?}", rep.s_bands)))
}

fn condition2() -> Result<(bool, String)> {
    let one = c(1.0, 0.0);
    let a = check_condition2(one, one, 10_000)?;
    let b = check_condition2(one, -one, 10_000)?;
    let h = check_condition2(one, c(0.0, 1.0), 10_000)?;
    let ok = a.verdict == Condition2Verdict::Holds
        && a.primary.witness.min == 1.0
        && b.verdict == Condition2Verdict::Fails
        && b.primary.witness.q == 1
        && h.verdict == Condition2Verdict::Fails
        && h.primary.witness.q == 2;
    Ok((ok, "alpha = 0, 1, 1/2".into()))
}

fn parseval() -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for f in [
        TestFunction::Bump { center: 0.5, radius: 0.45 },
        TestFunction::Bump { center: -3.5, radius: 1.7 },
        TestFunction::Gaussian { center: 0.0, width: 0.8, half_window: 3.0 },
    ] {
        worst = worst.max((parseval_check(&f)? - 1.0).abs());
    }
    Ok((worst < 1e-6, format!("max |ratio - 1| = {worst:.1e}")))
}

fn free_expansion() -> Result<(bool, String)> {
    let cfg = ExpansionConfig { nmax: 12, tgrid: 64, nx: 128, ..Default::default() };
    let rep = reconstruct(&FourierPotential::zero(), &TestFunction::Bump { center: 0.2, radius: 1.3 }, &cfg)?;
    Ok((
        rep.rel_error < 1e-3 && rep.cross_discrepancy < 1e-6,
        format!("rel error {:.1e}, Bloch/direct {:.1e}", rep.rel_error, rep.cross_discrepancy),
    ))
}

fn determinism() -> Result<(bool, String)> {
    let p = FourierPotential::mathieu(c(0.3, 0.2));
    let cfg = TrackingConfig { nmax: 4, tgrid: 48, ..Default::default() };
    let run = || track_bands(&p, &cfg).map(|b| bands_to_json(&b.curves));
    let a = with_workers(1, run)?;
    let b = with_workers(3, run)?;
    Ok((a == b, "bands JSON with 1 and 3 workers".into()))
}

/// Returns the process exit code: 0 if every check passes, 2 otherwise.
pub fn run() -> u8 {
    let checks: [(&str, Check); 9] = [
        ("free levels and discriminant", free_levels),
        ("Wronskian", wronskian),
        ("derivative identity", identity),
        ("self-adjoint alpha", real_alpha),
        ("real potential has no singularities", real_no_singularities),
        ("two-term condition", condition2),
        ("Parseval", parseval),
        ("free expansion", free_expansion),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (name, check) in checks {
        let (ok, detail) = match check() {
            Ok(r) => r,
            Err(e) => (false, e.to_string()),
        };
        println!("{} {name}: {detail}", if ok { "PASS" } else { "FAIL" });
        failed += usize::from(!ok);
    }
    if failed == 0 {
        0
    } else {
        eprintln!("{failed} checks failed");
        2
    }
}
