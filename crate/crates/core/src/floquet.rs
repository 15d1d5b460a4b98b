//! Floquet solutions, normalized eigenfunctions of `L_t` and of its adjoint
//! `L_t(conj q)`, the overlaps `alpha_n(t)` and the projection norms `1/|alpha_n(t)|`.
//!
//! Inner products are `(u, v) = int_0^1 u conj(v) dx`, evaluated with the
//! trapezoidal rule on `x_j = j / nx`. Every integrand used here is 1-periodic, so
//! the rule converges spectrally.

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::galerkin::galerkin_eigen;
use crate::ode::{fundamental_at_one, fundamental_on_grid, MonodromyData, SolutionTrace};
use crate::par;
use crate::potential::FourierPotential;
use crate::spectrum::{eigenvalue, TrackingConfig};

pub const DEFAULT_NX: usize = 256;

/// `deg_tol = 1e-7 (1 + |lambda|)`.
pub fn deg_tol(lambda: Complex64) -> f64 {
    1e-7 * (1.0 + lambda.norm())
}

/// The grid `j / nx`, `j = 0..=nx` (the last point is `x = 1`).
pub fn periodic_grid(nx: usize) -> Vec<f64> {
    (0..=nx).map(|j| j as f64 / nx as f64).collect()
}

/// `(u, v)` over one period from samples on `j / nx`, `j < nx`.
pub fn inner(u: &[Complex64], v: &[Complex64]) -> Complex64 {
    let nx = u.len().min(v.len());
    u[..nx].iter().zip(&v[..nx]).map(|(a, b)| a * b.conj()).sum::<Complex64>() / nx as f64
}

pub fn l2_norm(u: &[Complex64]) -> f64 {
    (u.iter().map(|z| z.norm_sqr()).sum::<f64>() / u.len() as f64).sqrt()
}

/// Floquet solutions `Phi_+` and `Phi_-` with their x-derivatives, sampled on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FloquetPair {
    pub grid: Vec<f64>,
    pub plus: Vec<Complex64>,
    pub minus: Vec<Complex64>,
    pub dplus: Vec<Complex64>,
    pub dminus: Vec<Complex64>,
}

fn combine(trace: &SolutionTrace, c1: Complex64, c2: Complex64) -> (Vec<Complex64>, Vec<Complex64>) {
    let y = trace
        .theta
        .iter()
        .zip(&trace.phi)
        .map(|(th, ph)| c1 * th + c2 * ph)
        .collect();
    let dy = trace
        .dtheta
        .iter()
        .zip(&trace.dphi)
        .map(|(th, ph)| c1 * th + c2 * ph)
        .collect();
    (y, dy)
}

/// `Phi_pm = theta + (exp(pm i t) - theta(1)) / phi(1) * phi`.
pub fn floquet_solutions(
    p: &FourierPotential,
    lambda: Complex64,
    t: f64,
    grid: &[f64],
    tol: f64,
) -> Result<FloquetPair> {
    let mono = fundamental_at_one(p, lambda, tol)?;
    if mono.phi1.norm() <= deg_tol(lambda) {
        return Err(Error::DirichletDegeneracy { modulus: mono.phi1.norm() });
    }
    let trace = fundamental_on_grid(p, lambda, grid, tol)?;
    Ok(assemble_formula(&trace, &mono, t))
}

fn assemble_formula(trace: &SolutionTrace, mono: &MonodromyData, t: f64) -> FloquetPair {
    let one = Complex64::new(1.0, 0.0);
    let ep = Complex64::from_polar(1.0, t);
    let (plus, dplus) = combine(trace, one, (ep - mono.theta1) / mono.phi1);
    let (minus, dminus) = combine(trace, one, (ep.conj() - mono.theta1) / mono.phi1);
    FloquetPair {
        grid: trace.grid.clone(),
        plus,
        minus,
        dplus,
        dminus,
    }
}

/// Initial data `(y(0), y'(0))` of the Floquet solution with multiplier `mu`, taken
/// from whichever row of `M - mu` is better conditioned.
fn multiplier_vector(mono: &MonodromyData, mu: Complex64) -> Option<(Complex64, Complex64)> {
    let first = (mono.phi1, mu - mono.theta1);
    let second = (mu - mono.dphi1, mono.dtheta1);
    let size = |v: &(Complex64, Complex64)| v.0.norm().max(v.1.norm());
    let best = if size(&first) >= size(&second) { first } else { second };
    (size(&best) > deg_tol(mono.lambda)).then_some(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EigenSource {
    /// Closed-form Floquet solutions.
    Floquet,
    /// Monodromy eigenvector from the second row (Dirichlet degeneracy).
    MonodromyRow,
    /// Galerkin eigenvector.
    Galerkin,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FloquetRecord {
    pub n: i64,
    pub t: f64,
    pub lambda: Complex64,
    /// Samples on `j / nx`, `j < nx`.
    pub psi: Vec<Complex64>,
    pub psi_star: Vec<Complex64>,
    pub alpha: Complex64,
    pub proj_norm: f64,
    pub source: EigenSource,
}

impl FloquetRecord {
    pub fn nx(&self) -> usize {
        self.psi.len()
    }

    /// `chi = Psi* / conj(alpha)`, so that `(Psi, chi) = 1`.
    pub fn chi(&self) -> Vec<Complex64> {
        let s = self.alpha.conj();
        self.psi_star.iter().map(|z| z / s).collect()
    }

    /// Fourier coefficients `(Psi, exp(i(2 pi k + t) x))` for `|k| < nx / 2`.
    pub fn fourier(&self) -> Vec<(i64, Complex64)> {
        fourier_coefficients(&self.psi, self.t)
    }
}

/// `c_k = (u, exp(i(2 pi k + t) x))` from periodic-grid samples of a quasi-periodic `u`.
pub fn fourier_coefficients(u: &[Complex64], t: f64) -> Vec<(i64, Complex64)> {
    let nx = u.len();
    let mut buf: Vec<Complex64> = u
        .iter()
        .enumerate()
        .map(|(j, z)| z * Complex64::from_polar(1.0, -t * j as f64 / nx as f64))
        .collect();
    FftPlanner::new().plan_fft_forward(nx).process(&mut buf);
    let half = (nx / 2) as i64;
    (-half + 1..half)
        .map(|k| {
            let idx = k.rem_euclid(nx as i64) as usize;
            (k, buf[idx] / nx as f64)
        })
        .collect()
}

/// Rotates `u` so that its largest Fourier coefficient is real and positive.
fn fix_phase(u: &mut [Complex64], t: f64) {
    let pivot = fourier_coefficients(u, t)
        .into_iter()
        .map(|(_, c)| c)
        .max_by(|a, b| a.norm().total_cmp(&b.norm()))
        .unwrap_or_default();
    if pivot.norm() > 0.0 {
        let rot = pivot.conj() / pivot.norm();
        u.iter_mut().for_each(|z| *z *= rot);
    }
}

fn normalized(u: &[Complex64]) -> Vec<Complex64> {
    let s = l2_norm(u);
    u.iter().map(|z| z / s).collect()
}

fn galerkin_function(p: &FourierPotential, t: f64, lambda: Complex64, n: i64, nx: usize) -> Result<Vec<Complex64>> {
    let width = (2 * p.effective_order()).max(16) + 2 * n.unsigned_abs() as usize;
    let pairs = galerkin_eigen(p, t, width)?;
    let best = pairs
        .iter()
        .min_by(|a, b| (a.lambda - lambda).norm().total_cmp(&(b.lambda - lambda).norm()))
        .ok_or_else(|| Error::EigensolverFailure("empty Galerkin spectrum".into()))?;
    Ok((0..nx).map(|j| best.synthesize(t, j as f64 / nx as f64)).collect())
}

fn finish(n: i64, t: f64, lambda: Complex64, psi: &[Complex64], star: &[Complex64], source: EigenSource) -> FloquetRecord {
    let mut psi = normalized(psi);
    let mut psi_star = normalized(star);
    fix_phase(&mut psi, t);
    fix_phase(&mut psi_star, t);
    let alpha = inner(&psi, &psi_star);
    FloquetRecord {
        n,
        t,
        lambda,
        psi,
        psi_star,
        alpha,
        proj_norm: 1.0 / alpha.norm(),
        source,
    }
}

/// Records for `t` and `-t` at one eigenvalue `lambda = lambda_n(|t|)`, both built
/// from a single integration. `t` may be `0` or `pi`, in which case both records
/// coincide.
pub fn eigenfunction_pair_pm(
    p: &FourierPotential,
    n: i64,
    t: f64,
    lambda: Complex64,
    cfg: &TrackingConfig,
    nx: usize,
) -> Result<(FloquetRecord, FloquetRecord)> {
    let mono = fundamental_at_one(p, lambda, cfg.tol)?;
    if cfg.is_multiple(&mono) {
        return Err(Error::MultipleEigenvalue { n, t });
    }
    let trace = fundamental_on_grid(p, lambda, &periodic_grid(nx), cfg.tol)?;
    pm_from_trace(p, n, t.abs(), &mono, &trace, nx)
}

/// As [`eigenfunction_pair_pm`], from an existing trace on `periodic_grid(nx)`.
pub(crate) fn pm_from_trace(
    p: &FourierPotential,
    n: i64,
    tau: f64,
    mono: &MonodromyData,
    trace: &SolutionTrace,
    nx: usize,
) -> Result<(FloquetRecord, FloquetRecord)> {
    let lambda = mono.lambda;
    let ep = Complex64::from_polar(1.0, tau);
    let conj_all = |v: &[Complex64]| v.iter().map(|z| z.conj()).collect::<Vec<_>>();
    if mono.phi1.norm() > deg_tol(lambda) {
        let fp = assemble_formula(trace, mono, tau);
        let (plus, minus) = (&fp.plus[..nx], &fp.minus[..nx]);
        let a = finish(n, tau, lambda, plus, &conj_all(minus), EigenSource::Floquet);
        let b = finish(n, -tau, lambda, minus, &conj_all(plus), EigenSource::Floquet);
        return Ok((a, b));
    }
    if let (Some(vp), Some(vm)) = (multiplier_vector(mono, ep), multiplier_vector(mono, ep.conj())) {
        let (plus, _) = combine(trace, vp.0, vp.1);
        let (minus, _) = combine(trace, vm.0, vm.1);
        let (plus, minus) = (&plus[..nx], &minus[..nx]);
        let a = finish(n, tau, lambda, plus, &conj_all(minus), EigenSource::MonodromyRow);
        let b = finish(n, -tau, lambda, minus, &conj_all(plus), EigenSource::MonodromyRow);
        return Ok((a, b));
    }
    let qc = p.conj();
    let rec = |s: f64| -> Result<FloquetRecord> {
        let psi = galerkin_function(p, s, lambda, n, nx)?;
        let star = galerkin_function(&qc, s, lambda.conj(), n, nx)?;
        Ok(finish(n, s, lambda, &psi, &star, EigenSource::Galerkin))
    };
    Ok((rec(tau)?, rec(-tau)?))
}

/// `Psi_{n,t}`, `Psi*_{n,t}` and `alpha_n(t)` at a known eigenvalue.
pub fn eigenfunction_pair_at(
    p: &FourierPotential,
    n: i64,
    t: f64,
    lambda: Complex64,
    cfg: &TrackingConfig,
    nx: usize,
) -> Result<FloquetRecord> {
    let (a, b) = eigenfunction_pair_pm(p, n, t, lambda, cfg, nx)?;
    Ok(if t < 0.0 { b } else { a })
}

pub fn eigenfunction_pair(
    p: &FourierPotential,
    n: i64,
    t: f64,
    cfg: &TrackingConfig,
    nx: usize,
) -> Result<FloquetRecord> {
    let ev = eigenvalue(p, n, t, cfg)?;
    eigenfunction_pair_at(p, n, t, ev.lambda, cfg, nx)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaSample {
    pub t: f64,
    pub lambda: Option<Complex64>,
    pub alpha: Option<Complex64>,
    /// Set when `alpha` is undefined at this point.
    #[serde(skip)]
    pub issue: Option<Error>,
}

impl AlphaSample {
    pub fn proj_norm(&self) -> Option<f64> {
        self.alpha.map(|a| 1.0 / a.norm())
    }
}

/// `alpha_n(t)` on the given quasimomenta.
pub fn alpha_profile(
    p: &FourierPotential,
    n: i64,
    ts: &[f64],
    cfg: &TrackingConfig,
    nx: usize,
) -> Vec<AlphaSample> {
    par::map(ts, |&t| match eigenvalue(p, n, t, cfg) {
        Err(e) => AlphaSample { t, lambda: None, alpha: None, issue: Some(e) },
        Ok(ev) => match eigenfunction_pair_at(p, n, t, ev.lambda, cfg, nx) {
            Ok(r) => AlphaSample { t, lambda: Some(ev.lambda), alpha: Some(r.alpha), issue: None },
            Err(e) => AlphaSample { t, lambda: Some(ev.lambda), alpha: None, issue: Some(e) },
        },
    })
}

/// CSV rows `t,abs_alpha,proj_norm`.
pub fn alpha_csv(profile: &[AlphaSample]) -> String {
    let mut out = String::from("t,abs_alpha,proj_norm\n");
    for s in profile {
        match s.alpha {
            Some(a) => out.push_str(&format!("{},{},{}\n", s.t, a.norm(), 1.0 / a.norm())),
            None => out.push_str(&format!("{},nan,inf\n", s.t)),
        }
    }
    out
}

/// `sup_t 1/|alpha_n(t)|` over `[t0, t1]`, refined three times around the maximizer.
pub fn projection_norm_arc(
    p: &FourierPotential,
    n: i64,
    interval: (f64, f64),
    cfg: &TrackingConfig,
    nx: usize,
) -> Result<f64> {
    let (t0, t1) = interval;
    if !(t0.is_finite() && t1.is_finite() && t0 < t1) {
        return Err(Error::InvalidConfig(format!("bad arc [{t0}, {t1}]")));
    }
    let sample = |ts: &[f64]| -> Result<Vec<(f64, f64)>> {
        alpha_profile(p, n, ts, cfg, nx)
            .into_iter()
            .map(|s| match (s.alpha, s.issue) {
                (Some(a), _) => Ok((s.t, 1.0 / a.norm())),
                (None, Some(Error::MultipleEigenvalue { .. })) => Err(Error::IrregularArc { n, t: s.t }),
                (None, Some(e)) => Err(e),
                (None, None) => Err(Error::IrregularArc { n, t: s.t }),
            })
            .collect()
    };
    let m = 33;
    let mut h = (t1 - t0) / (m - 1) as f64;
    let ts: Vec<f64> = (0..m).map(|j| t0 + j as f64 * h).collect();
    let mut best = sample(&ts)?
        .into_iter()
        .fold((t0, 0.0), |acc, v| if v.1 > acc.1 { v } else { acc });
    for _ in 0..3 {
        let lo = (best.0 - h).max(t0);
        let hi = (best.0 + h).min(t1);
        let k = 9;
        let ts: Vec<f64> = (0..k).map(|j| lo + (hi - lo) * j as f64 / (k - 1) as f64).collect();
        for v in sample(&ts)? {
            if v.1 > best.1 {
                best = v;
            }
        }
        h = (hi - lo) / (k - 1) as f64;
    }
    Ok(best.1)
}

/// Relative discrepancy in `F'(lambda) = -phi(1) (Phi_+, conj(Phi_-))`, i.e.
/// `-phi(1) int Phi_+ Phi_- dx`.
pub fn derivative_identity_check(
    p: &FourierPotential,
    n: i64,
    t: f64,
    cfg: &TrackingConfig,
    nx: usize,
) -> Result<f64> {
    let ev = eigenvalue(p, n, t, cfg)?;
    derivative_identity_at(p, ev.lambda, t, cfg.tol, nx)
}

pub fn derivative_identity_at(p: &FourierPotential, lambda: Complex64, t: f64, tol: f64, nx: usize) -> Result<f64> {
    let mono = fundamental_at_one(p, lambda, tol)?;
    let fp = floquet_solutions(p, lambda, t, &periodic_grid(nx), tol)?;
    let minus_conj: Vec<Complex64> = fp.minus.iter().map(|z| z.conj()).collect();
    let rhs = -mono.phi1 * inner(&fp.plus[..nx], &minus_conj[..nx]);
    Ok((mono.df - rhs).norm() / mono.df.norm().max(f64::MIN_POSITIVE))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FourierTail {
    /// `(k, u_{n,k})` for `k in {n, -n, n + 1, -(n + 1)}` without repeats.
    pub heads: Vec<(i64, Complex64)>,
    /// `|| Psi - sum of head terms ||^2`.
    pub tail_mass: f64,
}

pub fn fourier_tail_profile(rec: &FloquetRecord) -> FourierTail {
    let n = rec.n;
    let mut ks = vec![n, -n, n + 1, -(n + 1)];
    ks.dedup();
    let mut seen = Vec::new();
    ks.retain(|k| {
        let fresh = !seen.contains(k);
        seen.push(*k);
        fresh
    });
    let coeffs = rec.fourier();
    let heads: Vec<(i64, Complex64)> = ks
        .iter()
        .map(|&k| (k, coeffs.iter().find(|c| c.0 == k).map(|c| c.1).unwrap_or_default()))
        .collect();
    let tail_mass = coeffs
        .iter()
        .filter(|c| !ks.contains(&c.0))
        .map(|c| c.1.norm_sqr())
        .sum();
    FourierTail { heads, tail_mass }
}

/// `|| sum_{n in J} alpha_n^{-1} (f, Psi*_n) Psi_n || / ||f||` for records sharing
/// one `t` and one grid.
pub fn partial_sum_ratio(records: &[FloquetRecord], f: &[Complex64], subset: &[usize]) -> f64 {
    let nx = f.len();
    let mut acc = vec![Complex64::default(); nx];
    for &i in subset {
        let r = &records[i];
        let coef = inner(f, &r.psi_star) / r.alpha;
        for (a, z) in acc.iter_mut().zip(&r.psi) {
            *a += coef * z;
        }
    }
    l2_norm(&acc) / l2_norm(f)
}

/// `max |(Psi_n, chi_m) - delta_nm|` over all pairs of records at one `t`.
pub fn biorthogonality_defect(records: &[FloquetRecord]) -> f64 {
    let chis: Vec<Vec<Complex64>> = records.iter().map(FloquetRecord::chi).collect();
    let mut worst: f64 = 0.0;
    for (i, r) in records.iter().enumerate() {
        for (j, chi) in chis.iter().enumerate() {
            let want = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((inner(&r.psi, chi) - want).norm());
        }
    }
    worst
}

/// Largest deviation of `Psi(x + 1)`, obtained by integrating over a second period,
/// from `exp(i t) Psi(x)`, relative to `max |Psi|`.
pub fn quasiperiodicity_defect(p: &FourierPotential, lambda: Complex64, t: f64, tol: f64, nx: usize) -> Result<f64> {
    let grid = periodic_grid(nx);
    let fp = floquet_solutions(p, lambda, t, &grid, tol)?;
    let trace = fundamental_on_grid(p, lambda, &grid, tol)?;
    let (y1, dy1) = (fp.plus[nx], fp.dplus[nx]);
    let (next, _) = combine(&trace, y1, dy1);
    let ep = Complex64::from_polar(1.0, t);
    let scale = fp.plus.iter().map(|z| z.norm()).fold(0.0, f64::max);
    Ok(next
        .iter()
        .zip(&fp.plus)
        .map(|(a, b)| (a - ep * b).norm())
        .fold(0.0, f64::max)
        / scale)
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::spectrum::free_level;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn free_eigenfunctions_are_plane_waves() {
        let cfg = TrackingConfig::default();
        let rec = eigenfunction_pair(&FourierPotential::zero(), 2, 1.0, &cfg, 128).unwrap();
        assert!((rec.alpha - c(1.0, 0.0)).norm() < 1e-9);
        for (j, z) in rec.psi.iter().enumerate() {
            let x = j as f64 / 128.0;
            let want = Complex64::from_polar(1.0, (4.0 * PI + 1.0) * x);
            assert!((z - want).norm() < 1e-8);
        }
    }

    #[test]
    fn dirichlet_degeneracy_detected() {
        let lam = c(4.0 * PI * PI, 0.0);
        let r = floquet_solutions(&FourierPotential::zero(), lam, 0.0, &periodic_grid(16), 1e-10);
        assert!(matches!(r, Err(Error::DirichletDegeneracy { .. })));
    }

    #[test]
    fn free_identity_holds() {
        let lam = c(free_level(1, 1.0), 0.0);
        let e = derivative_identity_at(&FourierPotential::zero(), lam, 1.0, 1e-10, 256).unwrap();
        assert!(e < 1e-8, "{e}");
    }

    #[test]
    fn negative_t_uses_minus_solution() {
        let p = FourierPotential::mathieu(c(0.3, 0.2));
        let cfg = TrackingConfig::default();
        let a = eigenfunction_pair(&p, 1, -0.8, &cfg, 128).unwrap();
        let ep = Complex64::from_polar(1.0, -0.8);
        // quasi-periodic with multiplier exp(-0.8 i): check via Fourier content
        let f = a.fourier();
        let top = f.iter().max_by(|x, y| x.1.norm().total_cmp(&y.1.norm())).unwrap();
        assert!(top.0 == 1 || top.0 == -1, "k = {}", top.0);
        assert!(ep.norm() > 0.0 && a.alpha.norm() <= 1.0 + 1e-12);
    }

    #[test]
    fn tail_of_plane_wave_is_zero() {
        let cfg = TrackingConfig::default();
        let rec = eigenfunction_pair(&FourierPotential::zero(), 3, 0.5, &cfg, 128).unwrap();
        let tail = fourier_tail_profile(&rec);
        assert!(tail.tail_mass < 1e-16);
        assert!((tail.heads[0].1 - c(1.0, 0.0)).norm() < 1e-9);
        assert!(tail.heads[1..].iter().all(|h| h.1.norm() < 1e-9));
    }
}
