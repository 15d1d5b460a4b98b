//! Spectral singularities, finite-range spectrality diagnostics, and the two
//! Fourier-coefficient conditions.
//!
//! A point of the spectrum is a spectral singularity when it is a multiple
//! eigenvalue of some `L_t` with `t in (0, pi)`, or a periodic/antiperiodic
//! eigenvalue carrying a Jordan block. Candidates are critical points of `F`.

use std::collections::BTreeSet;
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::floquet::eigenfunction_pair_at;
use crate::ode::{discriminant_second_derivative, fundamental_at_one, MonodromyData};
use crate::par;
use crate::potential::FourierPotential;
use crate::spectrum::{SpectralCurve, TrackingConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticConfig {
    /// Tolerance on `Im F` and on `|F| - 2` at a candidate.
    pub membership_tol: f64,
    pub newton_maxiter: usize,
    /// x-grid size for `alpha` evaluations.
    pub nx: usize,
    /// Interior quasimomenta per band sampled for the projection-norm item.
    pub alpha_samples: usize,
}

impl Default for DiagnosticConfig {
    fn default() -> Self {
        Self {
            membership_tol: 1e-8,
            newton_maxiter: 40,
            nx: 128,
            alpha_samples: 16,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CandidateKind {
    InteriorMultiple,
    EndpointJordan,
    EndpointSemisimple,
}

impl CandidateKind {
    pub fn is_singular(self) -> bool {
        !matches!(self, CandidateKind::EndpointSemisimple)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    #[serde(with = "crate::json::complex")]
    pub lambda: Complex64,
    pub t: f64,
    pub kind: CandidateKind,
    /// `|Im F|` at the candidate.
    pub f_residual: f64,
    /// `|F'|` at the candidate.
    pub fprime_residual: f64,
    pub bands: Vec<i64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingularityReport {
    pub candidates: Vec<Candidate>,
    /// Bands whose curve carries a spectral singularity.
    #[serde(rename = "S")]
    pub s_bands: Vec<i64>,
    /// Number of spectral singularities.
    pub s: usize,
    /// Number of interior critical points.
    pub m: usize,
    /// `t_1, ..., t_m` of the interior singular points.
    pub exclusion: Vec<f64>,
    pub verdicts: std::collections::BTreeMap<String, String>,
    /// Seeds whose Newton iteration failed, as `(band, t)`.
    pub failed_seeds: Vec<(i64, f64)>,
}

impl SingularityReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization")
    }
}

fn same_point(a: Complex64, b: Complex64) -> bool {
    (a - b).norm() <= 1e-7 * (1.0 + a.norm())
}

/// Newton on `F'(lambda) = 0`.
fn critical_point(
    p: &FourierPotential,
    seed: Complex64,
    cap: f64,
    tcfg: &TrackingConfig,
    dcfg: &DiagnosticConfig,
) -> Option<MonodromyData> {
    let mut lam = seed;
    for _ in 0..dcfg.newton_maxiter {
        let m = fundamental_at_one(p, lam, tcfg.tol).ok()?;
        let f2 = discriminant_second_derivative(p, lam, tcfg.tol).ok()?;
        if f2.norm() == 0.0 || !f2.re.is_finite() || !f2.im.is_finite() {
            return None;
        }
        let mut step = -m.df / f2;
        if step.norm() > cap {
            step *= cap / step.norm();
        }
        lam += step;
        if step.norm() <= 1e-13 * (1.0 + lam.norm()) {
            break;
        }
    }
    let m = fundamental_at_one(p, lam, tcfg.tol).ok()?;
    tcfg.is_multiple(&m).then_some(m)
}

fn seeds(curve: &SpectralCurve, dfs: &[f64]) -> Vec<usize> {
    let len = curve.samples.len();
    let mut out = vec![0, len - 1];
    for j in 1..len.saturating_sub(1) {
        if dfs[j] <= dfs[j - 1] && dfs[j] <= dfs[j + 1] {
            out.push(j);
        }
    }
    out.sort_unstable();
    out.dedup();
    out
}

/// Size of the traceless part `N = M - (F/2) I` of the monodromy matrix in the
/// balanced basis `(y, y' / sqrt(1 + |lambda|))`, and the modulus of its eigenvalues
/// `sqrt(|F^2 - 4|) / 2`.
pub fn endpoint_structure(m: &MonodromyData) -> (f64, f64) {
    let w = (1.0 + m.lambda.norm()).sqrt();
    let half = m.f / 2.0;
    let size = [m.theta1 - half, m.phi1 * w, m.dtheta1 / w, m.dphi1 - half]
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    (size, (m.f * m.f - 4.0).norm().sqrt() / 2.0)
}

/// Ratio of `|N|` to the modulus of its eigenvalues above which `N` counts as
/// nilpotent.
const JORDAN_RATIO: f64 = 10.0;
/// `|N|` in the balanced basis below which the monodromy is a multiple of `I`.
const BALANCED_DEG_TOL: f64 = 1e-7;

/// A periodic or antiperiodic double point whose monodromy is not diagonalizable.
pub fn is_jordan(m: &MonodromyData) -> bool {
    let (size, ev) = endpoint_structure(m);
    size > BALANCED_DEG_TOL && size > JORDAN_RATIO * ev
}

fn classify(m: &MonodromyData, dcfg: &DiagnosticConfig) -> Option<(CandidateKind, f64)> {
    let f = m.f;
    let tol = dcfg.membership_tol;
    if f.im.abs() > tol || f.re.abs() > 2.0 + tol {
        return None;
    }
    if (f.re.abs() - 2.0).abs() <= tol {
        let t = if f.re > 0.0 { 0.0 } else { PI };
        let kind = if is_jordan(m) {
            CandidateKind::EndpointJordan
        } else {
            CandidateKind::EndpointSemisimple
        };
        Some((kind, t))
    } else {
        Some((CandidateKind::InteriorMultiple, (f.re / 2.0).clamp(-1.0, 1.0).acos()))
    }
}

fn involved_bands(curves: &[SpectralCurve], lambda: Complex64) -> Vec<i64> {
    let dist: Vec<(i64, f64, f64)> = curves
        .iter()
        .map(|c| {
            let d = c.samples.iter().map(|s| (s.lambda - lambda).norm()).fold(f64::INFINITY, f64::min);
            (c.n, d, c.max_jump())
        })
        .collect();
    let mut out: Vec<i64> = dist
        .iter()
        .filter(|(_, d, jump)| *d <= jump + 1e-6 * (1.0 + lambda.norm()))
        .map(|x| x.0)
        .collect();
    if out.is_empty() {
        if let Some(best) = dist.iter().min_by(|a, b| a.1.total_cmp(&b.1)) {
            out.push(best.0);
        }
    }
    out.sort_unstable();
    out
}

/// Candidates from Newton on `F' = 0`, seeded at the endpoints and at local minima
/// of `|F'|` along each curve. Only the sampled positions of the curves are used.
pub fn find_singularities(
    p: &FourierPotential,
    curves: &[SpectralCurve],
    tcfg: &TrackingConfig,
    dcfg: &DiagnosticConfig,
) -> Result<SingularityReport> {
    let mut jobs: Vec<(i64, f64, Complex64, f64)> = Vec::new();
    for curve in curves {
        if curve.samples.is_empty() {
            continue;
        }
        let dfs: Vec<f64> = par::map(&curve.samples, |s| {
            fundamental_at_one(p, s.lambda, tcfg.tol).map(|m| m.df.norm()).unwrap_or(f64::INFINITY)
        });
        let cap = 2.0 * PI * (curve.n.unsigned_abs() as f64 + 1.0);
        for j in seeds(curve, &dfs) {
            let s = &curve.samples[j];
            jobs.push((curve.n, s.t, s.lambda, cap));
        }
    }
    let roots = par::map(&jobs, |&(_, _, seed, cap)| critical_point(p, seed, cap, tcfg, dcfg));

    let mut candidates: Vec<Candidate> = Vec::new();
    let mut failed = Vec::new();
    for (job, root) in jobs.iter().zip(roots) {
        let Some(m) = root else {
            failed.push((job.0, job.1));
            continue;
        };
        if candidates.iter().any(|c| same_point(c.lambda, m.lambda)) {
            continue;
        }
        if let Some((kind, t)) = classify(&m, dcfg) {
            candidates.push(Candidate {
                lambda: m.lambda,
                t,
                kind,
                f_residual: m.f.im.abs(),
                fprime_residual: m.df.norm(),
                bands: involved_bands(curves, m.lambda),
            });
        }
    }
    candidates.sort_by(|a, b| {
        a.lambda.re.total_cmp(&b.lambda.re).then(a.lambda.im.total_cmp(&b.lambda.im))
    });

    let singular: Vec<&Candidate> = candidates.iter().filter(|c| c.kind.is_singular()).collect();
    let s_bands: BTreeSet<i64> = singular.iter().flat_map(|c| c.bands.iter().copied()).collect();
    let mut exclusion: Vec<f64> = singular
        .iter()
        .filter(|c| c.kind == CandidateKind::InteriorMultiple)
        .map(|c| c.t)
        .collect();
    exclusion.sort_by(f64::total_cmp);
    exclusion.dedup_by(|a, b| (*a - *b).abs() < 1e-9);

    let mut verdicts = std::collections::BTreeMap::new();
    verdicts.insert(
        "singularities".to_string(),
        if singular.is_empty() { "none-in-range" } else { "present" }.to_string(),
    );
    if let Some((a, b)) = two_term_coefficients(p) {
        if let Ok(c2) = check_condition2(a, b, 10_000) {
            verdicts.insert("condition2".to_string(), c2.verdict.as_str().to_string());
        }
    }

    Ok(SingularityReport {
        s: singular.len(),
        m: candidates.iter().filter(|c| c.kind == CandidateKind::InteriorMultiple).count(),
        s_bands: s_bands.into_iter().collect(),
        exclusion,
        candidates,
        verdicts,
        failed_seeds: failed,
    })
}

/// `(a, b)` for `q = a exp(-i 2 pi x) + b exp(i 2 pi x)`.
pub fn two_term_coefficients(p: &FourierPotential) -> Option<(Complex64, Complex64)> {
    if p.coeffs().all(|(n, _)| n == 1 || n == -1) && !p.is_zero() {
        Some((p.coeff(-1), p.coeff(1)))
    } else {
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Multiplicity {
    pub algebraic: u32,
    pub geometric: u32,
}

fn is_endpoint(t: f64) -> bool {
    let t = t.abs();
    t < 1e-12 || (PI - t).abs() < 1e-12
}

/// Algebraic multiplicity (1 or 2, from `F'`) and geometric multiplicity of
/// `lambda` as an eigenvalue of `L_t`.
pub fn multiplicity_at(
    p: &FourierPotential,
    lambda: Complex64,
    t: f64,
    tcfg: &TrackingConfig,
) -> Result<Multiplicity> {
    let m = fundamental_at_one(p, lambda, tcfg.tol)?;
    let residual = (m.f - 2.0 * t.cos()).norm();
    let scale = 1.0 + lambda.norm();
    if residual > 1e-6 * scale.sqrt() {
        return Err(Error::NotAnEigenvalue { t, residual });
    }
    let algebraic = if tcfg.is_multiple(&m) { 2 } else { 1 };
    let geometric = if is_endpoint(t) && algebraic == 2 && !is_jordan(&m) { 2 } else { 1 };
    Ok(Multiplicity { algebraic, geometric })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ItemVerdict {
    Holds,
    Fails,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Overall {
    ConsistentWithAsymptoticallySpectral,
    Inconsistent,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralityDiagnostic {
    pub n_used: usize,
    pub nmax: usize,
    /// No spectral singularity on bands `N < |n| <= nmax`.
    pub item_i: ItemVerdict,
    /// Eigenvalues simple at the sampled interior quasimomenta of those bands.
    pub item_ii: ItemVerdict,
    /// No Jordan block at `t = 0, pi` on those bands.
    pub item_iii: ItemVerdict,
    /// Measured `sup |alpha_n(t)|^-1` over those bands.
    pub item_iv: ItemVerdict,
    pub sup_proj_norm: f64,
    /// Per-band sup of the projection norm, `(n, sup)`.
    pub band_sups: Vec<(i64, f64)>,
    /// The sup grows toward the end of the computed range.
    pub growth_at_edge: bool,
    pub overall: Overall,
}

/// Finite-range check of the asymptotic-spectrality items on bands above the seed
/// threshold `N`. Never proves anything about `|n| > nmax`.
pub fn spectrality_diagnostic(
    p: &FourierPotential,
    curves: &[SpectralCurve],
    report: &SingularityReport,
    tcfg: &TrackingConfig,
    dcfg: &DiagnosticConfig,
) -> SpectralityDiagnostic {
    let n_used = tcfg.threshold(p);
    let high: Vec<&SpectralCurve> = curves
        .iter()
        .filter(|c| c.n.unsigned_abs() as usize > n_used)
        .collect();
    let in_range = |bands: &[i64]| bands.iter().any(|b| b.unsigned_abs() as usize > n_used);

    let mut band_sups = Vec::new();
    let mut simple = true;
    let mut alpha_failed = false;
    for c in &high {
        let len = c.samples.len();
        let step = (len / dcfg.alpha_samples.max(1)).max(1);
        let picks: Vec<usize> = (1..len.saturating_sub(1)).step_by(step).collect();
        let vals = par::map(&picks, |&j| {
            let s = &c.samples[j];
            eigenfunction_pair_at(p, c.n, s.t, s.lambda, tcfg, dcfg.nx)
        });
        let mut sup: f64 = 0.0;
        for v in vals {
            match v {
                Ok(r) => sup = sup.max(r.proj_norm),
                Err(Error::MultipleEigenvalue { .. }) => simple = false,
                Err(_) => alpha_failed = true,
            }
        }
        band_sups.push((c.n, sup));
    }

    let verdict = |ok: bool| if ok { ItemVerdict::Holds } else { ItemVerdict::Fails };
    let empty = high.is_empty();
    let item_i = if empty {
        ItemVerdict::Inconclusive
    } else {
        verdict(!report.candidates.iter().any(|c| c.kind.is_singular() && in_range(&c.bands)))
    };
    let item_ii = if empty { ItemVerdict::Inconclusive } else { verdict(simple) };
    let item_iii = if empty {
        ItemVerdict::Inconclusive
    } else {
        verdict(!report
            .candidates
            .iter()
            .any(|c| c.kind == CandidateKind::EndpointJordan && in_range(&c.bands)))
    };

    let sup_proj_norm = band_sups.iter().map(|b| b.1).fold(0.0, f64::max);
    // compare the outer half of the computed bands with the inner half
    let mut by_level: Vec<(u64, f64)> = band_sups.iter().map(|(n, s)| (n.unsigned_abs(), *s)).collect();
    by_level.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let half = by_level.len() / 2;
    let inner_sup = by_level[..half].iter().map(|b| b.1).fold(0.0, f64::max);
    let outer_sup = by_level[half..].iter().map(|b| b.1).fold(0.0, f64::max);
    let growth_at_edge = half > 0 && outer_sup > 1.5 * inner_sup;
    let item_iv = if empty || alpha_failed {
        ItemVerdict::Inconclusive
    } else {
        verdict(!growth_at_edge && sup_proj_norm.is_finite())
    };

    let items = [item_i, item_ii, item_iii, item_iv];
    let overall = if items.contains(&ItemVerdict::Fails) {
        Overall::Inconsistent
    } else if items.contains(&ItemVerdict::Inconclusive) {
        Overall::Inconclusive
    } else {
        Overall::ConsistentWithAsymptoticallySpectral
    };
    SpectralityDiagnostic {
        n_used,
        nmax: tcfg.nmax,
        item_i,
        item_ii,
        item_iii,
        item_iv,
        sup_proj_norm,
        band_sups,
        growth_at_edge,
        overall,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Condition2Verdict {
    Holds,
    Fails,
    Borderline,
}

impl Condition2Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Condition2Verdict::Holds => "holds",
            Condition2Verdict::Fails => "fails",
            Condition2Verdict::Borderline => "borderline",
        }
    }
}

/// Minimum of `|q x - (2p - 1)|` over `1 <= q <= Q` with the odd integer chosen
/// nearest to `q x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OddWitness {
    pub min: f64,
    pub q: u64,
    /// The odd integer `2p - 1` attaining the minimum.
    pub odd: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FormCheck {
    pub witness: OddWitness,
    /// Lowest-terms `(m, n)` with `x = m / n`, `n <= Q`, if found.
    pub rational: Option<(i64, u64)>,
    pub verdict: Condition2Verdict,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Condition2Report {
    /// `arg(ab) / pi` in `(-1, 1]`.
    pub alpha: f64,
    pub moduli_equal: bool,
    /// The `q alpha` form.
    pub primary: FormCheck,
    /// The `2 q alpha` form used for `2a cos(2 pi x)`.
    pub mathieu: FormCheck,
    pub verdict: Condition2Verdict,
}

pub const FAIL_TOL: f64 = 1e-9;

pub fn odd_search(x: f64, qmax: u64) -> OddWitness {
    let mut best = OddWitness { min: f64::INFINITY, q: 0, odd: 1 };
    for q in 1..=qmax {
        let y = q as f64 * x;
        let odd = 2.0 * ((y - 1.0) / 2.0).round() + 1.0;
        let d = (y - odd).abs();
        if d < best.min {
            best = OddWitness { min: d, q, odd: odd as i64 };
        }
    }
    best
}

/// Continued-fraction convergent `m / n` equal to `x` (within roundoff) with `n <= qmax`.
pub fn rational_certificate(x: f64, qmax: u64) -> Option<(i64, u64)> {
    let (mut h0, mut h1) = (0i128, 1i128);
    let (mut k0, mut k1) = (1i128, 0i128);
    let mut r = x;
    for _ in 0..64 {
        let a = r.floor();
        if !a.is_finite() || a.abs() > 1e15 {
            break;
        }
        let ai = a as i128;
        let (h2, k2) = (ai * h1 + h0, ai * k1 + k0);
        if k2 > qmax as i128 {
            break;
        }
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        if (x - h1 as f64 / k1 as f64).abs() <= 1e-12 * (1.0 + x.abs()) {
            return Some((h1 as i64, k1 as u64));
        }
        let frac = r - a;
        if frac.abs() < 1e-15 {
            break;
        }
        r = 1.0 / frac;
    }
    None
}

pub fn check_form(x: f64, qmax: u64) -> FormCheck {
    let witness = odd_search(x, qmax);
    let rational = rational_certificate(x, qmax);
    let verdict = if witness.min < FAIL_TOL {
        Condition2Verdict::Fails
    } else if rational.is_some_and(|(m, _)| m % 2 == 0) {
        Condition2Verdict::Holds
    } else {
        Condition2Verdict::Borderline
    };
    FormCheck { witness, rational, verdict }
}

/// Condition 2 for `q = a exp(-i 2 pi x) + b exp(i 2 pi x)`.
pub fn check_condition2(a: Complex64, b: Complex64, qmax: u64) -> Result<Condition2Report> {
    let ab = a * b;
    if ab.norm() == 0.0 {
        return Err(Error::ZeroProduct);
    }
    if qmax == 0 {
        return Err(Error::InvalidConfig("Q must be positive".into()));
    }
    let alpha = check_alpha(ab.arg() / PI);
    Ok(condition2_for_alpha(alpha, qmax, (a.norm() - b.norm()).abs() <= 1e-12 * a.norm().max(b.norm())))
}

fn check_alpha(alpha: f64) -> f64 {
    if alpha <= -1.0 {
        alpha + 2.0
    } else {
        alpha
    }
}

pub fn condition2_for_alpha(alpha: f64, qmax: u64, moduli_equal: bool) -> Condition2Report {
    let primary = check_form(alpha, qmax);
    let mathieu = check_form(2.0 * alpha, qmax);
    Condition2Report { alpha, moduli_equal, primary, mathieu, verdict: primary.verdict }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Condition1Params {
    pub s: u32,
    pub c: f64,
    pub eps: f64,
    pub ratio_cap: f64,
}

impl Default for Condition1Params {
    fn default() -> Self {
        Self { s: 0, c: 0.5, eps: 0.1, ratio_cap: 10.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Condition1Row {
    pub n: i64,
    #[serde(with = "crate::json::complex")]
    pub qn: Complex64,
    #[serde(with = "crate::json::complex")]
    pub qmn: Complex64,
    pub ratio: f64,
    pub comparable: bool,
    pub decay: bool,
    pub re_nonnegative: bool,
    pub im_bounded_below: bool,
}

impl Condition1Row {
    pub fn holds(&self) -> bool {
        self.comparable && self.decay && (self.re_nonnegative || self.im_bounded_below)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Condition1Report {
    pub rows: Vec<Condition1Row>,
    pub holds_on_range: bool,
    pub first_violation: Option<i64>,
    /// User-declared smoothness, not verified.
    pub declared_smoothness: Option<crate::potential::Smoothness>,
}

/// Per-`n` check of `q_n ~ q_-n`, `|q_n| > c n^(-s-1)` and
/// `Re q_n q_-n >= 0 or |Im q_n q_-n| >= eps |q_n q_-n|`.
pub fn check_condition1(
    p: &FourierPotential,
    params: &Condition1Params,
    nrange: impl IntoIterator<Item = i64>,
) -> Result<Condition1Report> {
    let mut rows = Vec::new();
    for n in nrange {
        if n <= 0 {
            return Err(Error::InvalidConfig(format!("n = {n} must be positive")));
        }
        let (qn, qmn) = (p.coeff(n), p.coeff(-n));
        if qn.norm() == 0.0 || qmn.norm() == 0.0 {
            return Err(Error::ZeroCoefficient { n });
        }
        let ratio = (qn.norm() / qmn.norm()).max(qmn.norm() / qn.norm());
        let prod = qn * qmn;
        let bound = params.c * (n as f64).powi(-(params.s as i32) - 1);
        rows.push(Condition1Row {
            n,
            qn,
            qmn,
            ratio,
            comparable: ratio <= params.ratio_cap,
            decay: qn.norm() > bound && qmn.norm() > bound,
            re_nonnegative: prod.re >= 0.0,
            im_bounded_below: prod.im.abs() >= params.eps * prod.norm(),
        });
    }
    let first_violation = rows.iter().find(|r| !r.holds()).map(|r| r.n);
    Ok(Condition1Report {
        holds_on_range: first_violation.is_none(),
        first_violation,
        rows,
        declared_smoothness: p.meta(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn condition2_analytic_cases() {
        let r = check_condition2(c(1.0, 0.0), c(1.0, 0.0), 10_000).unwrap();
        assert_eq!(r.verdict, Condition2Verdict::Holds);
        assert_eq!(r.primary.witness.min, 1.0);

        let r = check_condition2(c(1.0, 0.0), c(-1.0, 0.0), 10_000).unwrap();
        assert_eq!(r.verdict, Condition2Verdict::Fails);
        assert_eq!((r.primary.witness.q, r.primary.witness.min), (1, 0.0));

        let w = Complex64::from_polar(1.0, PI / 4.0);
        let r = check_condition2(w, w, 10_000).unwrap();
        assert_eq!(r.verdict, Condition2Verdict::Fails);
        assert_eq!(r.primary.witness.q, 2);
        assert!(r.primary.witness.min < FAIL_TOL);

        assert_eq!(check_condition2(c(0.0, 0.0), c(1.0, 0.0), 100), Err(Error::ZeroProduct));
    }

    #[test]
    fn certificates() {
        assert_eq!(rational_certificate(0.0, 100), Some((0, 1)));
        assert_eq!(rational_certificate(2.0 / 7.0, 100), Some((2, 7)));
        assert_eq!(rational_certificate(-3.0 / 8.0, 100), Some((-3, 8)));
        assert_eq!(rational_certificate(2f64.sqrt() - 1.0, 100), None);
        let r = condition2_for_alpha(2f64.sqrt() - 1.0, 1000, true);
        assert_eq!(r.verdict, Condition2Verdict::Borderline);
    }

    #[test]
    fn condition1_cases() {
        let p = FourierPotential::two_term(c(1.0, 0.0), c(1.0, 0.0));
        let r = check_condition1(&p, &Condition1Params { s: 0, c: 0.5, ..Default::default() }, [1]).unwrap();
        assert!(r.holds_on_range);

        let p = FourierPotential::two_term(c(1.0, 0.0), c(-1.0, 0.0));
        let r = check_condition1(&p, &Condition1Params { eps: 0.5, ..Default::default() }, [1]).unwrap();
        assert!(!r.holds_on_range);
        assert!(!r.rows[0].re_nonnegative && !r.rows[0].im_bounded_below);

        let p = FourierPotential::from_fourier([(1, c(1.0, 0.0)), (-1, c(1.0, 0.0))]).unwrap();
        assert_eq!(
            check_condition1(&p, &Condition1Params::default(), [1, 2]),
            Err(Error::ZeroCoefficient { n: 2 })
        );
    }

    #[test]
    fn free_multiplicities() {
        let z = FourierPotential::zero();
        let cfg = TrackingConfig::default();
        let m = multiplicity_at(&z, c(4.0 * PI * PI, 0.0), 0.0, &cfg).unwrap();
        assert_eq!(m, Multiplicity { algebraic: 2, geometric: 2 });
        let m = multiplicity_at(&z, c((2.0 * PI + 0.5).powi(2), 0.0), 0.5, &cfg).unwrap();
        assert_eq!(m, Multiplicity { algebraic: 1, geometric: 1 });
        assert!(multiplicity_at(&z, c(3.0, 0.0), 0.5, &cfg).is_err());
    }
}
