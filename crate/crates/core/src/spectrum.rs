//! Indexed eigenvalues `lambda_n(t)` of `L_t` (roots of `F(lambda) = 2 cos t`) and
//! the band curves `Gamma_n = { lambda_n(t) : t in [0, pi] }`.
//!
//! Labels follow the ordering of the unperturbed levels `(2 pi n + t)^2` for
//! `t in (0, pi)`: sorted by real part, rank `0, 1, 2, 3, 4, ...` carries label
//! `0, -1, 1, -2, 2, ...`. For large `|n|` this is the labeling in which the larger
//! real part of a near-degenerate pair at `t ~ 0` is `lambda_n` and at `t ~ pi` is
//! `lambda_{-(n+1)}`. Band curves are continued from the middle of `[0, pi]`, where
//! bands are well separated, toward both ends.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::galerkin::galerkin_eigenvalues;
use crate::ode::{discriminant_second_derivative, fundamental_at_one, MonodromyData, DEFAULT_TOL};
use crate::par;
use crate::potential::FourierPotential;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackingConfig {
    pub nmax: usize,
    pub tgrid: usize,
    /// Radius parameter of the endpoint disks; must satisfy `15 pi rho < 1`.
    pub rho: f64,
    pub newton_tol: f64,
    pub newton_maxiter: usize,
    /// Integrator tolerance.
    pub tol: f64,
    /// Threshold on `|F'| sqrt(1 + |lambda|)` below which a root counts as multiple.
    pub mult_tol: f64,
    /// Bands with `|n|` up to this are seeded from Galerkin eigenvalues; `None`
    /// selects `max(2 * order, 4)`.
    pub seed_threshold: Option<usize>,
}

impl Default for TrackingConfig {
    fn default() -> Self {
        Self {
            nmax: 10,
            tgrid: 256,
            rho: 1.0 / (16.0 * PI),
            newton_tol: 1e-9,
            newton_maxiter: 80,
            tol: DEFAULT_TOL,
            mult_tol: 1e-6,
            seed_threshold: None,
        }
    }
}

impl TrackingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(15.0 * PI * self.rho < 1.0) || !(self.rho > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "rho = {} violates 0 < 15 pi rho < 1",
                self.rho
            )));
        }
        if self.tgrid < 16 {
            return Err(Error::InvalidConfig(format!("tgrid = {} < 16", self.tgrid)));
        }
        if !(self.newton_tol > 0.0 && self.tol > 0.0 && self.mult_tol > 0.0) {
            return Err(Error::InvalidConfig("tolerances must be positive".into()));
        }
        Ok(())
    }

    /// Threshold `N` separating Galerkin-seeded bands from asymptotically seeded ones.
    pub fn threshold(&self, p: &FourierPotential) -> usize {
        self.seed_threshold
            .unwrap_or_else(|| (2 * p.effective_order()).max(4))
    }

    /// `F'` decays like `sin t / sqrt(lambda)` along the bands, hence the weight.
    pub fn is_multiple(&self, m: &MonodromyData) -> bool {
        m.df.norm() * (1.0 + m.lambda.norm()).sqrt() < self.mult_tol
    }
}

pub fn rank_to_label(rank: usize) -> i64 {
    let m = rank.div_ceil(2) as i64;
    if rank % 2 == 1 {
        -m
    } else {
        m
    }
}

pub fn label_to_rank(n: i64) -> usize {
    if n > 0 {
        2 * n as usize
    } else {
        2 * n.unsigned_abs() as usize - usize::from(n < 0)
    }
}

/// `m` points `t_j = j pi / (m - 1)` with both endpoints exact.
pub fn t_grid(m: usize) -> Vec<f64> {
    (0..m)
        .map(|j| if j + 1 == m { PI } else { j as f64 * PI / (m - 1) as f64 })
        .collect()
}

/// Unperturbed level `(2 pi n + t)^2`.
pub fn free_level(n: i64, t: f64) -> f64 {
    let w = 2.0 * PI * n as f64 + t;
    w * w
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlochEigenvalue {
    pub n: i64,
    pub t: f64,
    pub lambda: Complex64,
    /// Algebraic multiplicity as a root of `F - 2 cos t`.
    pub multiplicity: u32,
    /// `F'(lambda)`, kept for continuation and regularity checks.
    pub df: Complex64,
    /// `|F(lambda) - 2 cos t|`.
    pub residual: f64,
}

/// All computed eigenvalues at one quasimomentum, ordered by label rank.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenvalueSet {
    pub t: f64,
    pub values: Vec<BlochEigenvalue>,
    /// Per-index failures; the remaining values are still valid.
    pub issues: Vec<Error>,
}

impl EigenvalueSet {
    pub fn get(&self, n: i64) -> Option<&BlochEigenvalue> {
        self.values.iter().find(|v| v.n == n)
    }
}

struct Root {
    lambda: Complex64,
    mono: MonodromyData,
}

fn newton(
    p: &FourierPotential,
    target: Complex64,
    seed: Complex64,
    cap: f64,
    deflate: &[Complex64],
    cfg: &TrackingConfig,
) -> Option<Root> {
    let mut lam = seed;
    for _ in 0..cfg.newton_maxiter {
        let m = fundamental_at_one(p, lam, cfg.tol).ok()?;
        let g = m.f - target;
        if g.norm() < 1e-3 * cfg.newton_tol && deflate.is_empty() {
            return Some(polish_double(p, target, Root { lambda: lam, mono: m }, cfg));
        }
        let mut step = if deflate.is_empty() {
            if m.df.norm() == 0.0 {
                Complex64::new(1e-8 * (1.0 + lam.norm()), 0.0)
            } else {
                -g / m.df
            }
        } else {
            // Newton on g / prod(lambda - lambda_k)
            let mut logd = m.df / g;
            for &r in deflate {
                logd -= 1.0 / (lam - r);
            }
            if g.norm() == 0.0 {
                return Some(Root { lambda: lam, mono: m });
            }
            -1.0 / logd
        };
        if !(step.re.is_finite() && step.im.is_finite()) {
            return None;
        }
        if step.norm() > cap {
            step *= cap / step.norm();
        }
        lam += step;
        if step.norm() <= 1e-15 * (1.0 + lam.norm()) {
            let m = fundamental_at_one(p, lam, cfg.tol).ok()?;
            return Some(Root { lambda: lam, mono: m });
        }
    }
    let m = fundamental_at_one(p, lam, cfg.tol).ok()?;
    ((m.f - target).norm() < cfg.newton_tol).then_some(Root { lambda: lam, mono: m })
}

/// Newton converges only linearly to a double root, leaving `F'` at the square root
/// of the residual. If a critical point of `F` nearby is itself a root, move there.
fn polish_double(p: &FourierPotential, target: Complex64, root: Root, cfg: &TrackingConfig) -> Root {
    let weight = (1.0 + root.lambda.norm()).sqrt();
    if root.mono.df.norm() * weight > 1e-3 {
        return root;
    }
    let Ok(f2) = discriminant_second_derivative(p, root.lambda, cfg.tol) else {
        return root;
    };
    if f2.norm() == 0.0 {
        return root;
    }
    let lc = root.lambda - root.mono.df / f2;
    match fundamental_at_one(p, lc, cfg.tol) {
        Ok(mc) if (mc.f - target).norm() <= (root.mono.f - target).norm().max(1e-3 * cfg.newton_tol) => {
            Root { lambda: lc, mono: mc }
        }
        _ => root,
    }
}

fn same_root(a: Complex64, b: Complex64) -> bool {
    (a - b).norm() <= 1e-8 * (1.0 + a.norm())
}

/// Eigenvalues `lambda_n(t)` for `|n| <= nmax`. Uses `lambda_n(-t) = lambda_n(t)`.
pub fn eigenvalues_at(p: &FourierPotential, t: f64, cfg: &TrackingConfig) -> Result<EigenvalueSet> {
    eigenvalues_at_ranks(p, t, 2 * cfg.nmax + 1, cfg)
}

/// The single eigenvalue `lambda_n(t)`.
pub fn eigenvalue(p: &FourierPotential, n: i64, t: f64, cfg: &TrackingConfig) -> Result<BlochEigenvalue> {
    let set = eigenvalues_at_ranks(p, t, label_to_rank(n) + 1, cfg)?;
    set.get(n).copied().ok_or(Error::NewtonDivergence { n, t })
}

pub(crate) fn eigenvalues_at_ranks(
    p: &FourierPotential,
    t: f64,
    count: usize,
    cfg: &TrackingConfig,
) -> Result<EigenvalueSet> {
    if !t.is_finite() {
        return Err(Error::NonFiniteInput("quasimomentum"));
    }
    let tau = t.abs().min(PI);
    let target = Complex64::new(2.0 * tau.cos(), 0.0);
    let nseed = cfg.threshold(p);
    let galerkin_ranks = (2 * nseed + 1).min(count);
    let width = (nseed + 20).max(2 * p.effective_order() + nseed);
    let gal = galerkin_eigenvalues(p, tau, width)?;

    let seeds: Vec<(usize, Complex64)> = (0..count)
        .map(|r| {
            let s = if r < galerkin_ranks {
                gal[r]
            } else {
                Complex64::new(free_level(rank_to_label(r), tau), 0.0)
            };
            (r, s)
        })
        .collect();

    let cap_for = |r: usize| 2.0 * PI * (rank_to_label(r).unsigned_abs() as f64 + 1.0);
    let mut found: Vec<Option<Root>> =
        par::map(&seeds, |&(r, s)| newton(p, target, s, cap_for(r), &[], cfg));

    let mut issues = Vec::new();
    // Collisions: two seeds on one simple root. Recover the lost root by deflation.
    for i in 0..count {
        for j in 0..i {
            let (Some(a), Some(b)) = (&found[j], &found[i]) else {
                continue;
            };
            if same_root(a.lambda, b.lambda) && !cfg.is_multiple(&a.mono) {
                let known = [a.lambda];
                let retry = newton(p, target, seeds[i].1, cap_for(i), &known, cfg)
                    .filter(|r| !same_root(r.lambda, a.lambda))
                    .and_then(|r| newton(p, target, r.lambda, cap_for(i), &[], cfg))
                    .filter(|r| !same_root(r.lambda, a.lambda));
                if retry.is_none() {
                    issues.push(Error::SeedCollision {
                        n1: rank_to_label(j),
                        n2: rank_to_label(i),
                        t,
                    });
                }
                found[i] = retry;
            }
        }
    }

    let mut roots: Vec<Root> = Vec::with_capacity(count);
    for (r, f) in found.into_iter().enumerate() {
        match f {
            Some(root) => roots.push(root),
            None => {
                if !issues.iter().any(|e| matches!(e, Error::SeedCollision { n2, .. } if *n2 == rank_to_label(r))) {
                    issues.push(Error::NewtonDivergence { n: rank_to_label(r), t });
                }
            }
        }
    }
    roots.sort_by(|a, b| {
        a.lambda
            .re
            .total_cmp(&b.lambda.re)
            .then(a.lambda.im.total_cmp(&b.lambda.im))
    });

    let values = roots
        .iter()
        .enumerate()
        .map(|(r, root)| {
            let multiple = cfg.is_multiple(&root.mono);
            let shared = roots
                .iter()
                .filter(|o| same_root(o.lambda, root.lambda))
                .count() as u32;
            BlochEigenvalue {
                n: rank_to_label(r),
                t,
                lambda: root.lambda,
                multiplicity: if multiple { shared.max(2) } else { 1 },
                df: root.mono.df,
                residual: (root.mono.f - target).norm(),
            }
        })
        .collect();
    Ok(EigenvalueSet { t, values, issues })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralCurve {
    pub n: i64,
    /// Samples on the uniform grid `t_j = j pi / (tgrid - 1)`.
    pub samples: Vec<BlochEigenvalue>,
    /// Both endpoints `t = 0` and `t = pi` are present.
    pub closed: bool,
    /// Continuation hit an unresolved ambiguity on this band.
    pub suspect: bool,
}

impl SpectralCurve {
    pub fn max_jump(&self) -> f64 {
        self.samples
            .windows(2)
            .map(|w| (w[1].lambda - w[0].lambda).norm())
            .fold(0.0, f64::max)
    }

    /// Polygonal length of the sampled curve.
    pub fn length(&self) -> f64 {
        self.samples
            .windows(2)
            .map(|w| (w[1].lambda - w[0].lambda).norm())
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BandSet {
    pub curves: Vec<SpectralCurve>,
    pub issues: Vec<Error>,
}

impl BandSet {
    pub fn curve(&self, n: i64) -> Option<&SpectralCurve> {
        self.curves.iter().find(|c| c.n == n)
    }
}

const MAX_REFINE: u32 = 6;

/// `lambda'(t) = -2 sin t / F'(lambda)`.
fn slope(v: &BlochEigenvalue) -> Complex64 {
    if v.df.norm() == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    -2.0 * v.t.abs().sin() / v.df
}

struct Matcher<'a> {
    p: &'a FourierPotential,
    cfg: &'a TrackingConfig,
    count: usize,
}

enum MatchOutcome {
    Clean(Vec<usize>),
    Rejected(Vec<usize>, Vec<usize>),
}

impl Matcher<'_> {
    /// Assign each previous band to a candidate at the next point.
    fn assign(&self, prev: &[BlochEigenvalue], next: &[BlochEigenvalue]) -> MatchOutcome {
        let dt = next.first().map(|v| v.t).unwrap_or(0.0) - prev.first().map(|v| v.t).unwrap_or(0.0);
        let pred: Vec<Complex64> = prev
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let step = slope(v) * dt;
                let nearest = prev
                    .iter()
                    .enumerate()
                    .filter(|(j, o)| *j != i && !same_root(o.lambda, v.lambda))
                    .map(|(_, o)| (o.lambda - v.lambda).norm())
                    .fold(f64::INFINITY, f64::min);
                if step.norm() < 0.25 * nearest {
                    v.lambda + step
                } else {
                    v.lambda
                }
            })
            .collect();

        let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(prev.len() * next.len());
        for (i, pr) in pred.iter().enumerate() {
            for (j, nx) in next.iter().enumerate() {
                pairs.push(((nx.lambda - pr).norm(), i, j));
            }
        }
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        let mut assigned = vec![usize::MAX; prev.len()];
        let mut taken = vec![false; next.len()];
        for &(_, i, j) in &pairs {
            if assigned[i] == usize::MAX && !taken[j] {
                assigned[i] = j;
                taken[j] = true;
            }
        }

        let mut rejected = Vec::new();
        for (i, &j) in assigned.iter().enumerate() {
            if j == usize::MAX {
                rejected.push(i);
                continue;
            }
            let d = (next[j].lambda - pred[i]).norm();
            let scale = 1.0 + next[j].lambda.norm();
            let rival = next
                .iter()
                .enumerate()
                .filter(|(k, o)| *k != j && !same_root(o.lambda, next[j].lambda))
                .map(|(_, o)| (o.lambda - pred[i]).norm())
                .fold(f64::INFINITY, f64::min);
            let ambiguous = (rival - d).abs() < 1e-9 * scale;
            let bound = 4.0 * slope(&prev[i]).norm().max(slope(&next[j]).norm()) * dt.abs()
                + 1e-8 * scale;
            let jump = d > bound && d > 0.5 * rival;
            if ambiguous || jump {
                rejected.push(i);
            }
        }
        if rejected.is_empty() {
            MatchOutcome::Clean(assigned)
        } else {
            MatchOutcome::Rejected(assigned, rejected)
        }
    }

    fn set_at(&self, t: f64) -> Result<Vec<BlochEigenvalue>> {
        Ok(eigenvalues_at_ranks(self.p, t, self.count, self.cfg)?.values)
    }

    /// Continue `prev` (ordered by band slot) to the point `next`, refining the
    /// interval by bisection where the assignment is not clean.
    fn advance(
        &self,
        prev: &[BlochEigenvalue],
        next: &[BlochEigenvalue],
        level: u32,
        suspects: &mut Vec<(usize, f64)>,
    ) -> Result<Vec<BlochEigenvalue>> {
        let outcome = self.assign(prev, next);
        let (assigned, rejected) = match outcome {
            MatchOutcome::Clean(a) => (a, Vec::new()),
            MatchOutcome::Rejected(a, r) => (a, r),
        };
        if !rejected.is_empty() && level < MAX_REFINE {
            let tm = 0.5 * (prev[0].t + next[0].t);
            if let Ok(mid) = self.set_at(tm) {
                if mid.len() == next.len() {
                    let at_mid = self.advance(prev, &mid, level + 1, suspects)?;
                    return self.advance(&at_mid, next, level + 1, suspects);
                }
            }
        }
        for &i in &rejected {
            suspects.push((i, next[0].t));
        }
        Ok(assigned
            .iter()
            .enumerate()
            .map(|(i, &j)| if j == usize::MAX { prev[i] } else { next[j] })
            .collect())
    }
}

/// Band curves for `|n| <= nmax` on the uniform grid `t_j = j pi / (tgrid - 1)`.
pub fn track_bands(p: &FourierPotential, cfg: &TrackingConfig) -> Result<BandSet> {
    cfg.validate()?;
    let tgrid = cfg.tgrid;
    let ts = t_grid(tgrid);
    // one extra pair of ranks so that bands +-nmax always have their partners
    let count = 2 * cfg.nmax + 3;
    let sets: Vec<Result<EigenvalueSet>> = par::map(&ts, |&t| eigenvalues_at_ranks(p, t, count, cfg));
    let mut issues = Vec::new();
    let mut grid_sets = Vec::with_capacity(tgrid);
    for s in sets {
        let s = s?;
        issues.extend(s.issues.iter().cloned());
        grid_sets.push(s.values);
    }
    let full = grid_sets.iter().all(|s| s.len() == count);
    if !full {
        // continuation needs the same number of roots everywhere
        return Err(issues.into_iter().next().unwrap_or(Error::NewtonDivergence { n: 0, t: 0.0 }));
    }

    let matcher = Matcher { p, cfg, count };
    let mid = tgrid / 2;
    let mut paths: Vec<Vec<BlochEigenvalue>> = vec![Vec::new(); tgrid];
    paths[mid] = grid_sets[mid].clone();
    let mut suspects: Vec<(usize, f64)> = Vec::new();
    for j in mid + 1..tgrid {
        paths[j] = matcher.advance(&paths[j - 1], &grid_sets[j], 0, &mut suspects)?;
    }
    for j in (0..mid).rev() {
        paths[j] = matcher.advance(&paths[j + 1], &grid_sets[j], 0, &mut suspects)?;
    }

    let labels: Vec<i64> = paths[mid].iter().map(|v| v.n).collect();
    let mut curves = Vec::new();
    for (slot, &n) in labels.iter().enumerate() {
        if n.unsigned_abs() as usize > cfg.nmax {
            continue;
        }
        let samples: Vec<BlochEigenvalue> = paths
            .iter()
            .map(|row| BlochEigenvalue { n, ..row[slot] })
            .collect();
        let suspect = suspects.iter().any(|&(s, _)| s == slot);
        if suspect {
            for &(s, t) in suspects.iter().filter(|(s, _)| *s == slot) {
                let _ = s;
                issues.push(Error::MatchingAmbiguity { n, t });
            }
        }
        curves.push(SpectralCurve {
            n,
            samples,
            closed: true,
            suspect,
        });
    }
    curves.sort_by_key(|c| label_to_rank(c.n));
    Ok(BandSet { curves, issues })
}

#[derive(Serialize, Deserialize)]
struct BandSampleJson {
    t: f64,
    re: f64,
    im: f64,
    mult: u32,
}

#[derive(Serialize, Deserialize)]
struct BandJson {
    n: i64,
    samples: Vec<BandSampleJson>,
}

/// `[{"n": .., "samples": [{"t", "re", "im", "mult"}, ..]}, ..]`.
pub fn bands_to_json(curves: &[SpectralCurve]) -> String {
    let out: Vec<BandJson> = curves
        .iter()
        .map(|c| BandJson {
            n: c.n,
            samples: c
                .samples
                .iter()
                .map(|s| BandSampleJson { t: s.t, re: s.lambda.re, im: s.lambda.im, mult: s.multiplicity })
                .collect(),
        })
        .collect();
    serde_json::to_string_pretty(&out).expect("band serialization")
}

/// Inverse of [`bands_to_json`]. `df` and `residual` are not stored and come back as zero.
pub fn bands_from_json(text: &str) -> Result<Vec<SpectralCurve>> {
    let raw: Vec<BandJson> = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    Ok(raw
        .into_iter()
        .map(|b| {
            let samples: Vec<BlochEigenvalue> = b
                .samples
                .iter()
                .map(|s| BlochEigenvalue {
                    n: b.n,
                    t: s.t,
                    lambda: Complex64::new(s.re, s.im),
                    multiplicity: s.mult,
                    df: Complex64::default(),
                    residual: 0.0,
                })
                .collect();
            let closed = samples.first().is_some_and(|s| s.t == 0.0)
                && samples.last().is_some_and(|s| s.t == PI);
            SpectralCurve { n: b.n, samples, closed, suspect: false }
        })
        .collect())
}

/// CSV rows `t,n,re,im`.
pub fn bands_to_csv(curves: &[SpectralCurve]) -> String {
    let mut out = String::from("t,n,re,im\n");
    for c in curves {
        for s in &c.samples {
            out.push_str(&format!("{},{},{},{}\n", s.t, c.n, s.lambda.re, s.lambda.im));
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Membership {
    In,
    Out,
    Uncertain,
}

/// `lambda` lies in the spectrum iff `F(lambda)` is real with `|F| <= 2`.
pub fn spectrum_membership(p: &FourierPotential, lambda: Complex64, tol: f64) -> Result<Membership> {
    let f = fundamental_at_one(p, lambda, DEFAULT_TOL)?.f;
    Ok(classify_membership(f, tol))
}

pub(crate) fn classify_membership(f: Complex64, tol: f64) -> Membership {
    if f.im.abs() > tol || f.re.abs() > 2.0 + tol {
        Membership::Out
    } else if f.im.abs() < tol && f.re.abs() <= 2.0 - tol {
        Membership::In
    } else {
        Membership::Uncertain
    }
}

/// Violations of `|lambda_n(t) - (2 pi k +- t)^2| >= |n - k| |n + k|` for
/// `k not in {+-n, +-(n+1)}`, `|k| <= kmax`. Returns `(n, k, t)` triples.
pub fn separation_violations(values: &[BlochEigenvalue], kmax: i64) -> Vec<(i64, i64, f64)> {
    let mut out = Vec::new();
    for v in values {
        let n = v.n;
        let tau = v.t.abs();
        for k in -kmax..=kmax {
            if k == n || k == -n || k == n + 1 || k == -(n + 1) {
                continue;
            }
            let bound = ((n - k).abs() * (n + k).abs()) as f64;
            for s in [tau, -tau] {
                let d = (v.lambda - Complex64::new(free_level(k, s), 0.0)).norm();
                if d < bound {
                    out.push((n, k, v.t));
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn rank_label_round_trip() {
        for r in 0..50 {
            assert_eq!(label_to_rank(rank_to_label(r)), r);
        }
        assert_eq!(rank_to_label(0), 0);
        assert_eq!(rank_to_label(1), -1);
        assert_eq!(rank_to_label(2), 1);
    }

    #[test]
    fn free_eigenvalues_exact() {
        let cfg = TrackingConfig { nmax: 12, ..Default::default() };
        let t = PI / 2.0;
        let set = eigenvalues_at(&FourierPotential::zero(), t, &cfg).unwrap();
        assert!(set.issues.is_empty());
        assert_eq!(set.values.len(), 25);
        for v in &set.values {
            let want = free_level(v.n, t);
            assert!((v.lambda - c(want, 0.0)).norm() < 1e-8 * want, "n={} {}", v.n, v.lambda);
            assert_eq!(v.multiplicity, 1);
        }
    }

    #[test]
    fn free_double_roots_at_zero() {
        let cfg = TrackingConfig { nmax: 4, ..Default::default() };
        let set = eigenvalues_at(&FourierPotential::zero(), 0.0, &cfg).unwrap();
        for v in &set.values {
            assert_eq!(v.multiplicity, if v.n == 0 { 1 } else { 2 }, "n={}", v.n);
        }
    }

    #[test]
    fn symmetric_in_t() {
        let cfg = TrackingConfig { nmax: 6, ..Default::default() };
        let p = FourierPotential::mathieu(c(0.3, 0.2));
        let a = eigenvalues_at(&p, 0.7, &cfg).unwrap();
        let b = eigenvalues_at(&p, -0.7, &cfg).unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            assert_eq!(x.n, y.n);
            assert!((x.lambda - y.lambda).norm() < 1e-10 * (1.0 + x.lambda.norm()));
        }
    }

    #[test]
    fn membership_free() {
        let z = FourierPotential::zero();
        assert_eq!(spectrum_membership(&z, c(1.0, 0.0), 1e-9).unwrap(), Membership::In);
        assert_eq!(spectrum_membership(&z, c(-1.0, 0.0), 1e-9).unwrap(), Membership::Out);
        assert_eq!(classify_membership(c(2.0, 0.0), 1e-9), Membership::Uncertain);
    }

    #[test]
    fn config_validation() {
        let bad = TrackingConfig { rho: 0.1, ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = TrackingConfig { tgrid: 8, ..Default::default() };
        assert!(bad.validate().is_err());
        assert!(TrackingConfig::default().validate().is_ok());
    }

    #[test]
    fn free_bands_are_monotone_segments() {
        let cfg = TrackingConfig { nmax: 3, tgrid: 33, ..Default::default() };
        let bands = track_bands(&FourierPotential::zero(), &cfg).unwrap();
        assert_eq!(bands.curves.len(), 7);
        for curve in &bands.curves {
            let n = curve.n;
            for s in &curve.samples {
                let want = free_level(n, s.t);
                assert!((s.lambda - c(want, 0.0)).norm() < 1e-8 * (1.0 + want), "n={n} t={}", s.t);
            }
            let re: Vec<f64> = curve.samples.iter().map(|s| s.lambda.re).collect();
            let increasing = re.windows(2).all(|w| w[1] >= w[0] - 1e-9);
            let decreasing = re.windows(2).all(|w| w[1] <= w[0] + 1e-9);
            assert!(if n >= 0 { increasing } else { decreasing }, "n={n}");
        }
    }
}
