//! Gelfand transform, expansion coefficients `a_k(t)`, and the two reconstructions of a
//! compactly supported `f` from the spectral data of `L(q)`.
//!
//! The quasimomentum integral over `(-pi, pi)` uses the midpoint rule on `tgrid` nodes.
//! Only the nodes with `t > 0` are integrated: `lambda_k(-t) = lambda_k(t)`, and one
//! trace of `theta`, `phi` yields both `Phi_+` and `Phi_-`.
//!
//! The direct form pairs the nodes `t` and `-t` of one band. Their projections add up to
//! `2 phi(x, lambda) / F'(lambda)` with
//! `phi = theta'(1) h phi(x) + (theta(1) - phi'(1)) (h theta(x) + g phi(x)) / 2 - phi(1) g theta(x)`,
//! `h = int phi f` and `g = int theta f`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::diagnostics::SingularityReport;
use crate::error::{Error, Result};
use crate::floquet::{inner, l2_norm, periodic_grid, pm_from_trace, FloquetRecord};
use crate::json::Cx;
use crate::ode::{fundamental_at_one, fundamental_on_grid, Mat2};
use crate::par;
use crate::potential::FourierPotential;
use crate::spectrum::{eigenvalues_at, label_to_rank, TrackingConfig};

const QUAD_TOL: f64 = 1e-12;
const NODE_CHUNK: usize = 8;

/// A compactly supported function on the line. JSON objects are tagged by `"kind"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TestFunction {
    /// `exp(-1 / (1 - u^2))`, `u = (x - center) / radius`.
    Bump { center: f64, radius: f64 },
    /// `exp(-((x - center) / width)^2)`, cut off outside `center +- half_window`.
    Gaussian { center: f64, width: f64, half_window: f64 },
    /// `sum c exp(i omega x)` on `[a, b)`, terms given as `[omega, c]`.
    Trig { a: f64, b: f64, terms: Vec<(f64, Cx)> },
    /// `exp(i (2 pi k + t) x)` on `[0, 1)`.
    Mode { k: i64, t: f64 },
    /// Piecewise linear through equally spaced values from `a` to `b`.
    Samples { a: f64, b: f64, values: Vec<Cx> },
    /// `sum c f`.
    Combination { terms: Vec<(Cx, TestFunction)> },
}

impl TestFunction {
    pub fn from_json(text: &str) -> Result<Self> {
        let f: TestFunction = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        f.validate()?;
        Ok(f)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("test function serialization")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidConfig(format!("test function: {what}")));
        match self {
            TestFunction::Bump { center, radius } => {
                if !center.is_finite() || !(*radius > 0.0 && radius.is_finite()) {
                    return bad("bump needs a finite center and a positive radius");
                }
            }
            TestFunction::Gaussian { center, width, half_window } => {
                if !center.is_finite() || !(*width > 0.0) || !(*half_window > 0.0 && half_window.is_finite()) {
                    return bad("gaussian needs positive width and half_window");
                }
            }
            TestFunction::Trig { a, b, terms } => {
                if !(a < b) || !a.is_finite() || !b.is_finite() {
                    return bad("trig needs a < b");
                }
                if terms.iter().any(|(w, c)| !w.is_finite() || !c.re.is_finite() || !c.im.is_finite()) {
                    return bad("non-finite trig term");
                }
            }
            TestFunction::Mode { t, .. } => {
                if !t.is_finite() {
                    return bad("non-finite mode quasimomentum");
                }
            }
            TestFunction::Samples { a, b, values } => {
                if !(a < b) || !a.is_finite() || !b.is_finite() || values.len() < 2 {
                    return bad("samples need a < b and at least two values");
                }
                if values.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
                    return bad("non-finite sample");
                }
            }
            TestFunction::Combination { terms } => {
                if terms.is_empty() {
                    return bad("empty combination");
                }
                for (_, f) in terms {
                    f.validate()?;
                }
            }
        }
        Ok(())
    }

    /// The closed interval outside which `f` vanishes.
    pub fn support(&self) -> (f64, f64) {
        match self {
            TestFunction::Bump { center, radius } => (center - radius, center + radius),
            TestFunction::Gaussian { center, half_window, .. } => (center - half_window, center + half_window),
            TestFunction::Trig { a, b, .. } | TestFunction::Samples { a, b, .. } => (*a, *b),
            TestFunction::Mode { .. } => (0.0, 1.0),
            TestFunction::Combination { terms } => terms.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |acc, (_, f)| {
                let (a, b) = f.support();
                (acc.0.min(a), acc.1.max(b))
            }),
        }
    }

    pub fn eval(&self, x: f64) -> Complex64 {
        let zero = Complex64::new(0.0, 0.0);
        match self {
            TestFunction::Bump { center, radius } => {
                let u = (x - center) / radius;
                if u.abs() < 1.0 {
                    Complex64::new((-1.0 / (1.0 - u * u)).exp(), 0.0)
                } else {
                    zero
                }
            }
            TestFunction::Gaussian { center, width, half_window } => {
                if (x - center).abs() <= *half_window {
                    Complex64::new((-((x - center) / width).powi(2)).exp(), 0.0)
                } else {
                    zero
                }
            }
            TestFunction::Trig { a, b, terms } => {
                if x < *a || x >= *b {
                    return zero;
                }
                terms
                    .iter()
                    .map(|(w, c)| Complex64::from(*c) * Complex64::from_polar(1.0, w * x))
                    .sum()
            }
            TestFunction::Mode { k, t } => {
                if (0.0..1.0).contains(&x) {
                    Complex64::from_polar(1.0, (2.0 * PI * *k as f64 + t) * x)
                } else {
                    zero
                }
            }
            TestFunction::Samples { a, b, values } => {
                if x < *a || x > *b {
                    return zero;
                }
                let s = (x - a) / (b - a) * (values.len() - 1) as f64;
                let i = (s.floor() as usize).min(values.len() - 2);
                let w = s - i as f64;
                Complex64::from(values[i]) * (1.0 - w) + Complex64::from(values[i + 1]) * w
            }
            TestFunction::Combination { terms } => terms.iter().map(|(c, f)| Complex64::from(*c) * f.eval(x)).sum(),
        }
    }

    /// Points where `f` may fail to be smooth, including both ends of the support.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut pts = match self {
            TestFunction::Samples { a, b, values } => {
                let n = values.len() - 1;
                (0..=n).map(|i| a + (b - a) * i as f64 / n as f64).collect()
            }
            TestFunction::Combination { terms } => terms.iter().flat_map(|(_, f)| f.breakpoints()).collect(),
            _ => {
                let (a, b) = self.support();
                vec![a, b]
            }
        };
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts
    }

    /// `||f||` on the line.
    pub fn l2_norm(&self) -> f64 {
        integrate_pieces(&self.breakpoints(), |x| self.eval(x).norm_sqr()).sqrt()
    }
}

fn integrate_pieces(points: &[f64], g: impl Fn(f64) -> f64) -> f64 {
    points
        .windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| quadrature::double_exponential::integrate(&g, w[0], w[1], QUAD_TOL).integral)
        .sum()
}

/// `f` sampled at `j / nx` over its support.
struct Sampled {
    j0: i64,
    nx: usize,
    values: Vec<Complex64>,
}

impl Sampled {
    fn new(f: &TestFunction, nx: usize) -> Self {
        let (a, b) = f.support();
        let j0 = (a * nx as f64).floor() as i64;
        let j1 = (b * nx as f64).ceil() as i64;
        let values = (j0..=j1).map(|j| f.eval(j as f64 / nx as f64)).collect();
        Self { j0, nx, values }
    }

    fn indices(&self) -> impl Iterator<Item = (i64, &Complex64)> {
        (self.j0..).zip(&self.values)
    }

    fn cells(&self) -> (i64, i64) {
        let n = self.nx as i64;
        (self.j0.div_euclid(n), (self.j0 + self.values.len() as i64 - 1).div_euclid(n))
    }

    /// `f_t(r / nx)`, `r < nx`.
    fn fiber(&self, t: f64) -> Vec<Complex64> {
        let n = self.nx as i64;
        let mut out = vec![Complex64::new(0.0, 0.0); self.nx];
        for (j, v) in self.indices() {
            let m = j.div_euclid(n);
            out[j.rem_euclid(n) as usize] += v * Complex64::from_polar(1.0, -(m as f64) * t);
        }
        out
    }
}

/// `f_t(x) = sum_k f(x + k) e^{-ikt}` at a single point, so that `f_t(x + 1) = e^{it} f_t(x)`.
pub fn gelfand_point(f: &TestFunction, t: f64, x: f64) -> Complex64 {
    let (a, b) = f.support();
    let lo = (a - x).floor() as i64 - 1;
    let hi = (b - x).ceil() as i64 + 1;
    (lo..=hi)
        .map(|k| f.eval(x + k as f64) * Complex64::from_polar(1.0, -(k as f64) * t))
        .sum()
}

/// `f_t` on `periodic_grid(nx)`. The last sample is `e^{it} f_t(0)`.
pub fn gelfand_transform(f: &TestFunction, t: f64, nx: usize) -> Vec<Complex64> {
    let mut out = Sampled::new(f, nx).fiber(t);
    out.push(out[0] * Complex64::from_polar(1.0, t));
    out
}

/// `(2 pi)^-1 int int |f_t|^2 dx dt / int |f|^2`.
pub fn parseval_check(f: &TestFunction) -> Result<f64> {
    f.validate()?;
    let lhs = integrate_pieces(&f.breakpoints(), |x| f.eval(x).norm_sqr());
    if !(lhs > 0.0) {
        return Err(Error::InvalidConfig("test function vanishes".into()));
    }
    let (a, b) = f.support();
    let (lo, hi) = (a.floor() as i64 - 1, b.ceil() as i64 + 1);
    // the t-integrand is a trigonometric polynomial of degree hi - lo
    let m = (2 * (hi - lo + 1) as usize).max(64);
    let phases: Vec<Vec<Complex64>> = midpoint_nodes(m)
        .iter()
        .map(|&t| (lo..=hi).map(|k| Complex64::from_polar(1.0, k as f64 * t)).collect())
        .collect();
    let g = |x: f64| {
        let vals: Vec<Complex64> = (lo..=hi).map(|k| f.eval(x + k as f64)).collect();
        phases
            .iter()
            .map(|ph| vals.iter().zip(ph).map(|(v, e)| v * e).sum::<Complex64>().norm_sqr())
            .sum::<f64>()
            / m as f64
    };
    let mut cuts: Vec<f64> = f.breakpoints().iter().map(|p| p - p.floor()).collect();
    cuts.extend([0.0, 1.0]);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    Ok(integrate_pieces(&cuts, g) / lhs)
}

/// `t_j = -pi + (j + 1/2) 2 pi / m`.
pub fn midpoint_nodes(m: usize) -> Vec<f64> {
    (0..m).map(|j| -PI + (j as f64 + 0.5) * 2.0 * PI / m as f64).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpansionConfig {
    pub nmax: usize,
    /// Midpoint nodes on `(-pi, pi)`; even and at least 64.
    pub tgrid: usize,
    /// Samples per unit length in `x`.
    pub nx: usize,
    pub eps_sing: f64,
    /// Reconstruction interval.
    pub interval: (f64, f64),
    /// Bloch/direct agreement threshold relative to `||f||`.
    pub cross_tol_rel: f64,
    /// Interior singular quasimomenta `t_1, ..., t_m` in `(0, pi)`.
    pub exclusion: Vec<f64>,
    pub singular_bands: Vec<i64>,
    pub tracking: TrackingConfig,
}

impl Default for ExpansionConfig {
    fn default() -> Self {
        Self {
            nmax: 30,
            tgrid: 512,
            nx: 256,
            eps_sing: 1e-3,
            interval: (-2.0, 2.0),
            cross_tol_rel: 1e-3,
            exclusion: Vec::new(),
            singular_bands: Vec::new(),
            tracking: TrackingConfig::default(),
        }
    }
}

impl ExpansionConfig {
    /// Takes the exclusion points and the singular bands from a singularity report.
    pub fn with_report(mut self, rep: &SingularityReport) -> Self {
        let mut ts: Vec<f64> = rep.exclusion.iter().map(|t| t.abs()).filter(|t| *t > 0.0).collect();
        ts.sort_by(f64::total_cmp);
        ts.dedup();
        self.exclusion = ts;
        self.singular_bands = rep.s_bands.clone();
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if !(self.eps_sing > 0.0) {
            return bad(format!("eps_sing = {} must be positive", self.eps_sing));
        }
        if self.tgrid < 64 || self.tgrid % 2 == 1 {
            return bad(format!("tgrid = {} must be even and at least 64", self.tgrid));
        }
        if self.nx < 16 {
            return bad(format!("nx = {} < 16", self.nx));
        }
        if self.nmax < 1 {
            return bad("nmax must be at least 1".into());
        }
        let (a, b) = self.interval;
        if !(a < b) || !a.is_finite() || !b.is_finite() {
            return bad(format!("interval ({a}, {b}) is empty"));
        }
        if !(self.cross_tol_rel > 0.0) {
            return bad("cross_tol_rel must be positive".into());
        }
        self.tracking.validate()
    }

    /// `{0, +-t_1, ..., +-t_m}`.
    pub fn exclusion_points(&self) -> Vec<f64> {
        let mut pts = vec![0.0];
        for &t in &self.exclusion {
            pts.extend([-t, t]);
        }
        pts
    }

    fn nearest_exclusion(&self, t: f64) -> (f64, usize) {
        self.exclusion_points()
            .iter()
            .enumerate()
            .map(|(i, p)| ((t - p).abs(), i))
            .fold((f64::INFINITY, 0), |a, b| if b.0 < a.0 { b } else { a })
    }

    fn band_tracking(&self) -> TrackingConfig {
        TrackingConfig { nmax: self.nmax, ..self.tracking }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coefficient {
    pub n: i64,
    #[serde(with = "crate::json::complex")]
    pub a: Complex64,
}

/// The expansion of one fiber `f_t` in the eigenfunctions of `L_t`.
#[derive(Debug, Clone, PartialEq)]
pub struct FiberExpansion {
    pub t: f64,
    pub fiber: Vec<Complex64>,
    pub records: Vec<FloquetRecord>,
    pub coefficients: Vec<Coefficient>,
}

impl FiberExpansion {
    /// `||f_t - sum a_k Psi_k|| / ||f_t||`.
    pub fn residual(&self) -> f64 {
        let mut rest = self.fiber.clone();
        for (c, rec) in self.coefficients.iter().zip(&self.records) {
            for (r, psi) in rest.iter_mut().zip(&rec.psi) {
                *r -= c.a * psi;
            }
        }
        l2_norm(&rest) / l2_norm(&self.fiber)
    }
}

pub fn fiber_expansion(p: &FourierPotential, f: &TestFunction, t: f64, cfg: &ExpansionConfig) -> Result<FiberExpansion> {
    cfg.validate()?;
    f.validate()?;
    if !t.is_finite() || t.abs() > PI {
        return Err(Error::InvalidConfig(format!("t = {t} outside [-pi, pi]")));
    }
    if cfg.nearest_exclusion(t).0 < cfg.eps_sing {
        return Err(Error::ExclusionPoint { t });
    }
    let tr = cfg.band_tracking();
    let set = eigenvalues_at(p, t.abs(), &tr)?;
    if let Some(e) = set.issues.first() {
        return Err(e.clone());
    }
    let fiber = Sampled::new(f, cfg.nx).fiber(t);
    let grid = periodic_grid(cfg.nx);
    let mut records = Vec::with_capacity(set.values.len());
    let mut coefficients = Vec::with_capacity(set.values.len());
    for v in &set.values {
        let mono = fundamental_at_one(p, v.lambda, tr.tol)?;
        if tr.is_multiple(&mono) {
            return Err(Error::MultipleEigenvalue { n: v.n, t });
        }
        let trace = fundamental_on_grid(p, v.lambda, &grid, tr.tol)?;
        let (rp, rm) = pm_from_trace(p, v.n, t.abs(), &mono, &trace, cfg.nx)?;
        let rec = if t < 0.0 { rm } else { rp };
        coefficients.push(Coefficient { n: v.n, a: inner(&fiber, &rec.psi_star) / rec.alpha });
        records.push(rec);
    }
    Ok(FiberExpansion { t, fiber, records, coefficients })
}

/// `a_k(t) = (f_t, Psi*_k,t) / alpha_k(t)` for `|k| <= nmax`.
pub fn coefficients(p: &FourierPotential, f: &TestFunction, t: f64, cfg: &ExpansionConfig) -> Result<Vec<Coefficient>> {
    Ok(fiber_expansion(p, f, t, cfg)?.coefficients)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsStep {
    pub eps: f64,
    pub rel_error: f64,
    /// Quasimomentum nodes used at this exclusion radius.
    pub nodes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandNorm {
    pub n: i64,
    pub bloch: f64,
    pub direct: f64,
    pub discrepancy: f64,
    pub flipped: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientRow {
    pub t: f64,
    /// In the order of `ReconstructionReport::bands`.
    pub a: Vec<Cx>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionReport {
    pub nmax: usize,
    pub tgrid: usize,
    pub nx: usize,
    pub eps_sing: f64,
    pub interval: (f64, f64),
    pub bands: Vec<i64>,
    pub coefficients: Vec<CoefficientRow>,
    pub x: Vec<f64>,
    pub f: Vec<Cx>,
    pub bloch: Vec<Cx>,
    pub direct: Vec<Cx>,
    /// `||f||` on the line.
    pub f_norm: f64,
    /// Errors of the Bloch form on the interval.
    pub abs_error: f64,
    pub rel_error: f64,
    pub direct_rel_error: f64,
    /// `||bloch - direct|| / ||f||` on the interval.
    pub cross_discrepancy: f64,
    pub parseval_ratio: f64,
    pub band_norms: Vec<BandNorm>,
    /// Norm of the jointly summed contribution of the singular bands.
    pub singular_group_norm: Option<f64>,
    pub eps_sequence: Vec<EpsStep>,
    /// Exclusion points near which the integral did not settle as `eps -> 0`.
    pub nonconvergence: Vec<f64>,
    pub flipped_bands: Vec<i64>,
}

impl ReconstructionReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serialization")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    /// Rows `x,re_f,im_f,re_fhat,im_fhat` with the Bloch reconstruction.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,re_f,im_f,re_fhat,im_fhat\n");
        for ((x, f), g) in self.x.iter().zip(&self.f).zip(&self.bloch) {
            out.push_str(&format!("{x},{},{},{},{}\n", f.re, f.im, g.re, g.im));
        }
        out
    }

    pub fn bloch_values(&self) -> Vec<Complex64> {
        self.bloch.iter().map(|&z| z.into()).collect()
    }

    pub fn direct_values(&self) -> Vec<Complex64> {
        self.direct.iter().map(|&z| z.into()).collect()
    }
}

struct BandAtNode {
    a: [Complex64; 2],
    bloch: Vec<Complex64>,
    direct: Vec<Complex64>,
}

struct Node {
    tau: f64,
    bands: Vec<(i64, BandAtNode)>,
}

/// `M^m` for `m` in `lo..=hi`.
fn cell_powers(m: &Mat2, lo: i64, hi: i64) -> Vec<Mat2> {
    let inv = m.inv_unimodular();
    (lo..=hi)
        .map(|k| {
            let (base, e) = if k < 0 { (inv, -k) } else { (*m, k) };
            (0..e).fold(Mat2::IDENTITY, |acc, _| acc.mul(&base))
        })
        .collect()
}

fn solve_node(
    p: &FourierPotential,
    f: &Sampled,
    recon: (i64, i64),
    tau: f64,
    cfg: &ExpansionConfig,
) -> Result<Node> {
    let nx = cfg.nx;
    let ni = nx as i64;
    let tr = cfg.band_tracking();
    let set = eigenvalues_at(p, tau, &tr)?;
    if let Some(e) = set.issues.first() {
        return Err(e.clone());
    }
    let fib = [f.fiber(tau), f.fiber(-tau)];
    let grid = periodic_grid(nx);
    let (c0, c1) = f.cells();
    let m_lo = c0.min(recon.0.div_euclid(ni));
    let m_hi = c1.max(recon.1.div_euclid(ni));
    let cis: Vec<[Complex64; 2]> = (m_lo..=m_hi)
        .map(|m| [Complex64::from_polar(1.0, m as f64 * tau), Complex64::from_polar(1.0, -(m as f64) * tau)])
        .collect();
    let w = 1.0 / cfg.tgrid as f64;

    let mut bands = Vec::with_capacity(set.values.len());
    for v in &set.values {
        let mono = fundamental_at_one(p, v.lambda, tr.tol)?;
        if tr.is_multiple(&mono) {
            return Err(Error::MultipleEigenvalue { n: v.n, t: tau });
        }
        let trace = fundamental_on_grid(p, v.lambda, &grid, tr.tol)?;
        let (rp, rm) = pm_from_trace(p, v.n, tau, &mono, &trace, nx)?;
        let a = [inner(&fib[0], &rp.psi_star) / rp.alpha, inner(&fib[1], &rm.psi_star) / rm.alpha];

        let mat = Mat2::new(trace.theta[nx], trace.phi[nx], trace.dtheta[nx], trace.dphi[nx]);
        let pw = cell_powers(&mat, m_lo, m_hi);
        let ext = |j: i64| {
            let r = j.rem_euclid(ni) as usize;
            let pm = &pw[(j.div_euclid(ni) - m_lo) as usize];
            let (th, ph) = (trace.theta[r], trace.phi[r]);
            (th * pm.a + ph * pm.c, th * pm.b + ph * pm.d)
        };
        let (mut h, mut g) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
        for (j, fv) in f.indices() {
            let (th, ph) = ext(j);
            h += ph * fv;
            g += th * fv;
        }
        h /= nx as f64;
        g /= nx as f64;
        let wd = 2.0 * w / mono.df;
        let half = 0.5 * (mat.a - mat.d);

        let mut bloch = Vec::with_capacity((recon.1 - recon.0 + 1) as usize);
        let mut direct = Vec::with_capacity(bloch.capacity());
        for j in recon.0..=recon.1 {
            let r = j.rem_euclid(ni) as usize;
            let e = &cis[(j.div_euclid(ni) - m_lo) as usize];
            bloch.push((a[0] * rp.psi[r] * e[0] + a[1] * rm.psi[r] * e[1]) * w);
            let (th, ph) = ext(j);
            direct.push(wd * (mat.c * h * ph + half * (h * th + g * ph) - mat.b * g * th));
        }
        bands.push((v.n, BandAtNode { a, bloch, direct }));
    }
    Ok(Node { tau, bands })
}

fn add_into(acc: &mut [Complex64], v: &[Complex64]) {
    for (a, b) in acc.iter_mut().zip(v) {
        *a += b;
    }
}

/// Trapezoidal `L2` norm on the reconstruction grid.
fn l2_trap(v: &[Complex64], h: f64) -> f64 {
    let n = v.len();
    let mut s: f64 = v.iter().map(|z| z.norm_sqr()).sum();
    if n > 1 {
        s -= 0.5 * (v[0].norm_sqr() + v[n - 1].norm_sqr());
    }
    (s * h).sqrt()
}

fn diff(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Both reconstructions of `f` on `cfg.interval`, with the Bloch/direct cross-check.
pub fn reconstruct(p: &FourierPotential, f: &TestFunction, cfg: &ExpansionConfig) -> Result<ReconstructionReport> {
    cfg.validate()?;
    f.validate()?;
    let nx = cfg.nx;
    let h = 1.0 / nx as f64;
    let sampled = Sampled::new(f, nx);
    let recon = (
        (cfg.interval.0 * nx as f64).ceil() as i64,
        (cfg.interval.1 * nx as f64).floor() as i64,
    );
    if recon.1 < recon.0 {
        return Err(Error::InvalidConfig("interval contains no grid point".into()));
    }
    let xs: Vec<f64> = (recon.0..=recon.1).map(|j| j as f64 / nx as f64).collect();
    let fx: Vec<Complex64> = xs.iter().map(|&x| f.eval(x)).collect();
    let npts = xs.len();
    let zeros = || vec![Complex64::new(0.0, 0.0); npts];

    let mut eps_list = vec![1e-2, 1e-3, 1e-4, cfg.eps_sing];
    eps_list.sort_by(|a, b| b.total_cmp(a));
    eps_list.dedup();
    let levels = eps_list.len();
    let final_level = eps_list.iter().position(|&e| e == cfg.eps_sing).unwrap_or(levels - 1);
    let bucket_of = |d: f64| eps_list.iter().position(|&e| d > e).unwrap_or(levels);

    let points = cfg.exclusion_points();
    let mut shells = vec![vec![zeros(); levels]; points.len()];
    let mut shell_nodes = vec![vec![0usize; levels]; points.len()];
    let mut failed: Vec<usize> = Vec::new();
    let count = 2 * cfg.nmax + 1;
    let mut band_bloch = vec![zeros(); count];
    let mut band_direct = vec![zeros(); count];
    let mut labels: Vec<i64> = Vec::new();
    let mut rows: Vec<CoefficientRow> = Vec::new();

    let taus: Vec<(f64, usize, usize)> = midpoint_nodes(cfg.tgrid)
        .into_iter()
        .filter(|&t| t > 0.0)
        .filter_map(|t| {
            let (d, i) = cfg.nearest_exclusion(t);
            let (dm, im) = cfg.nearest_exclusion(-t);
            let (d, i) = if dm < d { (dm, im) } else { (d, i) };
            let b = bucket_of(d);
            (b < levels).then_some((t, i, b))
        })
        .collect();

    for chunk in taus.chunks(NODE_CHUNK) {
        let solved = par::map(chunk, |&(t, _, _)| solve_node(p, &sampled, recon, t, cfg));
        for (&(_, pi, b), res) in chunk.iter().zip(solved) {
            let node = match res {
                Ok(node) => node,
                Err(e) if b <= final_level => return Err(e),
                Err(_) => {
                    failed.push(pi);
                    continue;
                }
            };
            let mut total = zeros();
            for (_, band) in &node.bands {
                add_into(&mut total, &band.bloch);
            }
            // a node at t stands for the pair (t, -t); both lie in the same shell
            let partner = points.iter().position(|q| *q == -points[pi]).unwrap_or(pi);
            add_into(&mut shells[pi.min(partner)][b], &total);
            shell_nodes[pi.min(partner)][b] += 2;
            if b > final_level {
                continue;
            }
            if labels.is_empty() {
                labels = node.bands.iter().map(|(n, _)| *n).collect();
            }
            for (k, (_, band)) in node.bands.iter().enumerate() {
                add_into(&mut band_bloch[k], &band.bloch);
                add_into(&mut band_direct[k], &band.direct);
            }
            for (t, s) in [(-node.tau, 1), (node.tau, 0)] {
                rows.push(CoefficientRow { t, a: node.bands.iter().map(|(_, band)| band.a[s].into()).collect() });
            }
        }
    }
    rows.sort_by(|a, b| a.t.total_cmp(&b.t));

    let fnorm_interval = l2_trap(&fx, h);
    let f_norm = f.l2_norm();
    let scale = if fnorm_interval > 0.0 { fnorm_interval } else { 1.0 };

    let mut eps_sequence = Vec::with_capacity(levels);
    let mut cumulative = zeros();
    let mut used = 0;
    let mut bloch = zeros();
    for (i, &eps) in eps_list.iter().enumerate() {
        for (sh, cnt) in shells.iter().zip(&shell_nodes) {
            add_into(&mut cumulative, &sh[i]);
            used += cnt[i];
        }
        eps_sequence.push(EpsStep { eps, rel_error: l2_trap(&diff(&cumulative, &fx), h) / scale, nodes: used });
        if i == final_level {
            bloch = cumulative.clone();
        }
    }

    let mut nonconvergence = Vec::new();
    for (i, sh) in shells.iter().enumerate() {
        let s: Vec<f64> = sh.iter().map(|v| l2_trap(v, h)).collect();
        let bad = levels >= 3 && s[levels - 2] > 0.0 && s[levels - 1] > 10.0 * s[levels - 2];
        if bad || failed.contains(&i) {
            nonconvergence.push(points[i].abs());
        }
    }
    nonconvergence.sort_by(f64::total_cmp);
    nonconvergence.dedup();

    let cross_tol = cfg.cross_tol_rel * f_norm;
    let mut direct = zeros();
    let mut band_norms = Vec::with_capacity(count);
    let mut flipped_bands = Vec::new();
    for (k, &n) in labels.iter().enumerate() {
        let (bb, bd) = (&band_bloch[k], &band_direct[k]);
        let disc = l2_trap(&diff(bb, bd), h);
        let mut flipped = false;
        if disc > cross_tol {
            let sum: Vec<Complex64> = bb.iter().zip(bd).map(|(x, y)| x + y).collect();
            if l2_trap(&sum, h) <= cross_tol {
                flipped = true;
                flipped_bands.push(n);
            } else {
                return Err(Error::BranchInconsistency { n, discrepancy: disc });
            }
        }
        let sign = if flipped { -1.0 } else { 1.0 };
        for (d, v) in direct.iter_mut().zip(bd) {
            *d += sign * v;
        }
        band_norms.push(BandNorm { n, bloch: l2_trap(bb, h), direct: l2_trap(bd, h), discrepancy: disc, flipped });
    }

    let singular_group_norm = (!cfg.singular_bands.is_empty()).then(|| {
        let mut group = zeros();
        for &n in &cfg.singular_bands {
            if let Some(k) = labels.iter().position(|&l| l == n).or_else(|| {
                let r = label_to_rank(n);
                (r < labels.len()).then_some(r)
            }) {
                add_into(&mut group, &band_bloch[k]);
            }
        }
        l2_trap(&group, h)
    });

    let abs_error = l2_trap(&diff(&bloch, &fx), h);
    Ok(ReconstructionReport {
        nmax: cfg.nmax,
        tgrid: cfg.tgrid,
        nx,
        eps_sing: cfg.eps_sing,
        interval: cfg.interval,
        bands: labels,
        coefficients: rows,
        x: xs,
        f: fx.iter().map(|&z| z.into()).collect(),
        abs_error,
        rel_error: abs_error / scale,
        direct_rel_error: l2_trap(&diff(&direct, &fx), h) / scale,
        cross_discrepancy: l2_trap(&diff(&bloch, &direct), h) / f_norm,
        bloch: bloch.iter().map(|&z| z.into()).collect(),
        direct: direct.iter().map(|&z| z.into()).collect(),
        f_norm,
        parseval_ratio: parseval_check(f)?,
        band_norms,
        singular_group_norm,
        eps_sequence,
        nonconvergence,
        flipped_bands,
    })
}

/// The Bloch-form reconstruction `(2 pi)^-1 int sum_k a_k(t) Psi_k,t(x) dt` on `cfg.interval`.
pub fn reconstruct_bloch(p: &FourierPotential, f: &TestFunction, cfg: &ExpansionConfig) -> Result<Vec<Complex64>> {
    Ok(reconstruct(p, f, cfg)?.bloch_values())
}

/// The reconstruction from `theta`, `phi`, `h`, `g` along the band curves.
pub fn reconstruct_direct(p: &FourierPotential, f: &TestFunction, cfg: &ExpansionConfig) -> Result<Vec<Complex64>> {
    Ok(reconstruct(p, f, cfg)?.direct_values())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fiber_of_unit_cell_function_is_itself() {
        let f = TestFunction::Bump { center: 0.5, radius: 0.4 };
        let ft = gelfand_transform(&f, 1.3, 64);
        for (r, v) in ft[..64].iter().enumerate() {
            assert_eq!(*v, f.eval(r as f64 / 64.0));
        }
    }

    #[test]
    fn two_cell_fiber() {
        let g = TestFunction::Bump { center: 0.5, radius: 0.4 };
        let shifted = TestFunction::Bump { center: 1.5, radius: 0.4 };
        let one = Cx { re: 1.0, im: 0.0 };
        let f = TestFunction::Combination { terms: vec![(one, g.clone()), (one, shifted)] };
        let t = 0.7;
        let ft = gelfand_transform(&f, t, 32);
        for (r, v) in ft[..32].iter().enumerate() {
            let want = g.eval(r as f64 / 32.0) * (1.0 + Complex64::from_polar(1.0, -t));
            assert!((v - want).norm() < 1e-15);
        }
    }

    #[test]
    fn quasiperiodic_by_construction() {
        let f = TestFunction::Gaussian { center: 0.3, width: 0.7, half_window: 3.0 };
        let t = -2.1;
        let ft = gelfand_transform(&f, t, 40);
        assert!((ft[40] - Complex64::from_polar(1.0, t) * ft[0]).norm() < 1e-15);
        let x = 0.37;
        let lhs = gelfand_point(&f, t, x + 1.0);
        assert!((lhs - Complex64::from_polar(1.0, t) * gelfand_point(&f, t, x)).norm() < 1e-14);
    }

    #[test]
    fn midpoint_nodes_avoid_zero_and_pi() {
        let ts = midpoint_nodes(64);
        assert!(ts.iter().all(|t| t.abs() > 1e-3 && PI - t.abs() > 1e-3));
        assert_eq!(ts.iter().filter(|t| **t > 0.0).count(), 32);
    }

    #[test]
    fn config_rejects_small_grid() {
        let cfg = ExpansionConfig { tgrid: 32, ..Default::default() };
        assert!(cfg.validate().is_err());
        let cfg = ExpansionConfig { eps_sing: 0.0, ..Default::default() };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn test_function_json_round_trip() {
        let f = TestFunction::Trig { a: -1.0, b: 2.0, terms: vec![(3.0, Cx { re: 1.0, im: -0.5 })] };
        assert_eq!(TestFunction::from_json(&f.to_json()).unwrap(), f);
    }
}
