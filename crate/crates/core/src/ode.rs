//! Fundamental solutions of `-y'' + q y = lambda y` on `[0, 1]`.
//!
//! The first-order system `Y' = A(x) Y`, `A = [[0, 1], [q - lambda, 0]]`, is advanced
//! with the sixth-order Magnus integrator on Gauss–Legendre nodes. Every step is the
//! exact exponential of a trace-free 2x2 matrix, so `det Y = 1` (the Wronskian) is
//! preserved to roundoff. The lambda-derivative `Z = dY/dlambda` is propagated with
//! the exact derivative of each step map, which makes it the derivative of the
//! discrete monodromy on a given mesh.
//!
//! Step sizes are chosen by step doubling: a step is accepted when one full step and
//! two half steps agree to `tol` relative to `max(1, |Y|)`, and the two half steps are
//! kept.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potential::{FourierPotential, PotentialEval};

pub const DEFAULT_TOL: f64 = 1e-10;

const MAX_STEP: f64 = 0.25;
const MIN_STEP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub(crate) struct Mat2 {
    pub a: Complex64,
    pub b: Complex64,
    pub c: Complex64,
    pub d: Complex64,
}

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2 {
        a: Complex64::new(1.0, 0.0),
        b: Complex64::new(0.0, 0.0),
        c: Complex64::new(0.0, 0.0),
        d: Complex64::new(1.0, 0.0),
    };

    pub fn new(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Self {
        Self { a, b, c, d }
    }

    pub fn mul(&self, o: &Mat2) -> Mat2 {
        Mat2 {
            a: self.a * o.a + self.b * o.c,
            b: self.a * o.b + self.b * o.d,
            c: self.c * o.a + self.d * o.c,
            d: self.c * o.b + self.d * o.d,
        }
    }

    pub fn add(&self, o: &Mat2) -> Mat2 {
        Mat2::new(self.a + o.a, self.b + o.b, self.c + o.c, self.d + o.d)
    }

    pub fn sub(&self, o: &Mat2) -> Mat2 {
        Mat2::new(self.a - o.a, self.b - o.b, self.c - o.c, self.d - o.d)
    }

    pub fn scale(&self, s: f64) -> Mat2 {
        Mat2::new(self.a * s, self.b * s, self.c * s, self.d * s)
    }

    pub fn scale_c(&self, s: Complex64) -> Mat2 {
        Mat2::new(self.a * s, self.b * s, self.c * s, self.d * s)
    }

    pub fn comm(&self, o: &Mat2) -> Mat2 {
        self.mul(o).sub(&o.mul(self))
    }

    pub fn trace(&self) -> Complex64 {
        self.a + self.d
    }

    /// Inverse of a unimodular matrix.
    pub fn inv_unimodular(&self) -> Mat2 {
        Mat2::new(self.d, -self.b, -self.c, self.a)
    }

    pub fn max_abs(&self) -> f64 {
        self.a
            .norm()
            .max(self.b.norm())
            .max(self.c.norm())
            .max(self.d.norm())
    }

    pub fn is_finite(&self) -> bool {
        [self.a, self.b, self.c, self.d]
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

/// `cosh(sqrt(w))` and `sinh(sqrt(w))/sqrt(w)` plus the derivative of the latter,
/// all entire in `w`.
fn cosh_sinhc(w: Complex64) -> (Complex64, Complex64, Complex64) {
    if w.norm() < 1.0 {
        // C = sum w^k/(2k)!, S = sum w^k/(2k+1)!, S' = sum (k+1) w^k/(2k+3)!
        let mut c = Complex64::new(0.0, 0.0);
        let mut s = Complex64::new(0.0, 0.0);
        let mut ds = Complex64::new(0.0, 0.0);
        let mut pw = Complex64::new(1.0, 0.0);
        let mut fact_even = 1.0; // (2k)!
        for k in 0..20 {
            let kf = k as f64;
            let fact_odd = fact_even * (2.0 * kf + 1.0); // (2k+1)!
            let fact_next = fact_odd * (2.0 * kf + 2.0) * (2.0 * kf + 3.0); // (2k+3)!
            c += pw / fact_even;
            s += pw / fact_odd;
            ds += pw * (kf + 1.0) / fact_next;
            pw *= w;
            fact_even = fact_odd * (2.0 * kf + 2.0);
        }
        (c, s, ds)
    } else {
        let r = w.sqrt();
        let c = r.cosh();
        let s = r.sinh() / r;
        let ds = (c - s) / (w * 2.0);
        (c, s, ds)
    }
}

/// `exp(omega)` for trace-free `omega`, and its Frechet derivative along trace-free `d`.
fn expm_tracefree(omega: &Mat2, d: Option<&Mat2>) -> (Mat2, Mat2) {
    let w = omega.a * omega.a + omega.b * omega.c;
    let (c, s, ds) = cosh_sinhc(w);
    let e = Mat2::IDENTITY.scale_c(c).add(&omega.scale_c(s));
    let de = match d {
        Some(d) => {
            let dw = omega.mul(d).trace();
            Mat2::IDENTITY
                .scale_c(s * 0.5 * dw)
                .add(&omega.scale_c(ds * dw))
                .add(&d.scale_c(s))
        }
        None => Mat2::default(),
    };
    (e, de)
}

const SQRT15: f64 = 3.872_983_346_207_417;

struct System<'a> {
    q: &'a PotentialEval,
    lambda: Complex64,
}

impl System<'_> {
    fn a(&self, x: f64) -> Mat2 {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        Mat2::new(zero, one, self.q.at(x) - self.lambda, zero)
    }

    /// One sixth-order Magnus step from `x` to `x + h`: the step map and its
    /// derivative with respect to lambda.
    fn magnus(&self, x: f64, h: f64, with_derivative: bool) -> (Mat2, Mat2) {
        let a1 = self.a(x + (0.5 - SQRT15 / 10.0) * h);
        let a2 = self.a(x + 0.5 * h);
        let a3 = self.a(x + (0.5 + SQRT15 / 10.0) * h);

        let al1 = a2.scale(h);
        let al2 = a3.sub(&a1).scale(SQRT15 * h / 3.0);
        let al3 = a3.sub(&a2.scale(2.0)).add(&a1).scale(10.0 * h / 3.0);

        let c1 = al1.comm(&al2);
        let c2 = al1.comm(&al3.scale(2.0).add(&c1)).scale(-1.0 / 60.0);
        let x_ = al1.scale(-20.0).sub(&al3).add(&c1);
        let y_ = al2.add(&c2);
        let omega = al1.add(&al3.scale(1.0 / 12.0)).add(&x_.comm(&y_).scale(1.0 / 240.0));

        if !with_derivative {
            return expm_tracefree(&omega, None);
        }
        // d/dlambda: only alpha_1 depends on lambda, through h * [[0,0],[-1,0]].
        let n = Mat2::new(
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(-h, 0.0),
            Complex64::new(0.0, 0.0),
        );
        let dc1 = n.comm(&al2);
        let dc2 = n
            .comm(&al3.scale(2.0).add(&c1))
            .add(&al1.comm(&dc1))
            .scale(-1.0 / 60.0);
        let dx = n.scale(-20.0).add(&dc1);
        let dy = dc2;
        let domega = n.add(&dx.comm(&y_).add(&x_.comm(&dy)).scale(1.0 / 240.0));
        expm_tracefree(&omega, Some(&domega))
    }

    /// Two half steps composed, with derivative.
    fn double_half(&self, x: f64, h: f64, with_derivative: bool) -> (Mat2, Mat2) {
        let (e1, d1) = self.magnus(x, 0.5 * h, with_derivative);
        let (e2, d2) = self.magnus(x + 0.5 * h, 0.5 * h, with_derivative);
        let e = e2.mul(&e1);
        let d = if with_derivative {
            d2.mul(&e1).add(&e2.mul(&d1))
        } else {
            Mat2::default()
        };
        (e, d)
    }
}

/// Monodromy data `theta(1), phi(1), theta'(1), phi'(1)`, the discriminant and its
/// lambda-derivative, at one spectral parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonodromyData {
    pub lambda: Complex64,
    pub theta1: Complex64,
    pub phi1: Complex64,
    pub dtheta1: Complex64,
    pub dphi1: Complex64,
    /// `F = phi'(1) + theta(1)`.
    pub f: Complex64,
    /// `dF/dlambda`.
    pub df: Complex64,
    /// lambda-derivatives of `theta(1), phi(1), theta'(1), phi'(1)`.
    pub d_entries: [Complex64; 4],
}

impl MonodromyData {
    fn from_mats(lambda: Complex64, y: &Mat2, z: &Mat2) -> Self {
        Self {
            lambda,
            theta1: y.a,
            phi1: y.b,
            dtheta1: y.c,
            dphi1: y.d,
            f: y.a + y.d,
            df: z.a + z.d,
            d_entries: [z.a, z.b, z.c, z.d],
        }
    }

    /// `theta(1) phi'(1) - theta'(1) phi(1)`, equal to 1 for exact solutions.
    pub fn wronskian(&self) -> Complex64 {
        self.theta1 * self.dphi1 - self.dtheta1 * self.phi1
    }
}

/// Sampled fundamental solutions along a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionTrace {
    pub lambda: Complex64,
    pub grid: Vec<f64>,
    pub theta: Vec<Complex64>,
    pub phi: Vec<Complex64>,
    pub dtheta: Vec<Complex64>,
    pub dphi: Vec<Complex64>,
}

impl SolutionTrace {
    pub fn wronskian_defect(&self) -> f64 {
        (0..self.grid.len())
            .map(|i| (self.theta[i] * self.dphi[i] - self.dtheta[i] * self.phi[i] - 1.0).norm())
            .fold(0.0, f64::max)
    }
}

/// Accepted step boundaries of one adaptive integration over `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh(Vec<f64>);

impl Mesh {
    pub fn points(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len().saturating_sub(1)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn check_lambda(lambda: Complex64) -> Result<()> {
    if lambda.re.is_finite() && lambda.im.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFiniteInput("lambda"))
    }
}

struct Run {
    y: Mat2,
    z: Mat2,
    mesh: Vec<f64>,
    samples: Vec<Mat2>,
}

/// Adaptive integration from 0 through the sorted `stops` (all in `(0, 1]`, last = 1).
fn integrate_adaptive(
    p: &FourierPotential,
    lambda: Complex64,
    tol: f64,
    stops: &[f64],
    with_derivative: bool,
) -> Result<Run> {
    check_lambda(lambda)?;
    if !(tol > 0.0) {
        return Err(Error::InvalidConfig(format!("tolerance must be positive, got {tol}")));
    }
    let q = p.evaluator();
    let sys = System { q: &q, lambda };
    let mut y = Mat2::IDENTITY;
    let mut z = Mat2::default();
    let mut x = 0.0;
    let mut h = if p.is_zero() { MAX_STEP } else { 1.0 / 16.0 };
    let mut mesh = vec![0.0];
    let mut samples = Vec::with_capacity(stops.len());

    for &stop in stops {
        while x < stop {
            let remaining = stop - x;
            let last = h >= remaining * (1.0 - 1e-12);
            let step = if last { remaining } else { h };
            let (ef, _) = sys.magnus(x, step, false);
            let (eh, dh) = sys.double_half(x, step, with_derivative);
            let yf = ef.mul(&y);
            let yh = eh.mul(&y);
            let scale = tol * y.max_abs().max(1.0);
            let err = yh.sub(&yf).max_abs() / scale;
            if !yh.is_finite() {
                return Err(Error::IntegratorFailure {
                    x,
                    lambda_re: lambda.re,
                    lambda_im: lambda.im,
                });
            }
            if err <= 1.0 {
                if with_derivative {
                    z = eh.mul(&z).add(&dh.mul(&y));
                }
                y = yh;
                x = if last { stop } else { x + step };
                mesh.push(x);
                let grow = if err == 0.0 { 4.0 } else { (0.9 * err.powf(-1.0 / 7.0)).min(4.0) };
                // a forced short landing step says nothing about the natural step size
                if !last || step >= h * 0.5 {
                    h = (step * grow).min(MAX_STEP);
                }
            } else {
                h = step * (0.9 * err.powf(-1.0 / 7.0)).max(0.2);
                if h < MIN_STEP {
                    return Err(Error::IntegratorFailure {
                        x,
                        lambda_re: lambda.re,
                        lambda_im: lambda.im,
                    });
                }
            }
        }
        samples.push(y);
    }
    Ok(Run {
        y,
        z,
        mesh,
        samples,
    })
}

/// Monodromy data at `lambda` with adaptive error `tol`.
pub fn fundamental_at_one(
    p: &FourierPotential,
    lambda: Complex64,
    tol: f64,
) -> Result<MonodromyData> {
    let run = integrate_adaptive(p, lambda, tol, &[1.0], true)?;
    Ok(MonodromyData::from_mats(lambda, &run.y, &run.z))
}

/// As [`fundamental_at_one`], also returning the accepted mesh.
pub fn fundamental_with_mesh(
    p: &FourierPotential,
    lambda: Complex64,
    tol: f64,
) -> Result<(MonodromyData, Mesh)> {
    let run = integrate_adaptive(p, lambda, tol, &[1.0], true)?;
    Ok((MonodromyData::from_mats(lambda, &run.y, &run.z), Mesh(run.mesh)))
}

/// Monodromy data computed on a fixed mesh. For a fixed mesh this is an analytic
/// function of lambda whose derivative is exactly `df`.
pub fn monodromy_on_mesh(
    p: &FourierPotential,
    lambda: Complex64,
    mesh: &Mesh,
) -> Result<MonodromyData> {
    check_lambda(lambda)?;
    let q = p.evaluator();
    let sys = System { q: &q, lambda };
    let mut y = Mat2::IDENTITY;
    let mut z = Mat2::default();
    for w in mesh.0.windows(2) {
        let (e, d) = sys.double_half(w[0], w[1] - w[0], true);
        z = e.mul(&z).add(&d.mul(&y));
        y = e.mul(&y);
    }
    Ok(MonodromyData::from_mats(lambda, &y, &z))
}

/// Fundamental solutions sampled on a strictly increasing grid in `[0, 1]`.
pub fn fundamental_on_grid(
    p: &FourierPotential,
    lambda: Complex64,
    grid: &[f64],
    tol: f64,
) -> Result<SolutionTrace> {
    if grid.is_empty() {
        return Err(Error::InvalidConfig("empty grid".into()));
    }
    if grid.iter().any(|x| !(0.0..=1.0).contains(x)) || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidConfig(
            "grid must be strictly increasing within [0, 1]".into(),
        ));
    }
    let stops: Vec<f64> = grid.iter().copied().filter(|&x| x > 0.0).collect();
    let run = integrate_adaptive(p, lambda, tol, &stops, false)?;
    let mut mats = Vec::with_capacity(grid.len());
    if grid[0] == 0.0 {
        mats.push(Mat2::IDENTITY);
    }
    mats.extend(run.samples);
    Ok(SolutionTrace {
        lambda,
        grid: grid.to_vec(),
        theta: mats.iter().map(|m| m.a).collect(),
        phi: mats.iter().map(|m| m.b).collect(),
        dtheta: mats.iter().map(|m| m.c).collect(),
        dphi: mats.iter().map(|m| m.d).collect(),
    })
}

/// Hill discriminant `F(lambda)` at the default tolerance.
pub fn discriminant(p: &FourierPotential, lambda: Complex64) -> Result<Complex64> {
    Ok(fundamental_at_one(p, lambda, DEFAULT_TOL)?.f)
}

/// `dF/dlambda` from the variational system at the default tolerance.
pub fn discriminant_derivative(p: &FourierPotential, lambda: Complex64) -> Result<Complex64> {
    Ok(fundamental_at_one(p, lambda, DEFAULT_TOL)?.df)
}

/// `d^2F/dlambda^2` by a Cauchy integral of `F'` over a small circle, on the mesh
/// chosen at `lambda`.
pub fn discriminant_second_derivative(
    p: &FourierPotential,
    lambda: Complex64,
    tol: f64,
) -> Result<Complex64> {
    let (_, mesh) = fundamental_with_mesh(p, lambda, tol)?;
    let radius = 1e-2 * (1.0 + lambda.norm()).sqrt();
    const POINTS: usize = 16;
    let mut acc = Complex64::new(0.0, 0.0);
    for j in 0..POINTS {
        let u = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * j as f64 / POINTS as f64);
        let m = monodromy_on_mesh(p, lambda + u * radius, &mesh)?;
        acc += m.df * u.conj();
    }
    Ok(acc / (POINTS as f64 * radius))
}

/// Principal-branch square root continued to the negative axis; `2 cos(sqrt(lambda))`
/// does not depend on the branch.
pub fn free_discriminant(lambda: Complex64) -> Complex64 {
    lambda.sqrt().cos() * 2.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn free_closed_forms() {
        let z = FourierPotential::zero();
        let m = fundamental_at_one(&z, c(PI * PI, 0.0), DEFAULT_TOL).unwrap();
        assert!((m.f - c(-2.0, 0.0)).norm() < 1e-12);
        assert!(m.phi1.norm() < 1e-12);
        assert!(m.df.norm() < 1e-12);

        let f = discriminant(&z, c(-1.0, 0.0)).unwrap();
        assert!((f.re - 2.0 * 1f64.cosh()).abs() < 1e-12 && f.im.abs() < 1e-14);
        assert!((f.re - 3.086161).abs() < 1e-6);

        assert!((discriminant(&z, c(4.0 * PI * PI, 0.0)).unwrap() - 2.0).norm() < 1e-12);
        assert!(discriminant(&z, c(PI * PI / 4.0, 0.0)).unwrap().norm() < 1e-12);
        let d = discriminant_derivative(&z, c(PI * PI / 4.0, 0.0)).unwrap();
        assert!((d - c(-2.0 / PI, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn grid_samples_free() {
        let z = FourierPotential::zero();
        let tr = fundamental_on_grid(&z, c(4.0 * PI * PI, 0.0), &[0.0, 0.5, 1.0], DEFAULT_TOL)
            .unwrap();
        let want = [1.0, -1.0, 1.0];
        for (got, w) in tr.theta.iter().zip(want) {
            assert!((got - c(w, 0.0)).norm() < 1e-12);
        }
        let grid: Vec<f64> = (0..=10).map(|j| j as f64 / 10.0).collect();
        let tr = fundamental_on_grid(&z, c(0.0, 0.0), &grid, DEFAULT_TOL).unwrap();
        for (x, phi) in grid.iter().zip(&tr.phi) {
            assert!((phi - c(*x, 0.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn rejects_bad_input() {
        let z = FourierPotential::zero();
        assert_eq!(
            fundamental_at_one(&z, c(f64::NAN, 0.0), 1e-10).unwrap_err(),
            Error::NonFiniteInput("lambda")
        );
        assert!(fundamental_on_grid(&z, c(1.0, 0.0), &[0.5, 0.2], 1e-10).is_err());
        assert!(fundamental_at_one(&z, c(1.0, 0.0), 0.0).is_err());
    }

    #[test]
    fn exp_series_and_closed_form_agree_at_switch() {
        for w in [c(0.999, 0.0), c(-0.5, 0.86), c(0.0, -0.999)] {
            let (c0, s0, d0) = cosh_sinhc(w);
            let r = w.sqrt();
            assert!((c0 - r.cosh()).norm() < 1e-14);
            assert!((s0 - r.sinh() / r).norm() < 1e-14);
            assert!((d0 - (r.cosh() - r.sinh() / r) / (w * 2.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn sixth_order_convergence() {
        // fixed meshes of n and 2n uniform steps: error ratio close to 2^6
        let p = FourierPotential::mathieu(c(0.5, 0.2));
        let lam = c(3.0, 0.5);
        let run = |n: usize| {
            let mesh = Mesh((0..=n).map(|j| j as f64 / n as f64).collect());
            monodromy_on_mesh(&p, lam, &mesh).unwrap().f
        };
        let fine = run(512);
        let e1 = (run(4) - fine).norm();
        let e2 = (run(8) - fine).norm();
        let ratio = e1 / e2;
        assert!(ratio > 40.0 && ratio < 100.0, "ratio {ratio}");
    }

    #[test]
    fn second_derivative_free() {
        // F = 2 cos s, s = sqrt(lambda): F'' = (sin s - s cos s) / (2 s^3)
        let z = FourierPotential::zero();
        let lam = c(7.3, 0.0);
        let s = lam.sqrt();
        let want = (s.sin() - s * s.cos()) / (s * s * s * 2.0);
        let got = discriminant_second_derivative(&z, lam, DEFAULT_TOL).unwrap();
        assert!((got - want).norm() < 1e-9, "{got} vs {want}");
    }
}
