//! Fourier–Galerkin truncation of `L_t` in the basis `exp(i(2 pi j + t) x)`,
//! `|j| <= K`. Used as an algorithmically independent check of the shooting
//! method and as the seed source for low bands.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::potential::FourierPotential;

/// The dense matrix `H_jk = (2 pi j + t)^2 delta_jk + q_{j-k}`.
#[derive(Debug, Clone)]
pub struct GalerkinSystem {
    pub t: f64,
    pub half_width: usize,
    pub matrix: DMatrix<Complex64>,
}

impl GalerkinSystem {
    pub fn new(p: &FourierPotential, t: f64, half_width: usize) -> Self {
        let k = half_width as i64;
        let dim = 2 * half_width + 1;
        let matrix = DMatrix::from_fn(dim, dim, |r, c| {
            let j = r as i64 - k;
            let l = c as i64 - k;
            let mut v = p.coeff(j - l);
            if r == c {
                let w = 2.0 * PI * j as f64 + t;
                v += w * w;
            }
            v
        });
        Self {
            t,
            half_width,
            matrix,
        }
    }

    pub fn dim(&self) -> usize {
        2 * self.half_width + 1
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GalerkinPair {
    pub lambda: Complex64,
    /// Unit coefficient vector; entry `j + K` multiplies `exp(i(2 pi j + t) x)`.
    pub vector: Vec<Complex64>,
}

impl GalerkinPair {
    /// `sum_j v_j exp(i(2 pi j + t) x)`.
    pub fn synthesize(&self, t: f64, x: f64) -> Complex64 {
        let k = (self.vector.len() / 2) as i64;
        self.vector
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let j = i as i64 - k;
                v * Complex64::from_polar(1.0, (2.0 * PI * j as f64 + t) * x)
            })
            .sum()
    }
}

fn sort_key(a: &Complex64, b: &Complex64) -> std::cmp::Ordering {
    a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im))
}

/// Eigenvalues only, sorted by real part.
pub fn galerkin_eigenvalues(
    p: &FourierPotential,
    t: f64,
    half_width: usize,
) -> Result<Vec<Complex64>> {
    check(p, t, half_width)?;
    let sys = GalerkinSystem::new(p, t, half_width);
    let schur = nalgebra::linalg::Schur::try_new(sys.matrix, 1e-15, 0)
        .ok_or_else(|| Error::EigensolverFailure("Schur iteration did not converge".into()))?;
    let (_, tri) = schur.unpack();
    let mut vals: Vec<Complex64> = tri.diagonal().iter().copied().collect();
    vals.sort_by(sort_key);
    Ok(vals)
}

fn check(p: &FourierPotential, t: f64, half_width: usize) -> Result<()> {
    if half_width < p.effective_order() {
        return Err(Error::InvalidConfig(format!(
            "Galerkin half-width {half_width} below potential order {}",
            p.effective_order()
        )));
    }
    if !t.is_finite() {
        return Err(Error::NonFiniteInput("quasimomentum"));
    }
    Ok(())
}

/// All `2K + 1` eigenpairs, sorted by real part. Vectors have unit 2-norm with the
/// largest-modulus entry real positive.
pub fn galerkin_eigen(
    p: &FourierPotential,
    t: f64,
    half_width: usize,
) -> Result<Vec<GalerkinPair>> {
    check(p, t, half_width)?;
    let sys = GalerkinSystem::new(p, t, half_width);
    let dim = sys.dim();
    let scale = sys.matrix.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let schur = nalgebra::linalg::Schur::try_new(sys.matrix, 1e-15, 0)
        .ok_or_else(|| Error::EigensolverFailure("Schur iteration did not converge".into()))?;
    let (q, tri) = schur.unpack();

    let mut pairs = Vec::with_capacity(dim);
    for i in 0..dim {
        let lam = tri[(i, i)];
        // back substitution on (T - lam I) y = 0 with y_i = 1
        let mut y = DVector::<Complex64>::zeros(dim);
        y[i] = Complex64::new(1.0, 0.0);
        for j in (0..i).rev() {
            let mut s = Complex64::new(0.0, 0.0);
            for k in j + 1..=i {
                s += tri[(j, k)] * y[k];
            }
            let mut den = tri[(j, j)] - lam;
            if den.norm() < 1e-14 * scale {
                den = Complex64::new(1e-14 * scale, 0.0);
            }
            y[j] = -s / den;
        }
        let v = &q * y;
        pairs.push(GalerkinPair {
            lambda: lam,
            vector: normalize_phase(v.iter().copied().collect()),
        });
    }
    pairs.sort_by(|a, b| sort_key(&a.lambda, &b.lambda));
    Ok(pairs)
}

fn normalize_phase(mut v: Vec<Complex64>) -> Vec<Complex64> {
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let pivot = v
        .iter()
        .copied()
        .max_by(|a, b| a.norm().total_cmp(&b.norm()))
        .unwrap_or_default();
    if norm > 0.0 && pivot.norm() > 0.0 {
        let rot = pivot.conj() / (pivot.norm() * norm);
        for z in &mut v {
            *z *= rot;
        }
    }
    v
}
