//! Complex 1-periodic potentials stored as finite Fourier series
//! `q(x) = sum_n q_n exp(i 2 pi n x)` with zero mean.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// User-declared smoothness descriptor `(p, s)` for the Fourier-decay condition.
/// Not verified; carried through to reports.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Smoothness {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<u32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FourierPotential {
    coeffs: BTreeMap<i64, Complex64>,
    order: usize,
    meta: Option<Smoothness>,
}

impl FourierPotential {
    pub fn zero() -> Self {
        Self {
            coeffs: BTreeMap::new(),
            order: 0,
            meta: None,
        }
    }

    /// Builds a potential from explicit coefficients. A zero entry at index 0 is
    /// accepted and dropped; a nonzero one is rejected.
    pub fn from_fourier<I>(coeffs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (i64, Complex64)>,
    {
        let mut map = BTreeMap::new();
        for (n, c) in coeffs {
            if !c.re.is_finite() || !c.im.is_finite() {
                return Err(Error::NonFiniteInput("Fourier coefficient"));
            }
            if n == 0 {
                if c != Complex64::new(0.0, 0.0) {
                    return Err(Error::NonzeroMean { re: c.re, im: c.im });
                }
                continue;
            }
            map.insert(n, c);
        }
        let order = map.keys().map(|n| n.unsigned_abs() as usize).max().unwrap_or(0);
        Ok(Self {
            coeffs: map,
            order,
            meta: None,
        })
    }

    /// Discrete Fourier transform of samples on the uniform grid `j/m`, `j = 0..m`.
    /// The mean is discarded and the truncation order is `floor(m/2)`; for even `m`
    /// the Nyquist coefficient is split evenly between `+m/2` and `-m/2`.
    pub fn from_samples(samples: &[Complex64]) -> Result<Self> {
        let m = samples.len();
        if m < 4 {
            return Err(Error::TooFewSamples(m));
        }
        if samples.iter().any(|s| !s.re.is_finite() || !s.im.is_finite()) {
            return Err(Error::NonFiniteInput("potential sample"));
        }
        let mut buf = samples.to_vec();
        FftPlanner::new().plan_fft_forward(m).process(&mut buf);
        let scale = 1.0 / m as f64;
        let peak = samples.iter().map(|s| s.norm()).fold(0.0, f64::max);
        let floor = 1e-13 * peak.max(f64::MIN_POSITIVE);

        let half = m / 2;
        let mut map = BTreeMap::new();
        for n in 1..=half as i64 {
            let pos = buf[n as usize] * scale;
            let neg = buf[m - n as usize] * scale;
            let (pos, neg) = if m % 2 == 0 && n as usize == half {
                // buf[half] is the single Nyquist bin
                (pos * 0.5, pos * 0.5)
            } else {
                (pos, neg)
            };
            if pos.norm() > floor {
                map.insert(n, pos);
            }
            if neg.norm() > floor {
                map.insert(-n, neg);
            }
        }
        Ok(Self {
            coeffs: map,
            order: half,
            meta: None,
        })
    }

    /// `q(x) = 2a cos(2 pi x)`, i.e. `q_1 = q_-1 = a`.
    pub fn mathieu(a: Complex64) -> Self {
        Self::two_term(a, a)
    }

    /// `q(x) = a exp(-i 2 pi x) + b exp(i 2 pi x)`.
    pub fn two_term(a: Complex64, b: Complex64) -> Self {
        Self::from_fourier([(-1, a), (1, b)]).expect("two-term potential has zero mean")
    }

    pub fn with_meta(mut self, meta: Smoothness) -> Self {
        self.meta = Some(meta);
        self
    }

    pub fn meta(&self) -> Option<Smoothness> {
        self.meta
    }

    /// Declared truncation order `K`.
    pub fn order(&self) -> usize {
        self.order
    }

    /// Largest `|n|` with a nonzero coefficient.
    pub fn effective_order(&self) -> usize {
        self.coeffs
            .iter()
            .filter(|(_, c)| c.norm() > 0.0)
            .map(|(n, _)| n.unsigned_abs() as usize)
            .max()
            .unwrap_or(0)
    }

    pub fn coeff(&self, n: i64) -> Complex64 {
        self.coeffs.get(&n).copied().unwrap_or_default()
    }

    pub fn coeffs(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        self.coeffs.iter().map(|(&n, &c)| (n, c))
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.values().all(|c| c.norm() == 0.0)
    }

    /// `sup_n |q_n|`.
    pub fn max_coeff(&self) -> f64 {
        self.coeffs.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// True when `q` is real valued, i.e. `q_{-n} = conj(q_n)`.
    pub fn is_real(&self) -> bool {
        self.coeffs
            .iter()
            .all(|(&n, &c)| (self.coeff(-n) - c.conj()).norm() <= 1e-15 * (1.0 + c.norm()))
    }

    /// The conjugate potential `conj(q(x))`, with coefficients `conj(q_{-n})`.
    pub fn conj(&self) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|(&n, &c)| (-n, c.conj())).collect(),
            order: self.order,
            meta: self.meta,
        }
    }

    /// `q(x)`; `x` is reduced modulo 1 first.
    pub fn evaluate(&self, x: f64) -> Complex64 {
        let x = x - x.floor();
        self.coeffs
            .iter()
            .map(|(&n, &c)| c * Complex64::from_polar(1.0, 2.0 * PI * n as f64 * x))
            .sum()
    }

    pub(crate) fn evaluator(&self) -> PotentialEval {
        let max = self.effective_order();
        let mut pos = vec![Complex64::default(); max + 1];
        let mut neg = vec![Complex64::default(); max + 1];
        for (&n, &c) in &self.coeffs {
            if n > 0 {
                pos[n as usize] = c;
            } else {
                neg[n.unsigned_abs() as usize] = c;
            }
        }
        PotentialEval { pos, neg }
    }
}

/// Fast evaluation by powers of `exp(i 2 pi x)`.
#[derive(Debug, Clone)]
pub(crate) struct PotentialEval {
    pos: Vec<Complex64>,
    neg: Vec<Complex64>,
}

impl PotentialEval {
    pub(crate) fn at(&self, x: f64) -> Complex64 {
        let order = self.pos.len() - 1;
        if order == 0 {
            return Complex64::default();
        }
        let x = x - x.floor();
        let base = Complex64::from_polar(1.0, 2.0 * PI * x);
        let inv = base.conj();
        let mut up = base;
        let mut down = inv;
        let mut acc = Complex64::default();
        for n in 1..=order {
            acc += self.pos[n] * up + self.neg[n] * down;
            up *= base;
            down *= inv;
        }
        acc
    }
}

/// On-disk potential format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialFile {
    pub coeffs: Vec<CoeffEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meta: Option<Smoothness>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoeffEntry {
    pub n: i64,
    pub re: f64,
    pub im: f64,
}

impl PotentialFile {
    pub fn from_json(text: &str) -> Result<FourierPotential> {
        let file: PotentialFile =
            serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        file.into_potential()
    }

    pub fn into_potential(self) -> Result<FourierPotential> {
        let p = FourierPotential::from_fourier(
            self.coeffs
                .iter()
                .map(|e| (e.n, Complex64::new(e.re, e.im))),
        )?;
        Ok(match self.meta {
            Some(m) => p.with_meta(m),
            None => p,
        })
    }
}

impl From<&FourierPotential> for PotentialFile {
    fn from(p: &FourierPotential) -> Self {
        Self {
            coeffs: p
                .coeffs()
                .map(|(n, c)| CoeffEntry {
                    n,
                    re: c.re,
                    im: c.im,
                })
                .collect(),
            meta: p.meta(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn empty_series_is_zero_potential() {
        let p = FourierPotential::from_fourier([]).unwrap();
        assert!(p.is_zero());
        assert_eq!(p.evaluate(0.37), Complex64::default());
    }

    #[test]
    fn two_term_keeps_coefficients() {
        let p = FourierPotential::from_fourier([(-1, c(0.5, 0.1)), (1, c(-0.2, 0.3))]).unwrap();
        assert_eq!(p.coeff(-1), c(0.5, 0.1));
        assert_eq!(p.coeff(1), c(-0.2, 0.3));
        assert_eq!(p.order(), 1);
    }

    #[test]
    fn nonzero_mean_rejected() {
        let err = FourierPotential::from_fourier([(0, c(1.0, 0.0))]).unwrap_err();
        assert!(matches!(err, Error::NonzeroMean { .. }));
    }

    #[test]
    fn cosine_samples() {
        let m = 8;
        let s: Vec<_> = (0..m)
            .map(|j| c(2.0 * (2.0 * PI * j as f64 / m as f64).cos(), 0.0))
            .collect();
        let p = FourierPotential::from_samples(&s).unwrap();
        assert!((p.coeff(1) - c(1.0, 0.0)).norm() < 1e-12);
        assert!((p.coeff(-1) - c(1.0, 0.0)).norm() < 1e-12);
        for n in [2, -2, 3, -3, 4, -4] {
            assert!(p.coeff(n).norm() < 1e-12);
        }
        assert_eq!(p.order(), 4);
    }

    #[test]
    fn constant_samples_give_zero() {
        let p = FourierPotential::from_samples(&[c(3.0, -1.0); 6]).unwrap();
        assert!(p.is_zero());
    }

    #[test]
    fn single_harmonic_samples() {
        let m = 16;
        let s: Vec<_> = (0..m)
            .map(|j| Complex64::from_polar(1.0, 4.0 * PI * j as f64 / m as f64))
            .collect();
        let p = FourierPotential::from_samples(&s).unwrap();
        assert!((p.coeff(2) - c(1.0, 0.0)).norm() < 1e-12);
        assert_eq!(p.effective_order(), 2);
    }

    #[test]
    fn too_few_samples() {
        assert_eq!(
            FourierPotential::from_samples(&[c(1.0, 0.0); 3]).unwrap_err(),
            Error::TooFewSamples(3)
        );
    }

    #[test]
    fn cosine_values() {
        let p = FourierPotential::mathieu(c(1.0, 0.0));
        assert!((p.evaluate(0.0) - c(2.0, 0.0)).norm() < 1e-15);
        assert!(p.evaluate(0.25).norm() < 1e-15);
    }

    #[test]
    fn conj_and_reality() {
        let p = FourierPotential::mathieu(c(0.4, 0.0));
        assert!(p.is_real());
        let q = FourierPotential::mathieu(c(0.0, 0.5));
        assert!(!q.is_real());
        let x = 0.123;
        assert!((q.conj().evaluate(x) - q.evaluate(x).conj()).norm() < 1e-14);
    }

    #[test]
    fn fast_evaluator_matches() {
        let p = FourierPotential::from_fourier([
            (-3, c(0.1, 0.2)),
            (1, c(0.4, -0.3)),
            (2, c(-0.7, 0.0)),
        ])
        .unwrap();
        let ev = p.evaluator();
        for k in 0..50 {
            let x = k as f64 * 0.0371 - 0.4;
            assert!((ev.at(x) - p.evaluate(x)).norm() < 1e-13);
        }
    }

    #[test]
    fn json_round_trip() {
        let text = r#"{"coeffs":[{"n":-1,"re":0.3,"im":0.0},{"n":1,"re":0.3,"im":0.0}],"meta":{"p":2,"s":1}}"#;
        let p = PotentialFile::from_json(text).unwrap();
        assert_eq!(p.coeff(1), c(0.3, 0.0));
        assert_eq!(p.meta().unwrap().s, Some(1));
        let back = serde_json::to_string(&PotentialFile::from(&p)).unwrap();
        assert_eq!(PotentialFile::from_json(&back).unwrap(), p);
    }

    fn arb_potential() -> impl Strategy<Value = FourierPotential> {
        proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..=6).prop_map(|v| {
            let half = v.len() as i64;
            FourierPotential::from_fourier(v.iter().enumerate().map(|(i, &(re, im))| {
                let n = i as i64 - half / 2;
                let n = if n >= 0 { n + 1 } else { n };
                (n, c(re, im))
            }))
            .unwrap()
        })
    }

    proptest! {
        #[test]
        fn periodic(p in arb_potential(), x in -5.0f64..5.0) {
            prop_assert!((p.evaluate(x) - p.evaluate(x + 1.0)).norm() < 1e-12);
        }

        #[test]
        fn sampling_round_trip(p in arb_potential()) {
            let m = 32;
            let s: Vec<_> = (0..m).map(|j| p.evaluate(j as f64 / m as f64)).collect();
            let back = FourierPotential::from_samples(&s).unwrap();
            for n in -16i64..=16 {
                prop_assert!((back.coeff(n) - p.coeff(n)).norm() < 1e-10);
            }
        }

        #[test]
        fn zero_mean(p in arb_potential()) {
            let m = 256;
            let mean: Complex64 = (0..m).map(|j| p.evaluate(j as f64 / m as f64)).sum::<Complex64>() / m as f64;
            prop_assert!(mean.norm() < 1e-10);
        }
    }
}
