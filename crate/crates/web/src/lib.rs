//! Browser bindings for the demo page in `www/`.

use hillspec::floquet::{alpha_profile, DEFAULT_NX};
use hillspec::ode::fundamental_at_one;
use hillspec::potential::PotentialFile;
use hillspec::spectrum::{bands_to_json, track_bands, TrackingConfig};
use hillspec::{Complex64, FourierPotential};
use wasm_bindgen::prelude::*;

const TOL: f64 = 1e-10;

fn potential(json: &str) -> Result<FourierPotential, String> {
    PotentialFile::from_json(json).map_err(|e| e.to_string())
}

/// `[lambda, re F, im F, ...]` along the segment `re in [lo, hi]`, `im` fixed.
pub fn discriminant_samples(json: &str, lo: f64, hi: f64, im: f64, samples: usize) -> Result<Vec<f64>, String> {
    let p = potential(json)?;
    let samples = samples.clamp(2, 4000);
    let mut out = Vec::with_capacity(3 * samples);
    for j in 0..samples {
        let re = lo + (hi - lo) * j as f64 / (samples - 1) as f64;
        let m = fundamental_at_one(&p, Complex64::new(re, im), TOL).map_err(|e| e.to_string())?;
        out.extend([re, m.f.re, m.f.im]);
    }
    Ok(out)
}

/// Band curves `|n| <= nmax` as the JSON written by `hillspec bands`.
pub fn band_json(json: &str, nmax: usize, tgrid: usize) -> Result<String, String> {
    let p = potential(json)?;
    let cfg = TrackingConfig { nmax: nmax.clamp(1, 12), tgrid: tgrid.clamp(16, 256), tol: TOL, ..Default::default() };
    cfg.validate().map_err(|e| e.to_string())?;
    let set = track_bands(&p, &cfg).map_err(|e| e.to_string())?;
    Ok(bands_to_json(&set.curves))
}

/// `[t, |alpha_n(t)|, ...]` on `samples` points of `(0, pi)`; NaN where alpha is undefined.
pub fn alpha_samples(json: &str, n: i64, samples: usize) -> Result<Vec<f64>, String> {
    let p = potential(json)?;
    let samples = samples.clamp(2, 1000);
    let ts: Vec<f64> = (0..samples).map(|j| std::f64::consts::PI * (j as f64 + 0.5) / samples as f64).collect();
    let cfg = TrackingConfig { nmax: n.unsigned_abs() as usize + 2, tol: TOL, ..Default::default() };
    Ok(alpha_profile(&p, n, &ts, &cfg, DEFAULT_NX)
        .into_iter()
        .flat_map(|s| [s.t, s.alpha.map_or(f64::NAN, |a| a.norm())])
        .collect())
}

fn js(e: String) -> JsValue {
    JsValue::from_str(&e)
}

#[wasm_bindgen(js_name = discriminantCurve)]
pub fn discriminant_curve(potential: &str, lo: f64, hi: f64, im: f64, samples: usize) -> Result<Vec<f64>, JsValue> {
    discriminant_samples(potential, lo, hi, im, samples).map_err(js)
}

#[wasm_bindgen(js_name = bandCurves)]
pub fn band_curves(potential: &str, nmax: usize, tgrid: usize) -> Result<String, JsValue> {
    band_json(potential, nmax, tgrid).map_err(js)
}

#[wasm_bindgen(js_name = alphaProfile)]
pub fn alpha_curve(potential: &str, n: i32, samples: usize) -> Result<Vec<f64>, JsValue> {
    alpha_samples(potential, n as i64, samples).map_err(js)
}
