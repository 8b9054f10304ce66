//! Browser bindings. Every exported function takes the model as a flat
//! `[theta, Re α₁, Im α₁, …, Re α₄, Im α₄]` array in atomic units and returns
//! a JSON string.

use num_complex::Complex64;
use serde::Serialize;
use wasm_bindgen::prelude::*;

use ncosc::model::{DerivedConstants, ModelParams};
use ncosc::position::{closed_form_vacua, GridSpec};
use ncosc::verify::riesz_rows;

/// Largest level index offered by the spectrum view.
pub const MAX_LEVEL: usize = 12;
/// Largest grid accepted by the density view.
pub const MAX_POINTS: usize = 301;
const DENSITY_EXTENT: f64 = 4.0;

pub fn params_from(flat: &[f64]) -> Result<ModelParams, String> {
    if flat.len() != 9 {
        return Err(format!("expected 9 numbers (theta and four complex alphas), got {}", flat.len()));
    }
    let alpha = [0, 1, 2, 3].map(|k| Complex64::new(flat[1 + 2 * k], flat[2 + 2 * k]));
    let p = ModelParams::atomic(flat[0], alpha);
    p.validate().map_err(|e| e.to_string())?;
    Ok(p)
}

fn derive(flat: &[f64]) -> Result<DerivedConstants, String> {
    DerivedConstants::derive(&params_from(flat)?).map_err(|e| e.to_string())
}

fn to_json<T: Serialize>(v: &T) -> Result<String, String> {
    serde_json::to_string(v).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct Level {
    n1: usize,
    n2: usize,
    re: f64,
    im: f64,
}

#[derive(Serialize)]
struct Spectrum {
    beta: [[f64; 2]; 4],
    gamma1: f64,
    gamma2: f64,
    bosonic: bool,
    levels: Vec<Level>,
}

/// Energies for `n₁, n₂ ≤ n_max` plus the shift constants.
pub fn spectrum_json(flat: &[f64], n_max: usize) -> Result<String, String> {
    let d = derive(flat)?;
    let n_max = n_max.min(MAX_LEVEL);
    let levels = (0..=n_max)
        .flat_map(|n1| (0..=n_max).map(move |n2| (n1, n2)))
        .map(|(n1, n2)| {
            let e = d.energy(n1, n2);
            Level { n1, n2, re: e.re, im: e.im }
        })
        .collect();
    to_json(&Spectrum {
        beta: d.beta.map(|b| [b.re, b.im]),
        gamma1: d.gamma1,
        gamma2: d.gamma2,
        bosonic: d.is_bosonic(),
        levels,
    })
}

#[derive(Serialize)]
struct RieszCurve {
    bosonic: bool,
    within_envelope: bool,
    k: Vec<usize>,
    product: Vec<f64>,
}

/// `‖φ_(k,0)‖·‖Ψ_(k,0)‖` for `k ≤ 25` on the 40-level truncation.
pub fn riesz_json(flat: &[f64]) -> Result<String, String> {
    let d = derive(flat)?;
    let rows = riesz_rows(&d, 1).map_err(|e| e.to_string())?;
    to_json(&RieszCurve {
        bosonic: d.is_bosonic(),
        within_envelope: d.within_envelope(),
        k: rows.iter().map(|r| r.k).collect(),
        product: rows.iter().map(|r| r.product).collect(),
    })
}

#[derive(Serialize)]
struct Density {
    points: usize,
    x_min: f64,
    x_max: f64,
    max: f64,
    /// Row-major, `x₁` slow.
    values: Vec<f64>,
}

/// `|φ₀|²` or `|Ψ₀|²` from the closed-form Gaussians on a square grid.
pub fn density_json(flat: &[f64], psi: bool, points: usize) -> Result<String, String> {
    let d = derive(flat)?;
    let points = points.clamp(3, MAX_POINTS) | 1;
    let g = GridSpec::scaled(DENSITY_EXTENT, points, &d).map_err(|e| e.to_string())?;
    let (phi0, psi0) = closed_form_vacua(&d, &g).map_err(|e| e.to_string())?;
    let f = if psi { psi0 } else { phi0 };
    let values: Vec<f64> = f.values.iter().map(|z| z.norm_sqr()).collect();
    let max = values.iter().copied().fold(0.0, f64::max);
    to_json(&Density {
        points: g.points,
        x_min: g.x_min,
        x_max: g.x_max,
        max,
        values,
    })
}

fn js(r: Result<String, String>) -> Result<String, JsError> {
    r.map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn spectrum(params: &[f64], n_max: usize) -> Result<String, JsError> {
    js(spectrum_json(params, n_max))
}

#[wasm_bindgen]
pub fn riesz_curve(params: &[f64]) -> Result<String, JsError> {
    js(riesz_json(params))
}

#[wasm_bindgen]
pub fn vacuum_density(params: &[f64], psi: bool, points: usize) -> Result<String, JsError> {
    js(density_json(params, psi, points))
}
