//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Every export returns a flat `Vec<f64>` (a `Float64Array` in JavaScript);
//! invalid inputs raise a JavaScript error with the library's message.

use serocohort::cohort::{p_cohort_det, CohortGrid};
use serocohort::design::SmoothedBox;
use serocohort::foi::{AgeModulated, ForceOfInfection};
use serocohort::likelihood::p_reference;
use wasm_bindgen::prelude::*;

fn js(e: serocohort::Error) -> JsError {
    JsError::new(&e.to_string())
}

fn grid_point(lo: f64, hi: f64, i: usize, n: usize) -> f64 {
    if n <= 1 {
        lo
    } else {
        lo + (hi - lo) * i as f64 / (n - 1) as f64
    }
}

fn susceptible_field(foi: &ForceOfInfection, t: (f64, f64), a_max: f64, nt: usize, na: usize) -> serocohort::Result<Vec<f64>> {
    let mut out = Vec::with_capacity(nt * na);
    for j in 0..na {
        let a = grid_point(0.0, a_max, j, na);
        for i in 0..nt {
            out.push(foi.q_exact(grid_point(t.0, t.1, i, nt), a)?);
        }
    }
    Ok(out)
}

/// Susceptible fraction `q(t, a)` of the toy model on an `nt × na` grid
/// over `[t0, t1] × [0, a_max]`, age-major (row `j` is age index `j`).
#[wasm_bindgen]
pub fn toy_susceptible_field(gamma: f64, t0: f64, t1: f64, a_max: f64, nt: usize, na: usize) -> Result<Vec<f64>, JsError> {
    let foi = ForceOfInfection::toy(gamma).map_err(js)?;
    susceptible_field(&foi, (t0, t1), a_max, nt, na).map_err(js)
}

/// For `k = 0..=max_k`: `|p - p_ε|` in toy box `box_index` (1-based, time
/// `[j-1, j]`, ages `[0, 0.05]`) with `ε = 2^-k`.
#[wasm_bindgen]
pub fn toy_cohort_errors(gamma: f64, box_index: u32, max_k: u32) -> Result<Vec<f64>, JsError> {
    if box_index == 0 || max_k > 12 {
        return Err(JsError::new("box_index must be >= 1 and max_k <= 12"));
    }
    let foi = ForceOfInfection::toy(gamma).map_err(js)?;
    let j = box_index as f64;
    let bx = SmoothedBox::new((j - 1.0, j), (0.0, 0.05), 0.01, 0.0005).map_err(js)?;
    let exact = p_reference(&foi, &bx).map_err(js)?;
    (0..=max_k)
        .map(|k| {
            let grid = CohortGrid::covering(0.5f64.powi(k as i32), [&bx])?;
            Ok((p_cohort_det(&foi, &grid, &bx)? - exact).abs())
        })
        .collect::<serocohort::Result<Vec<_>>>()
        .map_err(js)
}

fn age_modulated(alphas: &[f64], gamma1: f64, gamma2: f64, gamma3: f64) -> serocohort::Result<ForceOfInfection> {
    let breakpoints = match alphas.len() {
        4 => vec![0.0, 3.0, 7.0, 15.0, 21.0],
        n => (0..=n).map(|i| 21.0 * i as f64 / n as f64).collect(),
    };
    Ok(ForceOfInfection::AgeModulated(AgeModulated::new(
        breakpoints,
        alphas.to_vec(),
        gamma1,
        gamma2,
        gamma3,
        2000.0,
    )?))
}

/// Force of infection `λ(t, age)` of the age-modulated model at `n` times
/// in `[t0, t1]`. Four `alphas` use age groups (0,3], (3,7], (7,15],
/// (15,21]; other counts split `[0, 21]` evenly.
#[wasm_bindgen]
pub fn foi_curve(alphas: Vec<f64>, gamma1: f64, gamma2: f64, gamma3: f64, age: f64, t0: f64, t1: f64, n: usize) -> Result<Vec<f64>, JsError> {
    let foi = age_modulated(&alphas, gamma1, gamma2, gamma3).map_err(js)?;
    (0..n)
        .map(|i| foi.eval(grid_point(t0, t1, i, n), age))
        .collect::<serocohort::Result<Vec<_>>>()
        .map_err(js)
}

/// Seroprevalence `1 - p` of the age-modulated model in each one-year age
/// cell `[a, a+1]`, `a = 0..ages`, during calendar year `year`.
#[wasm_bindgen]
pub fn prevalence_by_age(alphas: Vec<f64>, gamma1: f64, gamma2: f64, gamma3: f64, year: f64, ages: u32) -> Result<Vec<f64>, JsError> {
    let foi = age_modulated(&alphas, gamma1, gamma2, gamma3).map_err(js)?;
    (0..ages)
        .map(|a| {
            let bx = SmoothedBox::with_default_edges((year, year + 1.0), (a as f64, a as f64 + 1.0))?;
            Ok(1.0 - p_reference(&foi, &bx)?)
        })
        .collect::<serocohort::Result<Vec<_>>>()
        .map_err(js)
}
