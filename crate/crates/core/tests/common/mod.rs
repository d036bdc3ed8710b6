//! Helpers shared by the integration tests: the toy design and an
//! independent Runge–Kutta oracle for the susceptible fraction.
#![allow(dead_code)]

use serocohort::design::SmoothedBox;
use serocohort::foi::ForceOfInfection;

/// The six toy boxes: times `[j-1, j]`, ages `[0, 0.05]`.
pub fn toy_boxes() -> Vec<SmoothedBox> {
    (1..=6)
        .map(|j| SmoothedBox::new(((j - 1) as f64, j as f64), (0.0, 0.05), 0.01, 0.0005).unwrap())
        .collect()
}

pub fn varicella_breakpoints() -> Vec<f64> {
    vec![0.0, 3.0, 7.0, 15.0, 21.0]
}

pub const VARICELLA_TRUTH: [f64; 7] = [0.08, 0.15, 0.10, 0.05, 1.8, 1.0, 0.5];

/// Integrates `dq/ds = -λ(b + s, s) q`, `q(0) = 1`, along the characteristic
/// born at `b = t - a` with adaptive Dormand–Prince 5(4), restarting at every
/// age kink so each piece is smooth.
pub fn q_by_rk(foi: &ForceOfInfection, t: f64, a: f64, tol: f64) -> f64 {
    let b = t - a;
    let mut knots = vec![0.0];
    knots.extend(foi.age_kinks().iter().copied().filter(|&k| k > 0.0 && k < a));
    knots.push(a);
    let mut q = 1.0;
    for w in knots.windows(2) {
        // evaluate the hazard strictly inside the piece at its ends
        let (lo, hi) = (w[0], w[1]);
        let f = |s: f64, y: f64| {
            let s = s.clamp(lo + 1e-13 * (hi - lo), hi - 1e-13 * (hi - lo));
            -foi.eval(b + s, s).unwrap() * y
        };
        q = dopri(f, lo, hi, q, tol);
    }
    q
}

fn dopri(f: impl Fn(f64, f64) -> f64, x0: f64, x1: f64, y0: f64, tol: f64) -> f64 {
    const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
    const A: [[f64; 6]; 7] = [
        [0.0; 6],
        [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
        [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
        [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
        [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
        [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
    ];
    const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
    const B4: [f64; 7] = [
        5179.0 / 57600.0,
        0.0,
        7571.0 / 16695.0,
        393.0 / 640.0,
        -92097.0 / 339200.0,
        187.0 / 2100.0,
        1.0 / 40.0,
    ];
    let (mut x, mut y) = (x0, y0);
    let mut h = ((x1 - x0) / 16.0).max(1e-12);
    while x < x1 {
        if x + h > x1 {
            h = x1 - x;
        }
        let mut k = [0.0; 7];
        for i in 0..7 {
            let yi = y + h * (0..i).map(|j| A[i][j] * k[j]).sum::<f64>();
            k[i] = f(x + C[i] * h, yi);
        }
        let y5 = y + h * (0..7).map(|i| B5[i] * k[i]).sum::<f64>();
        let y4 = y + h * (0..7).map(|i| B4[i] * k[i]).sum::<f64>();
        let err = (y5 - y4).abs();
        if err <= tol || h < 1e-14 {
            x += h;
            y = y5;
        }
        let factor = if err == 0.0 { 4.0 } else { (0.9 * (tol / err).powf(0.2)).clamp(0.2, 4.0) };
        h *= factor;
    }
    y
}

pub fn mean_sd(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    (m, (x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt())
}

/// Toy study configuration: γ = π, six boxes, `N = 10` per box, σ = 0.5.
pub fn toy_config(iterations: usize, m: usize, seed: u64) -> serocohort::config::ExperimentConfig {
    serocohort::config::ExperimentConfig::from_toml_str(&format!(
        r#"
[model]
kind = "toy"
truth = [3.141592653589793]

[design]
years = [0, 5]
ages = [0, 0]
n_per_cell = 10
age_width = 0.05
edge_t = 0.01
edge_a = 0.0005

[sampler]
algorithm = "pm_rwm"
iterations = {iterations}
burn_in = {burn}
m = {m}
sigma = 0.5
seed = {seed}
"#,
        burn = iterations / 10
    ))
    .unwrap()
}
