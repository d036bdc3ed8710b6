//! Adaptive Gauss–Kronrod (7/15) quadrature over panels with known kinks.

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
// Gauss weights for the nodes XGK[1], XGK[3], XGK[5], XGK[7]
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

const MAX_DEPTH: u32 = 40;

fn gk15<F: FnMut(f64) -> Result<f64>>(f: &mut F, a: f64, b: f64) -> Result<(f64, f64)> {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c)?;
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let pair = f(c - dx)? + f(c + dx)?;
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    Ok((kronrod * h, ((kronrod - gauss) * h).abs()))
}

fn adapt<F: FnMut(f64) -> Result<f64>>(f: &mut F, a: f64, b: f64, tol: f64, depth: u32) -> Result<f64> {
    let (value, err) = gk15(f, a, b)?;
    if err <= tol || (b - a).abs() <= 1e-15 * (a.abs() + b.abs()) {
        return Ok(value);
    }
    if depth >= MAX_DEPTH {
        return Err(Error::QuadratureNonConvergence { lo: a, hi: b });
    }
    let m = 0.5 * (a + b);
    Ok(adapt(f, a, m, 0.5 * tol, depth + 1)? + adapt(f, m, b, 0.5 * tol, depth + 1)?)
}

/// `∫_a^b f` to absolute tolerance `tol`.
pub fn integrate<F: FnMut(f64) -> Result<f64>>(mut f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    if b <= a {
        return Ok(0.0);
    }
    adapt(&mut f, a, b, tol, 0)
}

/// Integral over `[knots[0], knots[last]]`, adapting separately on each
/// panel between consecutive knots. `knots` must be sorted; duplicates are
/// skipped. The tolerance is shared out in proportion to panel width.
pub fn integrate_panels<F: FnMut(f64) -> Result<f64>>(mut f: F, knots: &[f64], tol: f64) -> Result<f64> {
    if knots.len() < 2 {
        return Ok(0.0);
    }
    let total = knots[knots.len() - 1] - knots[0];
    if total <= 0.0 {
        return Ok(0.0);
    }
    let mut sum = 0.0;
    for w in knots.windows(2) {
        if w[1] > w[0] {
            sum += adapt(&mut f, w[0], w[1], tol * (w[1] - w[0]) / total, 0)?;
        }
    }
    Ok(sum)
}

/// Sorted, deduplicated knots: `lo`, `hi` and every extra point strictly
/// inside `(lo, hi)`.
pub fn knots_within(lo: f64, hi: f64, extra: impl IntoIterator<Item = f64>) -> Vec<f64> {
    let mut k: Vec<f64> = extra.into_iter().filter(|&x| x > lo && x < hi).collect();
    k.push(lo);
    k.push(hi);
    k.sort_by(f64::total_cmp);
    k.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * (1.0 + b.abs()));
    k
}
