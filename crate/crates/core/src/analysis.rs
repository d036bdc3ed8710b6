//! Posterior diagnostics: empirical Wasserstein distance, autocorrelation,
//! summaries, convergence orders and predictive prevalence bands.

use crate::design::SmoothedBox;
use crate::error::{Error, Result};
use crate::likelihood::{p_reference, ModelSpec};
use crate::mcmc::Chain;

/// W1 between the empirical measures of two samples, `∫ |F_a - F_b|`.
pub fn wasserstein_1d(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut xa = a.to_vec();
    let mut xb = b.to_vec();
    xa.sort_by(f64::total_cmp);
    xb.sort_by(f64::total_cmp);
    if xa.len() == xb.len() {
        let s: f64 = xa.iter().zip(&xb).map(|(x, y)| (x - y).abs()).sum();
        return Ok(s / xa.len() as f64);
    }
    let (na, nb) = (xa.len() as f64, xb.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut prev = xa[0].min(xb[0]);
    let mut total = 0.0;
    while i < xa.len() || j < xb.len() {
        let next = match (xa.get(i), xb.get(j)) {
            (Some(&x), Some(&y)) => x.min(y),
            (Some(&x), None) => x,
            (None, Some(&y)) => y,
            (None, None) => unreachable!(),
        };
        total += (i as f64 / na - j as f64 / nb).abs() * (next - prev);
        while i < xa.len() && xa[i] == next {
            i += 1;
        }
        while j < xb.len() && xb[j] == next {
            j += 1;
        }
        prev = next;
    }
    Ok(total)
}

/// Biased-normalized autocorrelations at lags `0..=max_lag`.
pub fn acf(x: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    if x.len() <= max_lag {
        return Err(Error::LagTooLarge {
            lag: max_lag,
            len: x.len(),
        });
    }
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let c0: f64 = x.iter().map(|v| (v - mean).powi(2)).sum();
    if c0 <= 0.0 || !c0.is_finite() {
        return Err(Error::DegenerateVariance);
    }
    Ok((0..=max_lag)
        .map(|k| {
            x.iter()
                .zip(&x[k..])
                .map(|(a, b)| (a - mean) * (b - mean))
                .sum::<f64>()
                / c0
        })
        .collect())
}

/// Quantile of sorted data by linear interpolation between order statistics.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub const SUMMARY_LEVELS: [f64; 5] = [0.025, 0.05, 0.5, 0.95, 0.975];

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub mean: f64,
    /// Sample standard deviation (divisor `n - 1`; 0 for a single value).
    pub sd: f64,
    /// Quantiles at [`SUMMARY_LEVELS`].
    pub quantiles: [f64; 5],
}

impl Summary {
    pub fn of(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptySample);
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let sd = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        Ok(Summary {
            mean,
            sd,
            quantiles: SUMMARY_LEVELS.map(|p| quantile_sorted(&sorted, p)),
        })
    }

    /// Equal-tailed 95% interval.
    pub fn ci95(&self) -> (f64, f64) {
        (self.quantiles[0], self.quantiles[4])
    }
}

/// Per-component summaries of the draws after `burn_in`.
pub fn summarize(chain: &Chain, burn_in: usize) -> Result<Vec<Summary>> {
    if burn_in >= chain.len() {
        return Err(Error::EmptySample);
    }
    let dim = chain.draws[0].theta.len();
    (0..dim).map(|k| Summary::of(&chain.component(k, burn_in))).collect()
}

/// `log2(e_k / e_{k+1})` for successive errors on a halving ladder.
pub fn convergence_order(errors: &[f64]) -> Result<Vec<f64>> {
    if errors.len() < 2 {
        return Err(Error::InvalidParameter("need at least two errors".into()));
    }
    if let Some(&e) = errors.iter().find(|e| !(e.is_finite() && **e > 0.0)) {
        return Err(Error::NonPositiveError(e));
    }
    Ok(errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub cohorts_per_box: u32,
    pub w1: f64,
    /// Order relative to the previous row; absent on the first row.
    pub order: Option<f64>,
    pub mean_diff: f64,
    pub sd_diff: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceReport {
    /// Builds rows from `(cohorts_per_box, w1, mean_diff, sd_diff)` sorted by
    /// cohort count; orders come from successive W1 values.
    pub fn new(mut entries: Vec<(u32, f64, f64, f64)>) -> Result<Self> {
        entries.sort_by_key(|e| e.0);
        let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(entries.len());
        for (c, w1, mean_diff, sd_diff) in entries {
            if !(w1 >= 0.0) {
                return Err(Error::InvalidParameter(format!("negative distance {w1}")));
            }
            let order = match rows.last() {
                Some(prev) if prev.w1 > 0.0 && w1 > 0.0 => Some((prev.w1 / w1).log2()),
                _ => None,
            };
            rows.push(ConvergenceRow {
                cohorts_per_box: c,
                w1,
                order,
                mean_diff,
                sd_diff,
            });
        }
        Ok(ConvergenceReport { rows })
    }
}

/// Median of a non-empty sample.
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    quantile_sorted(&v, 0.5)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrevalenceBand {
    /// Antibody prevalence `1 - p`.
    pub median: f64,
    pub q05: f64,
    pub q95: f64,
    /// Susceptible fraction `p`.
    pub p_median: f64,
    pub p_q05: f64,
    pub p_q95: f64,
}

/// Posterior predictive bands of seroprevalence in each box, one reference
/// probability per draw and box.
pub fn predict_prevalence(thetas: &[Vec<f64>], model: &ModelSpec, boxes: &[SmoothedBox]) -> Result<Vec<PrevalenceBand>> {
    if thetas.is_empty() {
        return Err(Error::EmptySample);
    }
    let fois = thetas.iter().map(|t| model.foi(t)).collect::<Result<Vec<_>>>()?;
    boxes
        .iter()
        .map(|bx| {
            let mut p = map_maybe_parallel(&fois, |f| p_reference(f, bx))?;
            p.sort_by(f64::total_cmp);
            let q = |x| quantile_sorted(&p, x);
            Ok(PrevalenceBand {
                median: 1.0 - q(0.5),
                q05: 1.0 - q(0.95),
                q95: 1.0 - q(0.05),
                p_median: q(0.5),
                p_q05: q(0.05),
                p_q95: q(0.95),
            })
        })
        .collect()
}

#[cfg(feature = "parallel")]
pub(crate) fn map_maybe_parallel<T: Sync, U: Send>(xs: &[T], f: impl Fn(&T) -> Result<U> + Sync + Send) -> Result<Vec<U>> {
    use rayon::prelude::*;
    xs.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn map_maybe_parallel<T: Sync, U: Send>(xs: &[T], f: impl Fn(&T) -> Result<U> + Sync + Send) -> Result<Vec<U>> {
    xs.iter().map(f).collect()
}

/// Kolmogorov–Smirnov statistic of a sample against a continuous CDF.
pub fn ks_statistic(sample: &[f64], cdf: impl Fn(f64) -> f64) -> Result<f64> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut x = sample.to_vec();
    x.sort_by(f64::total_cmp);
    let n = x.len() as f64;
    Ok(x.iter()
        .enumerate()
        .map(|(i, &v)| {
            let f = cdf(v);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max))
}

/// Asymptotic one-sample KS critical value `c(α)/√n` at level 1%.
pub fn ks_critical_1pct(n: usize) -> f64 {
    1.627_6 / (n as f64).sqrt()
}
