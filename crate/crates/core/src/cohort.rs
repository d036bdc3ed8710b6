//! Birth-cohort (Escalator Boxcar Train) discretization.
//!
//! Births are lumped into cohorts of width `ε` centred on `x_i = i ε`. Cohort
//! `i` carries mass `m_i(t)` at age `t - x_i`; its mass starts at `ε` and
//! decays with the hazard experienced along its characteristic, so the
//! approximate solution is the Dirac sum `Σ_i m_i(t) δ_{t - x_i}`.

use rand::Rng;

use crate::design::SmoothedBox;
use crate::error::{Error, Result};
use crate::foi::ForceOfInfection;
use crate::quadrature::{integrate_panels, knots_within};

/// Absolute tolerance for the deterministic cohort observable.
pub const COHORT_QUAD_TOL: f64 = 1e-12;

/// Birth-time grid `x_i = i ε` for `i` in `first..=last`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CohortGrid {
    epsilon: f64,
    first: i64,
    last: i64,
}

impl CohortGrid {
    pub fn new(epsilon: f64, first: i64, last: i64) -> Result<Self> {
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(Error::InvalidParameter(format!("cohort width must be > 0, got {epsilon}")));
        }
        if last < first {
            return Err(Error::InvalidParameter("empty cohort window".into()));
        }
        Ok(CohortGrid { epsilon, first, last })
    }

    /// Smallest window whose cohorts cover every characteristic meeting the
    /// support of any box, padded by one cohort each side.
    pub fn covering<'a>(epsilon: f64, boxes: impl IntoIterator<Item = &'a SmoothedBox>) -> Result<Self> {
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(Error::InvalidParameter(format!("cohort width must be > 0, got {epsilon}")));
        }
        let (lo, hi) = boxes
            .into_iter()
            .map(birth_band)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (l, h)| (lo.min(l), hi.max(h)));
        if lo > hi {
            return Err(Error::InvalidParameter("no boxes to cover".into()));
        }
        let first = ((lo - epsilon) / epsilon).floor() as i64;
        let last = ((hi + epsilon) / epsilon).ceil() as i64;
        Self::new(epsilon, first, last)
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn len(&self) -> usize {
        (self.last - self.first + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn birth_time(&self, i: i64) -> f64 {
        i as f64 * self.epsilon
    }

    pub fn birth_times(&self) -> impl Iterator<Item = f64> + '_ {
        (self.first..=self.last).map(|i| self.birth_time(i))
    }

    /// Fails with `GridTooNarrow` unless every cohort interval
    /// `[x_i - ε/2, x_i + ε/2)` meeting the box's birth band is in the window.
    pub fn check_covers(&self, bx: &SmoothedBox) -> Result<()> {
        let (lo, hi) = birth_band(bx);
        let need_first = ((lo + 0.5 * self.epsilon) / self.epsilon).floor() as i64;
        let need_last = ((hi + 0.5 * self.epsilon) / self.epsilon).ceil() as i64;
        if need_first < self.first || need_last > self.last {
            return Err(Error::GridTooNarrow {
                need_lo: lo,
                need_hi: hi,
            });
        }
        Ok(())
    }

    /// Indices of cohorts whose age at time `t` lies in `[a_lo, a_hi]`.
    fn aged_between(&self, t: f64, a_lo: f64, a_hi: f64) -> std::ops::RangeInclusive<i64> {
        let i0 = ((t - a_hi) / self.epsilon).ceil() as i64;
        let i1 = ((t - a_lo) / self.epsilon).floor() as i64;
        i0.max(self.first)..=i1.min(self.last)
    }
}

/// Birth times whose characteristic meets the support of `bx`.
fn birth_band(bx: &SmoothedBox) -> (f64, f64) {
    let (t0, t1) = bx.time_support();
    let (a0, a1) = bx.age_support();
    (t0 - a1, t1 - a0)
}

/// Mass at time `t` of the cohort born at `birth` with initial mass `epsilon`.
pub fn cohort_mass(foi: &ForceOfInfection, birth: f64, epsilon: f64, t: f64) -> Result<f64> {
    if t < birth {
        return Err(Error::TimeBeforeBirth { t, birth });
    }
    Ok(epsilon * (-foi.cumulative_hazard(t, t - birth)?).exp())
}

fn check_domain(foi: &ForceOfInfection, bx: &SmoothedBox) -> Result<()> {
    if let Some(max) = foi.max_age() {
        let (_, a1) = bx.age_support();
        if a1 > max {
            return Err(Error::AgeOutOfDomain { age: a1, lo: 0.0, hi: max });
        }
    }
    Ok(())
}

/// Deterministic cohort observable `∫ Σ_i Ψ(t, t - x_i) m_i(t) dt`.
///
/// Each cohort's contribution is integrated separately over the times at
/// which it sits inside the box, with panel breaks wherever the box's
/// trapezoids or the hazard's age breakpoints are crossed.
pub fn p_cohort_det(foi: &ForceOfInfection, grid: &CohortGrid, bx: &SmoothedBox) -> Result<f64> {
    grid.check_covers(bx)?;
    check_domain(foi, bx)?;
    let (t0, t1) = bx.time_support();
    let (a0, a1) = bx.age_support();
    let t_kinks = bx.time().kinks();
    let a_kinks = bx.age().kinks();

    let (b0, b1) = birth_band(bx);
    let first = ((b0 / grid.epsilon()).ceil() as i64).max(grid.first);
    let last = ((b1 / grid.epsilon()).floor() as i64).min(grid.last);

    let mut total = 0.0;
    for i in first..=last {
        let x = grid.birth_time(i);
        let lo = t0.max(x + a0);
        let hi = t1.min(x + a1);
        if hi <= lo {
            continue;
        }
        let extra = t_kinks
            .iter()
            .copied()
            .chain(a_kinks.iter().map(|k| x + k))
            .chain(foi.age_kinks().iter().map(|k| x + k));
        let knots = knots_within(lo, hi, extra);
        let eps = grid.epsilon();
        total += integrate_panels(
            |t| {
                let age = (t - x).max(0.0);
                let w = bx.density(t, age);
                if w == 0.0 {
                    return Ok(0.0);
                }
                Ok(w * eps * (-foi.cumulative_hazard_unchecked(t, age)).exp())
            },
            &knots,
            COHORT_QUAD_TOL,
        )?;
    }
    Ok(total)
}

/// Sum over cohorts present at time `t` of `ψ_a(t - x_i) m_i(t)`, i.e. the
/// cohort integrand divided by the time marginal of the box.
#[inline]
pub(crate) fn cohort_slice(foi: &ForceOfInfection, grid: &CohortGrid, bx: &SmoothedBox, t: f64) -> f64 {
    let (a0, a1) = bx.age_support();
    let eps = grid.epsilon();
    let mut acc = 0.0;
    for i in grid.aged_between(t, a0, a1) {
        let age = t - grid.birth_time(i);
        let w = bx.age().density(age);
        if w > 0.0 {
            acc += w * eps * (-foi.cumulative_hazard_unchecked(t, age)).exp();
        }
    }
    acc
}

/// Unbiased Monte Carlo estimate of [`p_cohort_det`] from `m` draws of the
/// time marginal, importance-weighted by that marginal's density.
pub fn p_cohort_mc<R: Rng + ?Sized>(
    foi: &ForceOfInfection,
    grid: &CohortGrid,
    bx: &SmoothedBox,
    m: usize,
    rng: &mut R,
) -> Result<f64> {
    grid.check_covers(bx)?;
    check_domain(foi, bx)?;
    if m == 0 {
        return Err(Error::InvalidParameter("need at least one draw".into()));
    }
    Ok(p_cohort_mc_unchecked(foi, grid, bx, m, rng))
}

#[inline]
pub(crate) fn p_cohort_mc_unchecked<R: Rng + ?Sized>(
    foi: &ForceOfInfection,
    grid: &CohortGrid,
    bx: &SmoothedBox,
    m: usize,
    rng: &mut R,
) -> f64 {
    let mut acc = 0.0;
    for _ in 0..m {
        let t = bx.time().sample(rng);
        acc += cohort_slice(foi, grid, bx, t);
    }
    acc / m as f64
}
