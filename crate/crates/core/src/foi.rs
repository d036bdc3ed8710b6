//! Force-of-infection models and the exact susceptible fraction.
//!
//! The susceptible fraction solves `q_t + q_a = -λ(t, a) q` with `q(t, 0) = 1`.
//! Along the characteristic of an individual born at `b = t - a` this is an
//! ODE in age, so `q(t, a) = exp(-H(t, a))` with the cumulative hazard
//! `H(t, a) = ∫_0^a λ(b + s, s) ds`. Every model here has a separable,
//! sinusoidal-in-time rate, which makes `H` available in closed form.

use std::f64::consts::TAU;

use crate::error::{Error, Result};

/// Scale of the toy hazard, per year.
pub const TOY_AMPLITUDE: f64 = 20.0;
/// Vertical offset of the toy hazard's sine.
pub const TOY_OFFSET: f64 = 1.1;

/// Unknown parameters of a force-of-infection model.
#[derive(Debug, Clone, PartialEq)]
pub enum ParameterVector {
    /// Single angular frequency of the toy hazard.
    Toy { gamma: f64 },
    /// Age-group levels and the temporal sine (frequency, phase, shift).
    AgeModulated {
        alphas: Vec<f64>,
        gamma1: f64,
        gamma2: f64,
        gamma3: f64,
    },
}

impl ParameterVector {
    pub fn validate(&self) -> Result<()> {
        match self {
            ParameterVector::Toy { gamma } => {
                if !(gamma.is_finite() && *gamma > 0.0) {
                    return Err(Error::InvalidParameter(format!("gamma must be > 0, got {gamma}")));
                }
            }
            ParameterVector::AgeModulated {
                alphas,
                gamma1,
                gamma2,
                gamma3,
            } => {
                if alphas.is_empty() {
                    return Err(Error::InvalidParameter("at least one age level required".into()));
                }
                if let Some(a) = alphas.iter().find(|a| !(a.is_finite() && **a > 0.0)) {
                    return Err(Error::InvalidParameter(format!("alpha must be > 0, got {a}")));
                }
                if !(gamma1.is_finite() && *gamma1 > 0.0) {
                    return Err(Error::InvalidParameter(format!("gamma1 must be > 0, got {gamma1}")));
                }
                if !(0.0..TAU).contains(gamma2) {
                    return Err(Error::InvalidParameter(format!(
                        "gamma2 must lie in [0, 2π), got {gamma2}"
                    )));
                }
                if !(gamma3.is_finite() && *gamma3 > 0.0) {
                    return Err(Error::InvalidParameter(format!("gamma3 must be > 0, got {gamma3}")));
                }
            }
        }
        Ok(())
    }
}

/// Piecewise-constant-in-age, sinusoidal-in-time hazard
/// `λ(t, a) = α_i (sin(γ1 (t - t0) + γ2) + 1 + γ3)` for `a ∈ (a_{i-1}, a_i]`.
///
/// Cumulative sums of the level and of `α cos(γ1 s)`, `α sin(γ1 s)` at each
/// breakpoint are cached so a hazard evaluation costs two `sin_cos` calls.
#[derive(Debug, Clone, PartialEq)]
pub struct AgeModulated {
    breakpoints: Vec<f64>,
    alphas: Vec<f64>,
    gamma1: f64,
    gamma2: f64,
    gamma3: f64,
    time_origin: f64,
    cum_level: Vec<f64>,
    cum_cos: Vec<f64>,
    cum_sin: Vec<f64>,
    bp_cos: Vec<f64>,
    bp_sin: Vec<f64>,
}

impl AgeModulated {
    /// `breakpoints` are `a_0 = 0 < a_1 < ... < a_k`; `alphas` has `k` entries.
    pub fn new(
        breakpoints: Vec<f64>,
        alphas: Vec<f64>,
        gamma1: f64,
        gamma2: f64,
        gamma3: f64,
        time_origin: f64,
    ) -> Result<Self> {
        ParameterVector::AgeModulated {
            alphas: alphas.clone(),
            gamma1,
            gamma2,
            gamma3,
        }
        .validate()?;
        validate_breakpoints(&breakpoints)?;
        if breakpoints.len() != alphas.len() + 1 {
            return Err(Error::InvalidParameter(format!(
                "{} breakpoints need {} levels, got {}",
                breakpoints.len(),
                breakpoints.len() - 1,
                alphas.len()
            )));
        }
        if !time_origin.is_finite() {
            return Err(Error::InvalidParameter("time origin must be finite".into()));
        }

        let (bp_sin, bp_cos): (Vec<f64>, Vec<f64>) =
            breakpoints.iter().map(|&a| (gamma1 * a).sin_cos()).unzip();
        let k = alphas.len();
        let mut cum_level = vec![0.0; k + 1];
        let mut cum_cos = vec![0.0; k + 1];
        let mut cum_sin = vec![0.0; k + 1];
        for i in 0..k {
            let alpha = alphas[i];
            cum_level[i + 1] = cum_level[i] + alpha * (breakpoints[i + 1] - breakpoints[i]);
            cum_cos[i + 1] = cum_cos[i] + alpha * (bp_cos[i + 1] - bp_cos[i]);
            cum_sin[i + 1] = cum_sin[i] + alpha * (bp_sin[i + 1] - bp_sin[i]);
        }

        Ok(AgeModulated {
            breakpoints,
            alphas,
            gamma1,
            gamma2,
            gamma3,
            time_origin,
            cum_level,
            cum_cos,
            cum_sin,
            bp_cos,
            bp_sin,
        })
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn params(&self) -> ParameterVector {
        ParameterVector::AgeModulated {
            alphas: self.alphas.clone(),
            gamma1: self.gamma1,
            gamma2: self.gamma2,
            gamma3: self.gamma3,
        }
    }

    pub fn time_origin(&self) -> f64 {
        self.time_origin
    }

    fn check_age(&self, a: f64) -> Result<()> {
        let hi = self.breakpoints[self.breakpoints.len() - 1];
        if a.is_nan() || a < self.breakpoints[0] || a > hi {
            return Err(Error::AgeOutOfDomain {
                age: a,
                lo: self.breakpoints[0],
                hi,
            });
        }
        Ok(())
    }

    /// Index of the group containing `a`, groups being `(a_{i-1}, a_i]` with
    /// the first one closed at `a_0`.
    fn group(&self, a: f64) -> usize {
        let k = self.alphas.len();
        // partition_point over interior breakpoints a_1..a_{k-1}
        self.breakpoints[1..k].partition_point(|&bp| bp < a)
    }

    fn level(&self, a: f64) -> f64 {
        self.alphas[self.group(a)]
    }

    fn temporal(&self, t: f64) -> f64 {
        (self.gamma1 * (t - self.time_origin) + self.gamma2).sin() + 1.0 + self.gamma3
    }

    fn hazard(&self, t: f64, a: f64) -> f64 {
        let i = self.group(a);
        let alpha = self.alphas[i];
        let s0 = self.breakpoints[i];
        let level = self.cum_level[i] + alpha * (a - s0);
        let (sa, ca) = (self.gamma1 * a).sin_cos();
        let cc = self.cum_cos[i] + alpha * (ca - self.bp_cos[i]);
        let cs = self.cum_sin[i] + alpha * (sa - self.bp_sin[i]);
        let phase = self.gamma1 * (t - a - self.time_origin) + self.gamma2;
        let (sp, cp) = phase.sin_cos();
        (1.0 + self.gamma3) * level - (cp * cc - sp * cs) / self.gamma1
    }
}

fn validate_breakpoints(bp: &[f64]) -> Result<()> {
    if bp.len() < 2 {
        return Err(Error::InvalidParameter("need at least two age breakpoints".into()));
    }
    if bp[0] != 0.0 {
        return Err(Error::InvalidParameter(format!(
            "first age breakpoint must be 0 (birth), got {}",
            bp[0]
        )));
    }
    if bp.windows(2).any(|w| !(w[1] > w[0]) || !w[1].is_finite()) {
        return Err(Error::InvalidParameter("age breakpoints must be strictly increasing".into()));
    }
    Ok(())
}

/// An evaluable hazard `λ(t, a)` with closed-form cumulative hazard along
/// characteristics.
#[derive(Debug, Clone, PartialEq)]
pub enum ForceOfInfection {
    /// `λ ≡ rate`; used for degenerate and analytic checks.
    Constant { rate: f64 },
    /// `λ(t, a) = amplitude (sin(γ t) + offset)`.
    Toy {
        gamma: f64,
        amplitude: f64,
        offset: f64,
    },
    AgeModulated(AgeModulated),
}

impl ForceOfInfection {
    /// Toy hazard `20 (sin(γ t) + 1.1)`.
    pub fn toy(gamma: f64) -> Result<Self> {
        ParameterVector::Toy { gamma }.validate()?;
        Ok(ForceOfInfection::Toy {
            gamma,
            amplitude: TOY_AMPLITUDE,
            offset: TOY_OFFSET,
        })
    }

    pub fn constant(rate: f64) -> Result<Self> {
        if !(rate.is_finite() && rate >= 0.0) {
            return Err(Error::InvalidParameter(format!("rate must be >= 0, got {rate}")));
        }
        Ok(ForceOfInfection::Constant { rate })
    }

    /// Largest admissible age, if the model is bounded in age.
    pub fn max_age(&self) -> Option<f64> {
        match self {
            ForceOfInfection::AgeModulated(m) => Some(m.breakpoints[m.breakpoints.len() - 1]),
            _ => None,
        }
    }

    /// Ages at which `λ` jumps; `q` has a kink across them.
    pub fn age_kinks(&self) -> &[f64] {
        match self {
            ForceOfInfection::AgeModulated(m) => &m.breakpoints,
            _ => &[],
        }
    }

    fn check_age(&self, a: f64) -> Result<()> {
        match self {
            ForceOfInfection::AgeModulated(m) => m.check_age(a),
            _ if a.is_nan() || a < 0.0 => Err(Error::AgeOutOfDomain {
                age: a,
                lo: 0.0,
                hi: f64::INFINITY,
            }),
            _ => Ok(()),
        }
    }

    /// Hazard rate at calendar time `t` and age `a`.
    pub fn eval(&self, t: f64, a: f64) -> Result<f64> {
        self.check_age(a)?;
        Ok(match self {
            ForceOfInfection::Constant { rate } => *rate,
            ForceOfInfection::Toy {
                gamma,
                amplitude,
                offset,
            } => amplitude * ((gamma * t).sin() + offset),
            ForceOfInfection::AgeModulated(m) => m.level(a) * m.temporal(t),
        })
    }

    /// `H(t, a) = ∫_0^a λ(t - a + s, s) ds`, integrated analytically per age
    /// segment.
    pub fn cumulative_hazard(&self, t: f64, a: f64) -> Result<f64> {
        self.check_age(a)?;
        Ok(self.cumulative_hazard_unchecked(t, a))
    }

    /// Same as [`cumulative_hazard`](Self::cumulative_hazard) for an age the
    /// caller already knows to be in the domain.
    #[inline]
    pub(crate) fn cumulative_hazard_unchecked(&self, t: f64, a: f64) -> f64 {
        match self {
            ForceOfInfection::Constant { rate } => rate * a,
            ForceOfInfection::Toy {
                gamma,
                amplitude,
                offset,
            } => amplitude * (offset * a - ((gamma * t).cos() - (gamma * (t - a)).cos()) / gamma),
            ForceOfInfection::AgeModulated(m) => m.hazard(t, a),
        }
    }

    /// `log q(t, a) = -H(t, a)`.
    pub fn log_q(&self, t: f64, a: f64) -> Result<f64> {
        Ok(-self.cumulative_hazard(t, a)?)
    }

    /// Exact susceptible fraction `q(t, a) = exp(-H(t, a))`.
    pub fn q_exact(&self, t: f64, a: f64) -> Result<f64> {
        Ok((-self.cumulative_hazard(t, a)?).exp())
    }

    /// Period in `t` of the hazard, when it is time-varying.
    pub fn period(&self) -> Option<f64> {
        match self {
            ForceOfInfection::Constant { .. } => None,
            ForceOfInfection::Toy { gamma, .. } => Some(TAU / gamma),
            ForceOfInfection::AgeModulated(m) => Some(TAU / m.gamma1),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn varicella_like() -> ForceOfInfection {
        ForceOfInfection::AgeModulated(
            AgeModulated::new(
                vec![0.0, 3.0, 7.0, 15.0, 21.0],
                vec![0.08, 0.15, 0.10, 0.05],
                1.8,
                1.0,
                0.5,
                2000.0,
            )
            .unwrap(),
        )
    }

    /// Composite Simpson along the characteristic, split at age breakpoints.
    fn hazard_by_simpson(foi: &ForceOfInfection, t: f64, a: f64) -> f64 {
        let mut knots = vec![0.0];
        knots.extend(foi.age_kinks().iter().copied().filter(|&k| k > 0.0 && k < a));
        knots.push(a);
        let b = t - a;
        knots
            .windows(2)
            .map(|w| {
                let n = 2000;
                let h = (w[1] - w[0]) / n as f64;
                // sample just inside the segment so the group is unambiguous
                let f = |s: f64| {
                    let s = s.clamp(w[0] + 1e-13, w[1] - 1e-13);
                    foi.eval(b + s, s).unwrap()
                };
                let mut acc = f(w[0]) + f(w[1]);
                for j in 1..n {
                    let s = w[0] + j as f64 * h;
                    acc += if j % 2 == 1 { 4.0 } else { 2.0 } * f(s);
                }
                acc * h / 3.0
            })
            .sum()
    }

    #[test]
    fn toy_eval_examples() {
        let foi = ForceOfInfection::toy(PI).unwrap();
        assert!((foi.eval(2.0, 7.0).unwrap() - 22.0).abs() < 1e-12);
        assert!((foi.eval(0.5, 1.0).unwrap() - 42.0).abs() < 1e-12);
    }

    #[test]
    fn age_modulated_eval_at_sine_zero() {
        let m = AgeModulated::new(vec![0.0, 3.0, 7.0], vec![0.1, 0.2], 2.0, 0.5, 0.5, 0.0).unwrap();
        let foi = ForceOfInfection::AgeModulated(m);
        // sin(2 t + 0.5) = 0 at t = -0.25
        let t = -0.25;
        assert!((foi.eval(t, 2.0).unwrap() - 0.15).abs() < 1e-15);
        assert!((foi.eval(t, 3.0).unwrap() - 0.15).abs() < 1e-15);
        assert!((foi.eval(t, 3.5).unwrap() - 0.30).abs() < 1e-15);
        assert!((foi.eval(t, 0.0).unwrap() - 0.15).abs() < 1e-15);
    }

    #[test]
    fn out_of_domain_ages() {
        let foi = varicella_like();
        assert!(matches!(foi.eval(2000.0, 21.5), Err(Error::AgeOutOfDomain { .. })));
        assert!(matches!(foi.q_exact(2000.0, -0.1), Err(Error::AgeOutOfDomain { .. })));
        let toy = ForceOfInfection::toy(1.0).unwrap();
        assert!(toy.cumulative_hazard(0.0, -1e-9).is_err());
        assert!(toy.cumulative_hazard(0.0, 1e6).is_ok());
    }

    #[test]
    fn zero_age_is_susceptible() {
        for foi in [varicella_like(), ForceOfInfection::toy(2.3).unwrap()] {
            for t in [-3.0, 0.0, 1.7, 2003.2] {
                assert_eq!(foi.cumulative_hazard(t, 0.0).unwrap(), 0.0);
                assert_eq!(foi.q_exact(t, 0.0).unwrap(), 1.0);
            }
        }
    }

    #[test]
    fn toy_full_period_hazard() {
        let foi = ForceOfInfection::toy(PI).unwrap();
        for t in [0.0, 0.3, 5.1] {
            assert!((foi.cumulative_hazard(t, 2.0).unwrap() - 44.0).abs() < 1e-12);
        }
    }

    #[test]
    fn toy_matches_closed_form() {
        let foi = ForceOfInfection::toy(PI).unwrap();
        let (a, t) = (0.5, 3.0);
        let expected = (-20.0 * (1.1 * a - (1.0 / PI) * ((3.0 * PI).cos() - (2.5 * PI).cos()))).exp();
        assert_eq!(foi.q_exact(t, a).unwrap(), expected);
    }

    #[test]
    fn hazard_matches_simpson_across_breakpoints() {
        let foi = varicella_like();
        for &(t, a) in &[(2001.3, 4.2), (2004.9, 19.5), (2000.0, 2.9), (2002.5, 15.0)] {
            let h = foi.cumulative_hazard(t, a).unwrap();
            let s = hazard_by_simpson(&foi, t, a);
            assert!((h - s).abs() < 1e-10, "t={t} a={a}: {h} vs {s}");
        }
    }

    #[test]
    fn periodic_in_time() {
        let foi = varicella_like();
        let p = foi.period().unwrap();
        for &(t, a) in &[(2001.3, 4.2), (2003.0, 12.0)] {
            let q0 = foi.q_exact(t, a).unwrap();
            let q1 = foi.q_exact(t + p, a).unwrap();
            assert!((q0 - q1).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(ForceOfInfection::toy(0.0).is_err());
        assert!(AgeModulated::new(vec![0.0, 1.0], vec![-0.1], 1.0, 0.0, 1.0, 0.0).is_err());
        assert!(AgeModulated::new(vec![0.0, 1.0], vec![0.1], 1.0, 7.0, 1.0, 0.0).is_err());
        assert!(AgeModulated::new(vec![1.0, 3.0], vec![0.1], 1.0, 0.0, 1.0, 0.0).is_err());
        assert!(AgeModulated::new(vec![0.0, 3.0, 2.0], vec![0.1, 0.1], 1.0, 0.0, 1.0, 0.0).is_err());
        assert!(AgeModulated::new(vec![0.0, 3.0], vec![0.1, 0.1], 1.0, 0.0, 1.0, 0.0).is_err());
    }
}
