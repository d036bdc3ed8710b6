//! Binomial data model, priors, the reference observable and its unbiased
//! Monte Carlo estimators.

use std::f64::consts::TAU;

use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::cohort::{p_cohort_mc_unchecked, CohortGrid};
use crate::design::SmoothedBox;
use crate::error::{Error, Result};
use crate::foi::{AgeModulated, ForceOfInfection};
use crate::quadrature::{integrate_panels, knots_within};

/// Absolute tolerance of [`p_reference`].
pub const REFERENCE_TOL: f64 = 1e-10;

/// One aggregated subsample: `n` people tested with density `bx`, `y` of
/// them susceptible (seronegative).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Subsample {
    pub bx: SmoothedBox,
    pub n: u32,
    pub y: u32,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SeroDataset {
    subsamples: Vec<Subsample>,
}

impl SeroDataset {
    pub fn new(subsamples: Vec<Subsample>) -> Result<Self> {
        for (j, s) in subsamples.iter().enumerate() {
            if s.n == 0 {
                return Err(Error::InvalidDataset(format!("subsample {j} has no tested individuals")));
            }
            if s.y > s.n {
                return Err(Error::InvalidDataset(format!(
                    "subsample {j}: {} successes out of {}",
                    s.y, s.n
                )));
            }
            if subsamples[..j].iter().any(|o| o.bx == s.bx) {
                return Err(Error::InvalidDataset(format!("subsample {j} duplicates an earlier box")));
            }
        }
        Ok(SeroDataset { subsamples })
    }

    pub fn empty() -> Self {
        SeroDataset::default()
    }

    pub fn subsamples(&self) -> &[Subsample] {
        &self.subsamples
    }

    pub fn len(&self) -> usize {
        self.subsamples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subsamples.is_empty()
    }

    pub fn total_tested(&self) -> u64 {
        self.subsamples.iter().map(|s| s.n as u64).sum()
    }

    /// Keep subsamples matching `keep`.
    pub fn filter(&self, keep: impl Fn(&Subsample) -> bool) -> SeroDataset {
        SeroDataset {
            subsamples: self.subsamples.iter().copied().filter(|s| keep(s)).collect(),
        }
    }
}

/// Prior for a single parameter component.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Prior {
    /// Rate parameterization: density `rate · exp(-rate x)` on `x ≥ 0`.
    Exponential { rate: f64 },
    Uniform { lo: f64, hi: f64 },
    /// Uniform on `[0, 2π)`.
    UniformAngle,
}

impl Prior {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Prior::Exponential { rate } if !(rate.is_finite() && rate > 0.0) => {
                Err(Error::InvalidParameter(format!("exponential rate must be > 0, got {rate}")))
            }
            Prior::Uniform { lo, hi } if !(lo.is_finite() && hi.is_finite() && lo < hi) => {
                Err(Error::InvalidParameter(format!("uniform prior needs lo < hi, got [{lo}, {hi}]")))
            }
            _ => Ok(()),
        }
    }

    pub fn log_density(&self, x: f64) -> f64 {
        match *self {
            Prior::Exponential { rate } => {
                if x >= 0.0 {
                    rate.ln() - rate * x
                } else {
                    f64::NEG_INFINITY
                }
            }
            Prior::Uniform { lo, hi } => {
                if (lo..=hi).contains(&x) {
                    -(hi - lo).ln()
                } else {
                    f64::NEG_INFINITY
                }
            }
            Prior::UniformAngle => {
                if (0.0..TAU).contains(&x) {
                    -TAU.ln()
                } else {
                    f64::NEG_INFINITY
                }
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Prior::Exponential { rate } => Exp::new(rate).expect("validated rate").sample(rng),
            Prior::Uniform { lo, hi } => lo + (hi - lo) * rng.random::<f64>(),
            Prior::UniformAngle => TAU * rng.random::<f64>(),
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            Prior::Exponential { rate } => 1.0 / rate,
            Prior::Uniform { lo, hi } => 0.5 * (lo + hi),
            Prior::UniformAngle => std::f64::consts::PI,
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            Prior::Exponential { rate } => 1.0 / (rate * rate),
            Prior::Uniform { lo, hi } => (hi - lo).powi(2) / 12.0,
            Prior::UniformAngle => TAU * TAU / 12.0,
        }
    }

    /// Cumulative distribution function, for goodness-of-fit checks.
    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            Prior::Exponential { rate } => {
                if x <= 0.0 {
                    0.0
                } else {
                    -(-rate * x).exp_m1()
                }
            }
            Prior::Uniform { lo, hi } => ((x - lo) / (hi - lo)).clamp(0.0, 1.0),
            Prior::UniformAngle => (x / TAU).clamp(0.0, 1.0),
        }
    }
}

/// Independent per-component priors.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorSpec(pub Vec<Prior>);

impl PriorSpec {
    pub fn validate(&self) -> Result<()> {
        self.0.iter().try_for_each(Prior::validate)
    }

    pub fn log_prior(&self, theta: &[f64]) -> f64 {
        if theta.len() != self.0.len() {
            return f64::NEG_INFINITY;
        }
        self.0.iter().zip(theta).map(|(p, &x)| p.log_density(x)).sum()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.0.iter().map(|p| p.sample(rng)).collect()
    }
}

/// Free function form of [`PriorSpec::log_prior`].
pub fn log_prior(theta: &[f64], spec: &PriorSpec) -> f64 {
    spec.log_prior(theta)
}

/// Maps a flat parameter vector to a force of infection.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelSpec {
    /// `θ = [γ]`.
    Toy,
    /// `θ = [α_1, …, α_k, γ1, γ2, γ3]`.
    AgeModulated { breakpoints: Vec<f64>, time_origin: f64 },
}

impl ModelSpec {
    pub fn dim(&self) -> usize {
        match self {
            ModelSpec::Toy => 1,
            ModelSpec::AgeModulated { breakpoints, .. } => breakpoints.len() - 1 + 3,
        }
    }

    pub fn param_names(&self) -> Vec<String> {
        match self {
            ModelSpec::Toy => vec!["gamma".into()],
            ModelSpec::AgeModulated { breakpoints, .. } => (1..breakpoints.len())
                .map(|i| format!("alpha{i}"))
                .chain(["gamma1".into(), "gamma2".into(), "gamma3".into()])
                .collect(),
        }
    }

    /// Component that is an angle on `[0, 2π)`.
    pub fn angle_index(&self) -> Option<usize> {
        match self {
            ModelSpec::Toy => None,
            ModelSpec::AgeModulated { breakpoints, .. } => Some(breakpoints.len() - 1 + 1),
        }
    }

    pub fn default_prior(&self) -> PriorSpec {
        match self {
            ModelSpec::Toy => PriorSpec(vec![Prior::Uniform { lo: 0.0, hi: 5.0 }]),
            ModelSpec::AgeModulated { breakpoints, .. } => {
                let mut p = vec![Prior::Exponential { rate: 10.0 }; breakpoints.len() - 1];
                p.extend([
                    Prior::Exponential { rate: 0.8 },
                    Prior::UniformAngle,
                    Prior::Exponential { rate: 1.0 },
                ]);
                PriorSpec(p)
            }
        }
    }

    pub fn foi(&self, theta: &[f64]) -> Result<ForceOfInfection> {
        if theta.len() != self.dim() {
            return Err(Error::InvalidParameter(format!(
                "expected {} parameters, got {}",
                self.dim(),
                theta.len()
            )));
        }
        match self {
            ModelSpec::Toy => ForceOfInfection::toy(theta[0]),
            ModelSpec::AgeModulated {
                breakpoints,
                time_origin,
            } => {
                let k = breakpoints.len() - 1;
                Ok(ForceOfInfection::AgeModulated(AgeModulated::new(
                    breakpoints.clone(),
                    theta[..k].to_vec(),
                    theta[k],
                    theta[k + 1],
                    theta[k + 2],
                    *time_origin,
                )?))
            }
        }
    }
}

/// How the per-subsample probability is estimated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Solver {
    /// Draws `(T, A) ~ Ψ` and averages the exact `q`.
    Exact,
    /// Draws `T` from the time marginal and averages the cohort sum.
    Cohort { epsilon: f64 },
}

fn check_box_domain(foi: &ForceOfInfection, bx: &SmoothedBox) -> Result<()> {
    if let Some(max) = foi.max_age() {
        let (_, a1) = bx.age_support();
        if a1 > max {
            return Err(Error::AgeOutOfDomain { age: a1, lo: 0.0, hi: max });
        }
    }
    Ok(())
}

/// `p = ∫∫ Ψ(t, a) q(t, a) da dt` by nested adaptive quadrature, with panel
/// breaks at the trapezoid kinks and the hazard's age breakpoints.
pub fn p_reference(foi: &ForceOfInfection, bx: &SmoothedBox) -> Result<f64> {
    check_box_domain(foi, bx)?;
    let (t0, t1) = bx.time_support();
    let (a0, a1) = bx.age_support();
    let t_knots = bx.time().kinks();
    let a_knots = knots_within(a0, a1, bx.age().kinks().into_iter().chain(foi.age_kinks().iter().copied()));
    let inner_tol = 0.1 * REFERENCE_TOL / (t1 - t0);
    let age = *bx.age();
    let time = *bx.time();
    integrate_panels(
        |t| {
            let wt = time.density(t);
            if wt == 0.0 {
                return Ok(0.0);
            }
            let inner = integrate_panels(
                |a| Ok(age.density(a) * (-foi.cumulative_hazard_unchecked(t, a)).exp()),
                &a_knots,
                inner_tol / wt.max(1e-300),
            )?;
            Ok(wt * inner)
        },
        &t_knots,
        0.9 * REFERENCE_TOL,
    )
}

/// `log` of the mean of `q` over `m` draws from `bx`, accumulated as a
/// streaming log-sum-exp of the exponents `-H`.
pub fn log_p_hat<R: Rng + ?Sized>(foi: &ForceOfInfection, bx: &SmoothedBox, m: usize, rng: &mut R) -> Result<f64> {
    check_box_domain(foi, bx)?;
    if m == 0 {
        return Err(Error::InvalidParameter("need at least one draw".into()));
    }
    Ok(log_p_hat_unchecked(foi, bx, m, rng))
}

#[inline]
fn log_p_hat_unchecked<R: Rng + ?Sized>(foi: &ForceOfInfection, bx: &SmoothedBox, m: usize, rng: &mut R) -> f64 {
    let mut max = f64::NEG_INFINITY;
    let mut sum = 0.0;
    for _ in 0..m {
        let (t, a) = bx.sample_one(rng);
        let x = -foi.cumulative_hazard_unchecked(t, a);
        if x <= max {
            sum += (x - max).exp();
        } else {
            sum = sum * (max - x).exp() + 1.0;
            max = x;
        }
    }
    max + (sum / m as f64).ln()
}

/// `log(1 - p)` from `log p`; `-∞` when `p ≥ 1`.
#[inline]
fn log1m_exp(log_p: f64) -> f64 {
    if log_p >= 0.0 {
        f64::NEG_INFINITY
    } else if log_p > -std::f64::consts::LN_2 {
        (-log_p.exp_m1()).ln()
    } else {
        (-log_p.exp()).ln_1p()
    }
}

#[inline]
fn log_estimate<R: Rng + ?Sized>(
    foi: &ForceOfInfection,
    bx: &SmoothedBox,
    m: usize,
    solver: &ResolvedSolver,
    rng: &mut R,
) -> f64 {
    match solver {
        ResolvedSolver::Exact => log_p_hat_unchecked(foi, bx, m, rng),
        ResolvedSolver::Cohort(grid) => p_cohort_mc_unchecked(foi, grid, bx, m, rng).ln(),
    }
}

/// Solver with its cohort grid already sized for a dataset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ResolvedSolver {
    Exact,
    Cohort(CohortGrid),
}

impl ResolvedSolver {
    pub fn for_dataset(solver: Solver, dataset: &SeroDataset) -> Result<Self> {
        match solver {
            Solver::Exact => Ok(ResolvedSolver::Exact),
            Solver::Cohort { epsilon } => {
                if dataset.is_empty() {
                    return Ok(ResolvedSolver::Cohort(CohortGrid::new(epsilon, 0, 0)?));
                }
                let grid = CohortGrid::covering(epsilon, dataset.subsamples().iter().map(|s| &s.bx))?;
                Ok(ResolvedSolver::Cohort(grid))
            }
        }
    }

    /// Every log-term is `≤ 0` only for the exact solver; the cohort
    /// estimate can exceed one.
    fn terms_nonpositive(&self) -> bool {
        matches!(self, ResolvedSolver::Exact)
    }
}

/// Sum over individuals of `log p̂` (susceptible) or `log(1 - p̂)` (infected),
/// with an independent `m`-draw estimate per individual. Returns `None` as
/// soon as the partial sum falls below `floor`, which is only possible to
/// decide early when every term is nonpositive.
fn log_likelihood_terms<R: Rng + ?Sized>(
    foi: &ForceOfInfection,
    dataset: &SeroDataset,
    m: usize,
    solver: &ResolvedSolver,
    floor: f64,
    rng: &mut R,
) -> Option<f64> {
    let early = solver.terms_nonpositive();
    let mut total = 0.0;
    for s in dataset.subsamples() {
        for i in 0..s.n {
            let lp = log_estimate(foi, &s.bx, m, solver, rng);
            total += if i < s.y { lp } else { log1m_exp(lp) };
            if early && !(total >= floor) {
                return None;
            }
        }
    }
    (total >= floor).then_some(total)
}

/// Unbiased likelihood estimate on the log scale. `-∞` signals a certain
/// rejection (some `1 - p̂ ≤ 0`).
pub fn log_likelihood_hat<R: Rng + ?Sized>(
    model: &ModelSpec,
    theta: &[f64],
    dataset: &SeroDataset,
    m: usize,
    rng: &mut R,
    solver: Solver,
) -> Result<f64> {
    let foi = model.foi(theta)?;
    for s in dataset.subsamples() {
        check_box_domain(&foi, &s.bx)?;
    }
    if m == 0 {
        return Err(Error::InvalidParameter("need at least one draw".into()));
    }
    let solver = ResolvedSolver::for_dataset(solver, dataset)?;
    Ok(log_likelihood_terms(&foi, dataset, m, &solver, f64::NEG_INFINITY, rng).unwrap_or(f64::NEG_INFINITY))
}

/// Exact binomial log-likelihood (up to the binomial coefficients) from
/// reference probabilities.
pub fn log_likelihood_reference(foi: &ForceOfInfection, dataset: &SeroDataset) -> Result<f64> {
    let mut total = 0.0;
    for s in dataset.subsamples() {
        let p = p_reference(foi, &s.bx)?;
        total += s.y as f64 * p.ln();
        if s.n > s.y {
            total += (s.n - s.y) as f64 * (-p).ln_1p();
        }
    }
    Ok(total)
}

/// Posterior ingredients for the samplers: model, prior, data and
/// estimator settings.
#[derive(Debug, Clone)]
pub struct SeroModel {
    pub model: ModelSpec,
    pub prior: PriorSpec,
    pub dataset: SeroDataset,
    pub m: usize,
    solver: ResolvedSolver,
}

impl SeroModel {
    pub fn new(model: ModelSpec, prior: PriorSpec, dataset: SeroDataset, m: usize, solver: Solver) -> Result<Self> {
        prior.validate()?;
        if prior.0.len() != model.dim() {
            return Err(Error::InvalidParameter(format!(
                "model has {} parameters but {} priors were given",
                model.dim(),
                prior.0.len()
            )));
        }
        if m == 0 {
            return Err(Error::InvalidParameter("need at least one draw".into()));
        }
        if let ModelSpec::AgeModulated { breakpoints, .. } = &model {
            let max = breakpoints[breakpoints.len() - 1];
            if let Some(s) = dataset.subsamples().iter().find(|s| s.bx.age_support().1 > max) {
                return Err(Error::AgeOutOfDomain {
                    age: s.bx.age_support().1,
                    lo: 0.0,
                    hi: max,
                });
            }
        }
        let solver = ResolvedSolver::for_dataset(solver, &dataset)?;
        Ok(SeroModel {
            model,
            prior,
            dataset,
            m,
            solver,
        })
    }

    pub fn solver(&self) -> &ResolvedSolver {
        &self.solver
    }
}

/// Target of a pseudo-marginal sampler: a prior density and a positive,
/// unbiased likelihood estimator, both on the log scale.
pub trait Target: Sync {
    fn dim(&self) -> usize;

    fn log_prior(&self, theta: &[f64]) -> f64;

    fn log_likelihood_hat<R: Rng + ?Sized>(&self, theta: &[f64], rng: &mut R) -> f64;

    /// The estimate if it is at least `floor`, `None` otherwise. Targets
    /// whose estimate is a sum of nonpositive terms can stop early.
    fn log_likelihood_hat_above<R: Rng + ?Sized>(&self, theta: &[f64], floor: f64, rng: &mut R) -> Option<f64> {
        let v = self.log_likelihood_hat(theta, rng);
        (v >= floor).then_some(v)
    }

    /// Map a proposal back onto the parameter space (e.g. wrap angles).
    fn wrap(&self, _theta: &mut [f64]) {}
}

impl Target for SeroModel {
    fn dim(&self) -> usize {
        self.model.dim()
    }

    fn log_prior(&self, theta: &[f64]) -> f64 {
        self.prior.log_prior(theta)
    }

    fn log_likelihood_hat<R: Rng + ?Sized>(&self, theta: &[f64], rng: &mut R) -> f64 {
        self.log_likelihood_hat_above(theta, f64::NEG_INFINITY, rng)
            .unwrap_or(f64::NEG_INFINITY)
    }

    fn log_likelihood_hat_above<R: Rng + ?Sized>(&self, theta: &[f64], floor: f64, rng: &mut R) -> Option<f64> {
        let foi = self.model.foi(theta).ok()?;
        log_likelihood_terms(&foi, &self.dataset, self.m, &self.solver, floor, rng)
    }

    fn wrap(&self, theta: &mut [f64]) {
        if let Some(i) = self.model.angle_index() {
            theta[i] = theta[i].rem_euclid(TAU);
            if theta[i] >= TAU {
                theta[i] = 0.0;
            }
        }
    }
}

/// Deterministic-likelihood target using [`p_reference`]; plain
/// Metropolis–Hastings when run through the pseudo-marginal samplers.
#[derive(Debug, Clone)]
pub struct ReferenceModel {
    pub model: ModelSpec,
    pub prior: PriorSpec,
    pub dataset: SeroDataset,
}

impl Target for ReferenceModel {
    fn dim(&self) -> usize {
        self.model.dim()
    }

    fn log_prior(&self, theta: &[f64]) -> f64 {
        self.prior.log_prior(theta)
    }

    fn log_likelihood_hat<R: Rng + ?Sized>(&self, theta: &[f64], _rng: &mut R) -> f64 {
        self.model
            .foi(theta)
            .and_then(|foi| log_likelihood_reference(&foi, &self.dataset))
            .unwrap_or(f64::NEG_INFINITY)
    }

    fn wrap(&self, theta: &mut [f64]) {
        if let Some(i) = self.model.angle_index() {
            theta[i] = theta[i].rem_euclid(TAU);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_xoshiro::Xoshiro256PlusPlus;
    use std::f64::consts::PI;

    fn toy_box(j: usize) -> SmoothedBox {
        SmoothedBox::new(((j - 1) as f64, j as f64), (0.0, 0.05), 0.01, 0.0005).unwrap()
    }

    #[test]
    fn zero_hazard_reference_is_one() {
        let foi = ForceOfInfection::constant(0.0).unwrap();
        let p = p_reference(&foi, &toy_box(3)).unwrap();
        assert!((p - 1.0).abs() < 1e-10);
        let unit = SmoothedBox::with_default_edges((2000.0, 2001.0), (4.0, 5.0)).unwrap();
        assert!((p_reference(&foi, &unit).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn zero_hazard_log_p_hat_is_zero() {
        let foi = ForceOfInfection::constant(0.0).unwrap();
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(2);
        for m in [1, 7, 500] {
            assert_eq!(log_p_hat(&foi, &toy_box(1), m, &mut rng).unwrap(), 0.0);
        }
    }

    #[test]
    fn constant_hazard_reference_is_analytic() {
        // q = exp(-c a), Ψ uniform on a ∈ [1, 2] without smoothing
        let c = 0.8;
        let foi = ForceOfInfection::constant(c).unwrap();
        let bx = SmoothedBox::new((0.0, 1.0), (1.0, 2.0), 0.0, 0.0).unwrap();
        let exact = ((-c).exp() - (-2.0 * c).exp()) / c;
        assert!((p_reference(&foi, &bx).unwrap() - exact).abs() < 1e-12);
    }

    #[test]
    fn reference_decreases_with_alpha() {
        let model = ModelSpec::AgeModulated {
            breakpoints: vec![0.0, 3.0, 7.0, 15.0, 21.0],
            time_origin: 2000.0,
        };
        let bx = SmoothedBox::with_default_edges((2002.0, 2003.0), (8.0, 9.0)).unwrap();
        let base = [0.08, 0.15, 0.10, 0.05, 1.8, 1.0, 0.5];
        let p0 = p_reference(&model.foi(&base).unwrap(), &bx).unwrap();
        for i in 0..3 {
            let mut th = base;
            th[i] += 0.02;
            let p1 = p_reference(&model.foi(&th).unwrap(), &bx).unwrap();
            assert!(p1 < p0, "alpha{} increase did not lower p", i + 1);
        }
        // the age-15+ level does not touch an 8-9 year box
        let mut th = base;
        th[3] += 0.02;
        let p1 = p_reference(&model.foi(&th).unwrap(), &bx).unwrap();
        assert_eq!(p1, p0);
    }

    #[test]
    fn prior_densities() {
        let e = Prior::Exponential { rate: 10.0 };
        assert!((e.log_density(0.1) - (10f64.ln() - 1.0)).abs() < 1e-15);
        assert_eq!(e.log_density(-0.1), f64::NEG_INFINITY);
        assert_eq!(Prior::UniformAngle.log_density(7.0), f64::NEG_INFINITY);
        let spec = ModelSpec::AgeModulated {
            breakpoints: vec![0.0, 3.0, 7.0],
            time_origin: 0.0,
        }
        .default_prior();
        assert_eq!(spec.log_prior(&[0.1, -0.1, 1.0, 1.0, 1.0]), f64::NEG_INFINITY);
        assert!(spec.log_prior(&[0.1, 0.1, 1.0, 1.0, 1.0]).is_finite());
        assert!(Prior::Exponential { rate: 0.0 }.validate().is_err());
        assert!(Prior::Uniform { lo: 1.0, hi: 1.0 }.validate().is_err());
    }

    #[test]
    fn all_susceptible_dataset_has_no_failure_terms() {
        let ds = SeroDataset::new(vec![Subsample {
            bx: toy_box(1),
            n: 4,
            y: 4,
        }])
        .unwrap();
        let foi = ForceOfInfection::toy(PI).unwrap();
        let mut r1 = Xoshiro256PlusPlus::seed_from_u64(5);
        let mut r2 = r1.clone();
        let ll = log_likelihood_hat(&ModelSpec::Toy, &[PI], &ds, 50, &mut r1, Solver::Exact).unwrap();
        let direct: f64 = (0..4).map(|_| log_p_hat(&foi, &toy_box(1), 50, &mut r2).unwrap()).sum();
        assert_eq!(ll, direct);
    }

    #[test]
    fn zero_hazard_with_infections_is_impossible() {
        let ds = SeroDataset::new(vec![Subsample {
            bx: toy_box(1),
            n: 4,
            y: 3,
        }])
        .unwrap();
        let foi = ForceOfInfection::constant(0.0).unwrap();
        let solver = ResolvedSolver::Exact;
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(5);
        let ll = log_likelihood_terms(&foi, &ds, 10, &solver, f64::NEG_INFINITY, &mut rng);
        assert_eq!(ll, Some(f64::NEG_INFINITY));
    }

    #[test]
    fn dataset_invariants() {
        let s = Subsample {
            bx: toy_box(1),
            n: 2,
            y: 3,
        };
        assert!(SeroDataset::new(vec![s]).is_err());
        let s = Subsample {
            bx: toy_box(1),
            n: 0,
            y: 0,
        };
        assert!(SeroDataset::new(vec![s]).is_err());
        let s = Subsample {
            bx: toy_box(1),
            n: 2,
            y: 1,
        };
        assert!(SeroDataset::new(vec![s, s]).is_err());
    }

    #[test]
    fn log1m_exp_branches() {
        for p in [1e-300, 1e-8, 0.3, 0.5, 0.9, 1.0 - 1e-12] {
            let v = log1m_exp(f64::ln(p));
            assert!((v - (1.0 - p).ln()).abs() < 1e-9 * (1.0 + (1.0 - p).ln().abs()), "p={p}");
        }
        assert_eq!(log1m_exp(0.0), f64::NEG_INFINITY);
        assert_eq!(log1m_exp(0.1), f64::NEG_INFINITY);
    }

    #[test]
    fn early_exit_agrees_with_full_sum() {
        let ds = SeroDataset::new(
            (1..=6)
                .map(|j| Subsample {
                    bx: toy_box(j),
                    n: 10,
                    y: 6,
                })
                .collect(),
        )
        .unwrap();
        let model = SeroModel::new(ModelSpec::Toy, ModelSpec::Toy.default_prior(), ds, 40, Solver::Exact).unwrap();
        let mut r1 = Xoshiro256PlusPlus::seed_from_u64(11);
        let mut r2 = r1.clone();
        let full = model.log_likelihood_hat(&[2.5], &mut r1);
        assert_eq!(model.log_likelihood_hat_above(&[2.5], full - 1e-9, &mut r2), Some(full));
        let mut r3 = Xoshiro256PlusPlus::seed_from_u64(11);
        assert_eq!(model.log_likelihood_hat_above(&[2.5], full + 1.0, &mut r3), None);
    }
}
