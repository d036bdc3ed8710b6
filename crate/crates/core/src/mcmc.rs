//! Pseudo-marginal random-walk Metropolis.
//!
//! The likelihood is replaced by an unbiased positive estimate that is drawn
//! afresh for every proposal and then travels with the state. The estimate of
//! the current state is never refreshed, which is what keeps the `θ`-marginal
//! of the chain exact.

use std::sync::atomic::{AtomicBool, Ordering};

use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::error::{Error, Result};
use crate::likelihood::Target;

/// Random stream used by every sampler; portable and splittable.
pub type ChainRng = Xoshiro256PlusPlus;

/// Independent stream `k` derived from a master seed by repeated jumps of
/// 2^128 steps.
pub fn stream(seed: u64, k: u64) -> ChainRng {
    let mut rng = ChainRng::seed_from_u64(seed);
    for _ in 0..=k {
        rng.jump();
    }
    rng
}

#[derive(Debug, Clone, PartialEq)]
pub struct Draw {
    pub iteration: usize,
    pub theta: Vec<f64>,
    /// Log of the retained likelihood estimate of `theta`.
    pub log_lik: f64,
    pub accepted: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Chain {
    pub draws: Vec<Draw>,
    /// Proposal standard deviation in force at each iteration.
    pub scale_trace: Vec<f64>,
    pub seed: u64,
}

impl Chain {
    pub fn len(&self) -> usize {
        self.draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }

    pub fn acceptance_rate(&self, burn_in: usize) -> f64 {
        let kept = &self.draws[burn_in.min(self.draws.len())..];
        if kept.is_empty() {
            return f64::NAN;
        }
        kept.iter().filter(|d| d.accepted).count() as f64 / kept.len() as f64
    }

    /// Values of component `k` after `burn_in` draws.
    pub fn component(&self, k: usize, burn_in: usize) -> Vec<f64> {
        self.draws.iter().skip(burn_in).map(|d| d.theta[k]).collect()
    }

    pub fn thetas(&self, burn_in: usize) -> Vec<Vec<f64>> {
        self.draws.iter().skip(burn_in).map(|d| d.theta.clone()).collect()
    }
}

/// Gaussian random-walk step `θ + σ · w ⊙ z` with optional per-component
/// weights `w` (identity when absent).
pub(crate) fn propose<R: Rng + ?Sized>(theta: &[f64], sigma: f64, weights: Option<&[f64]>, rng: &mut R) -> Vec<f64> {
    theta
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let z: f64 = rng.sample(StandardNormal);
            x + sigma * weights.map_or(1.0, |w| w[i]) * z
        })
        .collect()
}

pub(crate) fn check_weights(weights: Option<&[f64]>, dim: usize) -> Result<()> {
    if let Some(w) = weights {
        if w.len() != dim || w.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
            return Err(Error::InvalidParameter(format!(
                "proposal weights must be {dim} positive numbers"
            )));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct RwmOptions {
    pub iterations: usize,
    pub sigma: f64,
    /// Per-component proposal weights; `None` is the isotropic walk.
    pub weights: Option<Vec<f64>>,
}

/// Pseudo-marginal random-walk Metropolis from `theta0`.
///
/// The acceptance uniform is drawn before the proposal's estimate, so
/// targets that can bound their estimate from above stop as soon as a
/// rejection is certain; the decision is the same as with the full estimate.
pub fn pm_rwm<T: Target>(
    target: &T,
    theta0: &[f64],
    opts: &RwmOptions,
    seed: u64,
    stop: Option<&AtomicBool>,
) -> Result<Chain> {
    let mut rng = stream(seed, 0);
    pm_rwm_with_rng(target, theta0, opts, seed, &mut rng, stop)
}

pub fn pm_rwm_with_rng<T: Target, R: Rng>(
    target: &T,
    theta0: &[f64],
    opts: &RwmOptions,
    seed: u64,
    rng: &mut R,
    stop: Option<&AtomicBool>,
) -> Result<Chain> {
    if theta0.len() != target.dim() {
        return Err(Error::InvalidParameter(format!(
            "initial state has {} components, target has {}",
            theta0.len(),
            target.dim()
        )));
    }
    if !(opts.sigma.is_finite() && opts.sigma > 0.0) {
        return Err(Error::InvalidParameter(format!("proposal scale must be > 0, got {}", opts.sigma)));
    }
    check_weights(opts.weights.as_deref(), target.dim())?;
    let mut theta = theta0.to_vec();
    let mut log_prior = target.log_prior(&theta);
    if !log_prior.is_finite() {
        return Err(Error::InvalidParameter("initial state outside prior support".into()));
    }
    let mut log_lik = target.log_likelihood_hat(&theta, rng);

    let mut draws = Vec::with_capacity(opts.iterations);
    for n in 1..=opts.iterations {
        if stop.is_some_and(|s| s.load(Ordering::Relaxed)) {
            break;
        }
        let mut cand = propose(&theta, opts.sigma, opts.weights.as_deref(), rng);
        target.wrap(&mut cand);
        let log_u = rng.random::<f64>().ln();
        let cand_prior = target.log_prior(&cand);
        let mut accepted = false;
        if cand_prior.is_finite() {
            // accept iff log_u < (ll' + lp') - (ll + lp)
            let floor = log_u + log_lik + log_prior - cand_prior;
            if let Some(cand_lik) = target.log_likelihood_hat_above(&cand, floor, rng) {
                if cand_lik > floor || (log_lik == f64::NEG_INFINITY && cand_lik > f64::NEG_INFINITY) {
                    theta = cand;
                    log_lik = cand_lik;
                    log_prior = cand_prior;
                    accepted = true;
                }
            }
        }
        draws.push(Draw {
            iteration: n,
            theta: theta.clone(),
            log_lik,
            accepted,
        });
    }
    let scale_trace = vec![opts.sigma; draws.len()];
    Ok(Chain {
        draws,
        scale_trace,
        seed,
    })
}
