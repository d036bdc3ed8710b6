//! Adaptive parallel tempering with pseudo-marginal likelihoods.
//!
//! Level `ℓ` targets `L̂(θ)^{β_ℓ} f(θ)`; only the likelihood estimate is
//! tempered. Each iteration runs one random-walk step per level, then offers
//! a swap between one uniformly chosen adjacent pair. Proposal scales adapt
//! towards 10% acceptance and the gaps between inverse temperatures adapt
//! towards 23.4% swap acceptance, both with step size `n^{-0.6}`.

use std::sync::atomic::{AtomicBool, Ordering};

use rand::Rng;

use crate::error::{Error, Result};
use crate::likelihood::Target;
use crate::mcmc::{check_weights, propose, stream, Chain, ChainRng, Draw};

pub const TARGET_ACCEPT: f64 = 0.1;
pub const TARGET_SWAP: f64 = 0.234;
const ADAPT_EXPONENT: f64 = 0.6;

#[derive(Debug, Clone, PartialEq)]
pub struct AptOptions {
    pub levels: usize,
    pub iterations: usize,
    /// Initial proposal scale shared by every level.
    pub sigma: f64,
    pub weights: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwapRecord {
    pub iteration: usize,
    /// Lower index of the pair offered the swap (0-based; pair `(k, k+1)`).
    pub pair: usize,
    /// Swap acceptance probability.
    pub prob: f64,
    pub accepted: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AptRun {
    /// One chain per level; index 0 is the untempered level.
    pub chains: Vec<Chain>,
    /// Inverse temperatures in force at the end of each iteration.
    pub beta_trace: Vec<Vec<f64>>,
    pub swaps: Vec<SwapRecord>,
    pub seed: u64,
}

impl AptRun {
    pub fn betas(&self) -> Option<&[f64]> {
        self.beta_trace.last().map(Vec::as_slice)
    }

    /// Fraction of accepted swaps among iterations after `burn_in`.
    pub fn swap_rate(&self, burn_in: usize) -> f64 {
        let kept: Vec<_> = self.swaps.iter().filter(|s| s.iteration > burn_in).collect();
        if kept.is_empty() {
            return f64::NAN;
        }
        kept.iter().filter(|s| s.accepted).count() as f64 / kept.len() as f64
    }

    pub fn cold(&self) -> &Chain {
        &self.chains[0]
    }
}

struct Level {
    theta: Vec<f64>,
    log_lik: f64,
    log_prior: f64,
    log_sigma: f64,
    rng: ChainRng,
    draws: Vec<Draw>,
    scales: Vec<f64>,
}

/// Acceptance probability for moving from `(ll, lp)` to `(ll2, lp2)` at
/// inverse temperature `beta`, in log space.
fn log_alpha(beta: f64, ll: f64, lp: f64, ll2: f64, lp2: f64) -> f64 {
    if ll2 == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if ll == f64::NEG_INFINITY {
        return 0.0;
    }
    (beta * (ll2 - ll) + lp2 - lp).min(0.0)
}

impl Level {
    fn step<T: Target>(&mut self, target: &T, beta: f64, weights: Option<&[f64]>, n: usize) {
        let mut cand = propose(&self.theta, self.log_sigma.exp(), weights, &mut self.rng);
        target.wrap(&mut cand);
        let log_u = self.rng.random::<f64>().ln();
        let cand_prior = target.log_prior(&cand);
        let mut alpha = 0.0;
        let mut accepted = false;
        if cand_prior.is_finite() {
            let cand_lik = target.log_likelihood_hat(&cand, &mut self.rng);
            let la = log_alpha(beta, self.log_lik, self.log_prior, cand_lik, cand_prior);
            alpha = la.exp();
            if log_u < la {
                self.theta = cand;
                self.log_lik = cand_lik;
                self.log_prior = cand_prior;
                accepted = true;
            }
        }
        self.scales.push(self.log_sigma.exp());
        self.log_sigma += (n as f64).powf(-ADAPT_EXPONENT) * (alpha - TARGET_ACCEPT);
        self.draws.push(Draw {
            iteration: n,
            theta: self.theta.clone(),
            log_lik: self.log_lik,
            accepted,
        });
    }
}

/// Inverse temperatures from the log gaps `log ρ_k = log(1/β_{k+1} - 1/β_k)`.
fn betas_from_gaps(log_rho: &[f64]) -> Vec<f64> {
    let mut inv = 1.0;
    let mut betas = Vec::with_capacity(log_rho.len() + 1);
    betas.push(1.0);
    for r in log_rho {
        inv += r.exp();
        betas.push(1.0 / inv);
    }
    betas
}

/// Runs adaptive parallel tempering; every level starts from `theta0`.
pub fn apt<T: Target>(
    target: &T,
    theta0: &[f64],
    opts: &AptOptions,
    seed: u64,
    stop: Option<&AtomicBool>,
) -> Result<AptRun> {
    if opts.levels < 2 {
        return Err(Error::InvalidParameter(format!("need at least 2 levels, got {}", opts.levels)));
    }
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
    let log_prior = target.log_prior(theta0);
    if !log_prior.is_finite() {
        return Err(Error::InvalidParameter("initial state outside prior support".into()));
    }

    let mut levels: Vec<Level> = (0..opts.levels)
        .map(|l| {
            let mut rng = stream(seed, l as u64 + 1);
            let log_lik = target.log_likelihood_hat(theta0, &mut rng);
            Level {
                theta: theta0.to_vec(),
                log_lik,
                log_prior,
                log_sigma: opts.sigma.ln(),
                rng,
                draws: Vec::with_capacity(opts.iterations),
                scales: Vec::with_capacity(opts.iterations),
            }
        })
        .collect();
    let mut swap_rng = stream(seed, 0);
    // 1/β_ℓ = 2^{ℓ-1} initially, so the gaps are 2^{ℓ-1}
    let mut log_rho: Vec<f64> = (0..opts.levels - 1).map(|k| k as f64 * std::f64::consts::LN_2).collect();
    let mut betas = betas_from_gaps(&log_rho);
    let mut beta_trace = Vec::with_capacity(opts.iterations);
    let mut swaps = Vec::with_capacity(opts.iterations);
    let weights = opts.weights.as_deref();

    for n in 1..=opts.iterations {
        if stop.is_some_and(|s| s.load(Ordering::Relaxed)) {
            break;
        }
        propagate(&mut levels, &betas, target, weights, n);

        let k = swap_rng.random_range(0..opts.levels - 1);
        let (lo, hi) = (levels[k].log_lik, levels[k + 1].log_lik);
        let log_eta = if lo == hi {
            0.0
        } else {
            ((betas[k] - betas[k + 1]) * (hi - lo)).min(0.0)
        };
        let eta = log_eta.exp();
        let accepted = swap_rng.random::<f64>().ln() < log_eta;
        if accepted {
            let (a, b) = levels.split_at_mut(k + 1);
            let (x, y) = (&mut a[k], &mut b[0]);
            std::mem::swap(&mut x.theta, &mut y.theta);
            std::mem::swap(&mut x.log_lik, &mut y.log_lik);
            std::mem::swap(&mut x.log_prior, &mut y.log_prior);
            for l in [x, y] {
                let d = l.draws.last_mut().expect("step pushed a draw");
                d.theta.clone_from(&l.theta);
                d.log_lik = l.log_lik;
            }
        }
        swaps.push(SwapRecord {
            iteration: n,
            pair: k,
            prob: eta,
            accepted,
        });
        log_rho[k] += (n as f64).powf(-ADAPT_EXPONENT) * (eta - TARGET_SWAP);
        betas = betas_from_gaps(&log_rho);
        beta_trace.push(betas.clone());
    }

    let chains = levels
        .into_iter()
        .map(|l| Chain {
            draws: l.draws,
            scale_trace: l.scales,
            seed,
        })
        .collect();
    Ok(AptRun {
        chains,
        beta_trace,
        swaps,
        seed,
    })
}

#[cfg(feature = "parallel")]
fn propagate<T: Target>(levels: &mut [Level], betas: &[f64], target: &T, weights: Option<&[f64]>, n: usize) {
    use rayon::prelude::*;
    levels
        .par_iter_mut()
        .zip(betas.par_iter())
        .for_each(|(l, &b)| l.step(target, b, weights, n));
}

#[cfg(not(feature = "parallel"))]
fn propagate<T: Target>(levels: &mut [Level], betas: &[f64], target: &T, weights: Option<&[f64]>, n: usize) {
    for (l, &b) in levels.iter_mut().zip(betas) {
        l.step(target, b, weights, n);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Gaussian likelihood with mean 1 and scale `sd`, flat prior on [-20, 20].
    struct Gauss {
        flat: bool,
        sd: f64,
    }

    impl Target for Gauss {
        fn dim(&self) -> usize {
            1
        }
        fn log_prior(&self, t: &[f64]) -> f64 {
            if t[0].abs() <= 20.0 {
                0.0
            } else {
                f64::NEG_INFINITY
            }
        }
        fn log_likelihood_hat<R: Rng + ?Sized>(&self, t: &[f64], _rng: &mut R) -> f64 {
            if self.flat {
                0.0
            } else {
                -0.5 * ((t[0] - 1.0) / self.sd).powi(2)
            }
        }
    }

    fn opts(levels: usize, iterations: usize) -> AptOptions {
        AptOptions {
            levels,
            iterations,
            sigma: 1.0,
            weights: None,
        }
    }

    #[test]
    fn initial_ladder_doubles() {
        let b = betas_from_gaps(&[0.0, 2f64.ln(), 4f64.ln()]);
        assert_eq!(b, vec![1.0, 0.5, 0.25, 0.125]);
    }

    #[test]
    fn identical_targets_always_swap() {
        let run = apt(&Gauss { flat: true, sd: 1.0 }, &[0.0], &opts(2, 2000), 4, None).unwrap();
        assert!(run.swaps.iter().all(|s| s.accepted && s.prob == 1.0));
    }

    #[test]
    fn ladder_stays_ordered_and_cold_chain_is_right() {
        let run = apt(&Gauss { flat: false, sd: 1e-3 }, &[0.0], &opts(4, 60_000), 11, None).unwrap();
        for b in &run.beta_trace {
            assert_eq!(b[0], 1.0);
            assert!(b.windows(2).all(|w| w[0] > w[1] && w[1] > 0.0));
        }
        assert!((run.swap_rate(10_000) - TARGET_SWAP).abs() < 0.05, "{}", run.swap_rate(10_000));
        for c in &run.chains {
            assert!((c.acceptance_rate(10_000) - TARGET_ACCEPT).abs() < 0.03);
            assert_eq!(c.len(), 60_000);
        }
        let xs = run.cold().component(0, 10_000);
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / xs.len() as f64;
        assert!((mean - 1.0).abs() < 1e-4, "{mean}");
        assert!((var / 1e-6 - 1.0).abs() < 0.15, "{var}");
    }

    #[test]
    fn seeded_runs_repeat() {
        let a = apt(&Gauss { flat: false, sd: 1.0 }, &[0.0], &opts(3, 500), 2, None).unwrap();
        let b = apt(&Gauss { flat: false, sd: 1.0 }, &[0.0], &opts(3, 500), 2, None).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn needs_two_levels() {
        assert!(apt(&Gauss { flat: false, sd: 1.0 }, &[0.0], &opts(1, 5), 2, None).is_err());
    }
}
