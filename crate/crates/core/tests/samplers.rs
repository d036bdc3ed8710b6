//! Statistical checks of the pseudo-marginal and tempering samplers.

mod common;

use common::*;
use serocohort::analysis::{ks_critical_1pct, ks_statistic, wasserstein_1d};
use serocohort::experiments::{fit, sero_model, simulate};
use serocohort::likelihood::{ModelSpec, SeroDataset, SeroModel, Solver};
use serocohort::mcmc::{pm_rwm, stream, Chain, RwmOptions};
use serocohort::tempering::{apt, AptOptions};

fn thinned(chain: &Chain, k: usize, burn: usize, thin: usize) -> Vec<f64> {
    chain.component(k, burn).into_iter().step_by(thin).collect()
}

fn assert_prior(chain: &Chain, model: &SeroModel, burn: usize, thin: usize) {
    for (k, prior) in model.prior.0.iter().enumerate() {
        let x = thinned(chain, k, burn, thin);
        let d = ks_statistic(&x, |v| prior.cdf(v)).unwrap();
        let c = ks_critical_1pct(x.len());
        assert!(d < c, "component {k}: KS {d:.4} >= {c:.4}");
    }
}

#[test]
fn pm_rwm_recovers_prior_without_data() {
    let spec = ModelSpec::AgeModulated {
        breakpoints: varicella_breakpoints(),
        time_origin: 2000.0,
    };
    let prior = spec.default_prior();
    let model = SeroModel::new(spec, prior, SeroDataset::empty(), 1, Solver::Exact).unwrap();
    let opts = RwmOptions {
        iterations: 400_000,
        sigma: 0.5,
        weights: Some(vec![0.1, 0.1, 0.1, 0.1, 1.25, 1.81, 1.0]),
    };
    // 100 independent chains, each thinned to 1000 nearly uncorrelated draws
    let mut draws = vec![Vec::new(); model.prior.0.len()];
    for seed in 0..100 {
        // starting from a prior draw keeps every chain stationary
        let start = model.prior.sample(&mut stream(seed, 7));
        let chain = pm_rwm(&model, &start, &opts, 1000 + seed, None).unwrap();
        for (k, d) in draws.iter_mut().enumerate() {
            d.extend(thinned(&chain, k, 0, 400));
        }
    }
    for (k, (prior, x)) in model.prior.0.iter().zip(&draws).enumerate() {
        assert_eq!(x.len(), 100_000);
        let d = ks_statistic(x, |v| prior.cdf(v)).unwrap();
        let c = ks_critical_1pct(x.len());
        assert!(d < c, "component {k}: KS {d:.4} >= {c:.4}");
    }
}

#[test]
fn apt_with_flat_likelihood_recovers_prior_and_always_swaps() {
    let config = toy_config(1, 1, 0);
    let model = sero_model(&config, SeroDataset::empty(), Solver::Exact).unwrap();
    let opts = AptOptions {
        levels: 2,
        iterations: 200_000,
        sigma: 2.0,
        weights: None,
    };
    let run = apt(&model, &[2.5], &opts, 32, None).unwrap();
    assert!(run.swaps.iter().all(|s| s.prob == 1.0 && s.accepted));
    for chain in &run.chains {
        assert_prior(chain, &model, 5_000, 100);
    }
}

#[test]
fn apt_cold_chain_matches_pm_rwm() {
    // 50 tests per box make the toy posterior unimodal
    let mut config = toy_config(20_000, 100, 33);
    config.design.n_per_cell = 50;
    config.sampler.sigma = 0.1;
    config.sampler.init = Some(vec![3.0]);
    let (ds, _) = simulate(&config, 1).unwrap();
    let single = fit(&config, ds.clone(), None).unwrap();
    let model = sero_model(&config, ds, Solver::Exact).unwrap();
    let opts = AptOptions {
        levels: 2,
        iterations: 20_000,
        sigma: 0.1,
        weights: None,
    };
    let run = apt(&model, &[3.0], &opts, 34, None).unwrap();
    let burn = 2_000;
    let d = wasserstein_1d(&single.cold().component(0, burn), &run.cold().component(0, burn)).unwrap();
    assert!(d <= 0.05, "W1 {d:.4}");
}

#[test]
fn posterior_is_invariant_to_estimator_size() {
    let small = toy_config(60_000, 50, 35);
    let large = toy_config(60_000, 500, 36);
    let (ds, _) = simulate(&small, 1).unwrap();
    let a = fit(&small, ds.clone(), None).unwrap();
    let b = fit(&large, ds, None).unwrap();
    let burn = 6_000;
    let d = wasserstein_1d(&a.cold().component(0, burn), &b.cold().component(0, burn)).unwrap();
    assert!(d <= 0.05, "W1 {d:.4}");
}
