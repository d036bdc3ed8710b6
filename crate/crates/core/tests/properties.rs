//! Property tests for the analysis utilities.

mod common;

use common::*;
use proptest::prelude::*;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serocohort::analysis::*;
use serocohort::likelihood::{p_reference, ModelSpec};
use serocohort::mcmc::{stream, Chain, Draw};

fn sample() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-100.0..100.0f64, 1..40)
}

proptest! {
    #[test]
    fn w1_is_symmetric(a in sample(), b in sample()) {
        let ab = wasserstein_1d(&a, &b).unwrap();
        let ba = wasserstein_1d(&b, &a).unwrap();
        prop_assert!((ab - ba).abs() <= 1e-12 * (1.0 + ab));
        prop_assert!(ab >= 0.0);
    }

    #[test]
    fn w1_triangle_inequality(a in sample(), b in sample(), c in sample()) {
        let ac = wasserstein_1d(&a, &c).unwrap();
        let ab = wasserstein_1d(&a, &b).unwrap();
        let bc = wasserstein_1d(&b, &c).unwrap();
        prop_assert!(ac <= ab + bc + 1e-12 * (1.0 + ac));
    }

    #[test]
    fn w1_of_shift_is_shift(a in sample(), s in -50.0..50.0f64) {
        let b: Vec<f64> = a.iter().map(|x| x + s).collect();
        let d = wasserstein_1d(&a, &b).unwrap();
        prop_assert!((d - s.abs()).abs() <= 1e-9);
    }

    #[test]
    fn w1_ignores_order(a in sample(), seed in any::<u64>()) {
        let mut b = a.clone();
        let mut rng = stream(seed, 0);
        for i in (1..b.len()).rev() {
            b.swap(i, rng.random_range(0..=i));
        }
        prop_assert_eq!(wasserstein_1d(&a, &b).unwrap(), 0.0);
    }

    #[test]
    fn w1_unequal_sizes_match_replicated(a in sample(), b in sample()) {
        // replicating each sample to a common size leaves the empirical laws unchanged
        let (na, nb) = (a.len(), b.len());
        let ra: Vec<f64> = a.iter().flat_map(|&x| std::iter::repeat_n(x, nb)).collect();
        let rb: Vec<f64> = b.iter().flat_map(|&x| std::iter::repeat_n(x, na)).collect();
        let d = wasserstein_1d(&a, &b).unwrap();
        let r = wasserstein_1d(&ra, &rb).unwrap();
        prop_assert!((d - r).abs() <= 1e-9 * (1.0 + r));
    }

    #[test]
    fn summary_matches_recount(v in prop::collection::vec(-10.0..10.0f64, 2..60)) {
        let chain = Chain {
            draws: v.iter().enumerate().map(|(i, &x)| Draw {
                iteration: i,
                theta: vec![x, -x],
                log_lik: 0.0,
                accepted: true,
            }).collect(),
            scale_trace: vec![],
            seed: 0,
        };
        let s = summarize(&chain, 0).unwrap();
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        prop_assert!((s[0].mean - mean).abs() < 1e-12);
        prop_assert!((s[0].sd - var.sqrt()).abs() < 1e-10);
        prop_assert!((s[1].mean + mean).abs() < 1e-12);
        let mut sorted = v.clone();
        sorted.sort_by(f64::total_cmp);
        prop_assert_eq!(s[0].quantiles[2], median(&v));
        let (lo, hi) = s[0].ci95();
        prop_assert!(sorted[0] <= lo && lo <= hi && hi <= sorted[sorted.len() - 1]);
        // at least 2.5% of the sample lies at or below the lower bound
        let below = v.iter().filter(|&&x| x <= lo).count() as f64;
        prop_assert!(below >= (0.025 * (n - 1.0)).floor());
    }
}

#[test]
fn ar1_autocorrelation() {
    let mut rng = stream(21, 0);
    let n = 100_000;
    let mut x = Vec::with_capacity(n);
    let mut v = 0.0;
    for _ in 0..n {
        let e: f64 = StandardNormal.sample(&mut rng);
        v = 0.9 * v + e;
        x.push(v);
    }
    let r = acf(&x, 5).unwrap();
    assert_eq!(r[0], 1.0);
    assert!((r[1] - 0.9).abs() < 0.02, "{}", r[1]);
    assert!((r[2] - 0.81).abs() < 0.03, "{}", r[2]);

    let w: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
    let r = acf(&w, 20).unwrap();
    let bound = 4.0 / (n as f64).sqrt();
    assert!(r[1..].iter().all(|c| c.abs() < bound));
}

#[test]
fn prediction_matches_brute_force() {
    let model = ModelSpec::AgeModulated {
        breakpoints: varicella_breakpoints(),
        time_origin: 2000.0,
    };
    let mut rng = stream(22, 0);
    let thetas: Vec<Vec<f64>> = (0..50)
        .map(|_| {
            VARICELLA_TRUTH
                .iter()
                .enumerate()
                .map(|(k, &x)| if k == 5 { x } else { x * rng.random_range(0.7..1.3) })
                .collect()
        })
        .collect();
    let bx = serocohort::design::SmoothedBox::with_default_edges((2004.0, 2005.0), (6.0, 7.0)).unwrap();
    let band = &predict_prevalence(&thetas, &model, &[bx]).unwrap()[0];
    let mut prev: Vec<f64> = thetas
        .iter()
        .map(|t| 1.0 - p_reference(&model.foi(t).unwrap(), &bx).unwrap())
        .collect();
    prev.sort_by(f64::total_cmp);
    assert!((band.median - quantile_sorted(&prev, 0.5)).abs() < 1e-12);
    assert!((band.q05 - quantile_sorted(&prev, 0.05)).abs() < 1e-12);
    assert!((band.q95 - quantile_sorted(&prev, 0.95)).abs() < 1e-12);
    assert!((band.p_median - (1.0 - band.median)).abs() < 1e-12);

    let one = &predict_prevalence(&thetas[..1], &model, &[bx]).unwrap()[0];
    assert_eq!(one.q05, one.median);
    assert_eq!(one.q95, one.median);

    // a vanishing force of infection leaves nobody seropositive
    let tiny = vec![vec![1e-12, 1e-12, 1e-12, 1e-12, 1.0, 0.0, 1e-12]];
    let band = &predict_prevalence(&tiny, &model, &[bx]).unwrap()[0];
    assert!(band.q95 < 1e-9);
}
