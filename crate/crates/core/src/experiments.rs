//! Experiment drivers: simulation, fitting, the cohort convergence study and
//! hold-out prediction. Each `run_*` function writes its CSV files into an
//! output directory; the underlying computations are exposed separately.
//!
//! Floating-point values are written with 17 significant digits.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::atomic::AtomicBool;

use crate::analysis::{acf, map_maybe_parallel, median, predict_prevalence, summarize, wasserstein_1d, ConvergenceReport, PrevalenceBand, Summary, SUMMARY_LEVELS};
use crate::config::{Algorithm, ExperimentConfig};
use crate::data::{dataset_records, generate_synthetic, write_records, Individual};
use crate::error::{Error, Result};
use crate::likelihood::{SeroDataset, SeroModel, Solver};
use crate::mcmc::{pm_rwm, stream, Chain, RwmOptions};
use crate::tempering::{apt, AptOptions, SwapRecord};

/// Float formatting used in every output file.
pub fn fmt(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

/// Seed for job `(a, b)` derived from a master seed.
pub fn derive_seed(master: u64, a: u64, b: u64) -> u64 {
    let mut z = master ^ a.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ b.wrapping_mul(0xC2B2_AE3D_27D4_EB4F);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    std::fs::create_dir_all(dir)?;
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

/// Simulates the configured design from `model.truth`.
pub fn simulate(config: &ExperimentConfig, seed: u64) -> Result<(SeroDataset, Vec<Individual>)> {
    let truth = config
        .model
        .truth
        .as_ref()
        .ok_or_else(|| Error::Config("model.truth is required to simulate".into()))?;
    let foi = config.model.spec()?.foi(truth)?;
    let boxes: Vec<_> = config.design.cells()?.into_iter().map(|c| c.2).collect();
    generate_synthetic(&boxes, &foi, config.design.n_per_cell, &mut stream(seed, 0))
}

/// Writes `data.csv` and `individuals.csv`.
pub fn run_simulate(config: &ExperimentConfig, seed: u64, out: &Path) -> Result<SeroDataset> {
    let (ds, log) = simulate(config, seed)?;
    write_records(create(out, "data.csv")?, &dataset_records(&config.design, &ds)?)?;
    let mut w = create(out, "individuals.csv")?;
    writeln!(w, "cell,t,a,susceptible")?;
    for i in &log {
        writeln!(w, "{},{},{},{}", i.cell, fmt(i.t), fmt(i.a), i.susceptible as u8)?;
    }
    w.flush()?;
    Ok(ds)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    /// One chain per temperature level, untempered first.
    pub chains: Vec<Chain>,
    pub beta_trace: Option<Vec<Vec<f64>>>,
    pub swaps: Vec<SwapRecord>,
}

impl FitResult {
    pub fn cold(&self) -> &Chain {
        &self.chains[0]
    }
}

pub fn sero_model(config: &ExperimentConfig, dataset: SeroDataset, solver: Solver) -> Result<SeroModel> {
    SeroModel::new(
        config.model.spec()?,
        config.model.prior()?,
        dataset,
        config.sampler.m,
        solver,
    )
}

/// Runs the configured sampler with the configured solver.
pub fn fit(config: &ExperimentConfig, dataset: SeroDataset, stop: Option<&AtomicBool>) -> Result<FitResult> {
    let model = sero_model(config, dataset, config.solver()?)?;
    let s = &config.sampler;
    let init = config.init()?;
    match s.algorithm {
        Algorithm::PmRwm => {
            let opts = RwmOptions {
                iterations: s.iterations,
                sigma: s.sigma,
                weights: s.weights.clone(),
            };
            Ok(FitResult {
                chains: vec![pm_rwm(&model, &init, &opts, s.seed, stop)?],
                beta_trace: None,
                swaps: Vec::new(),
            })
        }
        Algorithm::Apt => {
            let opts = AptOptions {
                levels: s.levels,
                iterations: s.iterations,
                sigma: s.sigma,
                weights: s.weights.clone(),
            };
            let run = apt(&model, &init, &opts, s.seed, stop)?;
            Ok(FitResult {
                chains: run.chains,
                beta_trace: Some(run.beta_trace),
                swaps: run.swaps,
            })
        }
    }
}

fn write_chain(dir: &Path, level: usize, names: &[String], chain: &Chain, thin: usize) -> Result<()> {
    let mut w = create(dir, &format!("chain_{level}.csv"))?;
    writeln!(w, "iteration,{},log_lik,accepted", names.join(","))?;
    for d in chain.draws.iter().filter(|d| d.iteration % thin == 0) {
        let theta: Vec<_> = d.theta.iter().map(|&x| fmt(x)).collect();
        writeln!(w, "{},{},{},{}", d.iteration, theta.join(","), fmt(d.log_lik), d.accepted as u8)?;
    }
    w.flush()?;
    Ok(())
}

fn write_summary(dir: &Path, names: &[String], summaries: &[Summary]) -> Result<()> {
    let mut w = create(dir, "summary.csv")?;
    let q: Vec<_> = SUMMARY_LEVELS.iter().map(|p| format!("q{}", p * 100.0)).collect();
    writeln!(w, "parameter,mean,sd,{}", q.join(","))?;
    for (n, s) in names.iter().zip(summaries) {
        let qs: Vec<_> = s.quantiles.iter().map(|&x| fmt(x)).collect();
        writeln!(w, "{n},{},{},{}", fmt(s.mean), fmt(s.sd), qs.join(","))?;
    }
    w.flush()?;
    Ok(())
}

fn write_acf(dir: &Path, names: &[String], chain: &Chain, burn_in: usize, max_lag: usize) -> Result<()> {
    let mut w = create(dir, "acf.csv")?;
    writeln!(w, "parameter,lag,acf")?;
    for (k, n) in names.iter().enumerate() {
        let x = chain.component(k, burn_in);
        let lag = max_lag.min(x.len().saturating_sub(1));
        match acf(&x, lag) {
            Ok(r) => {
                for (l, v) in r.iter().enumerate() {
                    writeln!(w, "{n},{l},{}", fmt(*v))?;
                }
            }
            // a chain that never moved has no autocorrelation
            Err(Error::DegenerateVariance) | Err(Error::LagTooLarge { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    w.flush()?;
    Ok(())
}

fn write_diagnostics(dir: &Path, result: &FitResult) -> Result<()> {
    let mut w = create(dir, "diagnostics.csv")?;
    writeln!(w, "iteration,level,sigma,beta,accepted")?;
    let n = result.cold().len();
    for i in 0..n {
        for (l, c) in result.chains.iter().enumerate() {
            let beta = result.beta_trace.as_ref().map_or(1.0, |b| b[i][l]);
            writeln!(
                w,
                "{},{l},{},{},{}",
                c.draws[i].iteration,
                fmt(c.scale_trace[i]),
                fmt(beta),
                c.draws[i].accepted as u8
            )?;
        }
    }
    w.flush()?;
    if !result.swaps.is_empty() {
        let mut w = create(dir, "swaps.csv")?;
        writeln!(w, "iteration,pair,prob,accepted")?;
        for s in &result.swaps {
            writeln!(w, "{},{},{},{}", s.iteration, s.pair, fmt(s.prob), s.accepted as u8)?;
        }
        w.flush()?;
    }
    Ok(())
}

/// Writes chains, summary, ACF and sampler traces for a finished fit.
pub fn write_fit(config: &ExperimentConfig, result: &FitResult, out: &Path) -> Result<()> {
    let names = config.model.spec()?.param_names();
    for (l, c) in result.chains.iter().enumerate() {
        write_chain(out, l, &names, c, config.sampler.thin)?;
    }
    let burn_in = config.sampler.burn_in;
    if result.cold().len() > burn_in {
        write_summary(out, &names, &summarize(result.cold(), burn_in)?)?;
        write_acf(out, &names, result.cold(), burn_in, config.output.acf_max_lag)?;
    }
    write_diagnostics(out, result)
}

/// Fits and writes the outputs. An interrupted fit still writes the draws
/// made so far.
pub fn run_fit(config: &ExperimentConfig, dataset: SeroDataset, out: &Path, stop: Option<&AtomicBool>) -> Result<FitResult> {
    let result = fit(config, dataset, stop)?;
    write_fit(config, &result, out)?;
    Ok(result)
}

/// One run of the convergence study at one cohort count.
#[derive(Debug, Clone, PartialEq)]
pub struct CohortComparison {
    pub run: usize,
    pub cohorts_per_box: u32,
    pub w1: f64,
    pub mean_diff: f64,
    pub sd_diff: f64,
    pub acceptance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceStudy {
    /// Medians over runs.
    pub report: ConvergenceReport,
    pub comparisons: Vec<CohortComparison>,
    /// Exact-solver chains, one per run.
    pub reference: Vec<Chain>,
}

fn mean_sd(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    (m, (x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt())
}

/// Random-walk chains for the exact solver and for `2^k` cohorts per box,
/// `k = 0..=max_k`, repeated `runs` times; compares marginals of parameter 0.
pub fn convergence_study(config: &ExperimentConfig, dataset: &SeroDataset, stop: Option<&AtomicBool>) -> Result<ConvergenceStudy> {
    let cc = config
        .convergence
        .as_ref()
        .ok_or_else(|| Error::Config("a [convergence] section is required".into()))?;
    let s = &config.sampler;
    let init = config.init()?;
    let opts = RwmOptions {
        iterations: s.iterations,
        sigma: s.sigma,
        weights: s.weights.clone(),
    };
    // job (r, None) is the reference chain of run r
    let jobs: Vec<(usize, Option<u32>)> = (0..cc.runs)
        .flat_map(|r| std::iter::once((r, None)).chain((0..=cc.max_k).map(move |k| (r, Some(k)))))
        .collect();
    let chains = map_maybe_parallel(&jobs, |&(r, k)| {
        let solver = match k {
            None => Solver::Exact,
            Some(k) => Solver::Cohort {
                epsilon: config.design.time_width() / 2f64.powi(k as i32),
            },
        };
        let model = sero_model(config, dataset.clone(), solver)?;
        let seed = derive_seed(s.seed, r as u64, k.map_or(0, |k| k as u64 + 1));
        pm_rwm(&model, &init, &opts, seed, stop)
    })?;

    let per_run = cc.max_k as usize + 2;
    let mut comparisons = Vec::new();
    let mut reference = Vec::new();
    for (r, block) in chains.chunks(per_run).enumerate() {
        let burn = s.burn_in.min(block[0].len().saturating_sub(1));
        let base = block[0].component(0, burn);
        let (m0, s0) = mean_sd(&base);
        for (k, c) in block[1..].iter().enumerate() {
            let x = c.component(0, burn);
            let (m1, s1) = mean_sd(&x);
            comparisons.push(CohortComparison {
                run: r,
                cohorts_per_box: 1 << k,
                w1: wasserstein_1d(&base, &x)?,
                mean_diff: (m1 - m0).abs(),
                sd_diff: (s1 - s0).abs(),
                acceptance: c.acceptance_rate(burn),
            });
        }
        reference.push(block[0].clone());
    }
    let entries = (0..=cc.max_k)
        .map(|k| {
            let rows: Vec<_> = comparisons.iter().filter(|c| c.cohorts_per_box == 1 << k).collect();
            let med = |f: fn(&CohortComparison) -> f64| median(&rows.iter().map(|c| f(c)).collect::<Vec<_>>());
            (1u32 << k, med(|c| c.w1), med(|c| c.mean_diff), med(|c| c.sd_diff))
        })
        .collect();
    Ok(ConvergenceStudy {
        report: ConvergenceReport::new(entries)?,
        comparisons,
        reference,
    })
}

/// Writes `convergence.csv` (medians) and `convergence_runs.csv`.
pub fn run_toy_convergence(config: &ExperimentConfig, dataset: &SeroDataset, out: &Path, stop: Option<&AtomicBool>) -> Result<ConvergenceStudy> {
    let study = convergence_study(config, dataset, stop)?;
    let mut w = create(out, "convergence.csv")?;
    writeln!(w, "cohorts_per_box,w1,order,mean_diff,sd_diff")?;
    for r in &study.report.rows {
        writeln!(
            w,
            "{},{},{},{},{}",
            r.cohorts_per_box,
            fmt(r.w1),
            r.order.map_or(String::new(), fmt),
            fmt(r.mean_diff),
            fmt(r.sd_diff)
        )?;
    }
    w.flush()?;
    let mut w = create(out, "convergence_runs.csv")?;
    writeln!(w, "run,cohorts_per_box,w1,mean_diff,sd_diff,acceptance")?;
    for c in &study.comparisons {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            c.run,
            c.cohorts_per_box,
            fmt(c.w1),
            fmt(c.mean_diff),
            fmt(c.sd_diff),
            fmt(c.acceptance)
        )?;
    }
    w.flush()?;
    Ok(study)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictionRow {
    pub year: i32,
    pub age: f64,
    pub n_tested: u32,
    pub observed: f64,
    pub band: PrevalenceBand,
    pub covered: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HoldoutResult {
    pub fit: FitResult,
    pub rows: Vec<PredictionRow>,
}

impl HoldoutResult {
    pub fn coverage(&self) -> f64 {
        self.rows.iter().filter(|r| r.covered).count() as f64 / self.rows.len() as f64
    }
}

/// Evenly spaced post-burn-in draws of the cold chain.
pub fn posterior_draws(chain: &Chain, burn_in: usize, count: usize) -> Vec<Vec<f64>> {
    let kept = chain.thetas(burn_in);
    if kept.len() <= count {
        return kept;
    }
    (0..count).map(|i| kept[i * kept.len() / count].clone()).collect()
}

fn box_year(s: &crate::likelihood::Subsample) -> i32 {
    s.bx.t_range().0.floor() as i32
}

/// Fits on every year except `year` and predicts that year's cells.
pub fn holdout(config: &ExperimentConfig, dataset: &SeroDataset, year: i32, stop: Option<&AtomicBool>) -> Result<HoldoutResult> {
    let test = dataset.filter(|s| box_year(s) == year);
    if test.is_empty() {
        return Err(Error::InvalidDataset(format!("hold-out year {year} not in dataset")));
    }
    let train = dataset.filter(|s| box_year(s) != year);
    let fit = fit(config, train, stop)?;
    let burn = config.sampler.burn_in.min(fit.cold().len().saturating_sub(1));
    let count = config.predict.as_ref().map_or(500, |p| p.draws);
    let draws = posterior_draws(fit.cold(), burn, count);
    let boxes: Vec<_> = test.subsamples().iter().map(|s| s.bx).collect();
    let bands = predict_prevalence(&draws, &config.model.spec()?, &boxes)?;
    let rows = test
        .subsamples()
        .iter()
        .zip(bands)
        .map(|(s, band)| {
            let observed = (s.n - s.y) as f64 / s.n as f64;
            PredictionRow {
                year,
                age: s.bx.a_range().0,
                n_tested: s.n,
                observed,
                covered: band.q05 <= observed && observed <= band.q95,
                band,
            }
        })
        .collect();
    Ok(HoldoutResult { fit, rows })
}

/// Writes the fit outputs and `prediction.csv`.
pub fn run_holdout(config: &ExperimentConfig, dataset: &SeroDataset, year: i32, out: &Path, stop: Option<&AtomicBool>) -> Result<HoldoutResult> {
    let res = holdout(config, dataset, year, stop)?;
    write_fit(config, &res.fit, out)?;
    let mut w = create(out, "prediction.csv")?;
    writeln!(w, "year,age,n_tested,observed,median,q05,q95,susceptible_median,susceptible_q05,susceptible_q95,covered")?;
    for r in &res.rows {
        let b = &r.band;
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.year,
            fmt(r.age),
            r.n_tested,
            fmt(r.observed),
            fmt(b.median),
            fmt(b.q05),
            fmt(b.q95),
            fmt(b.p_median),
            fmt(b.p_q05),
            fmt(b.p_q95),
            r.covered as u8
        )?;
    }
    w.flush()?;
    Ok(res)
}
