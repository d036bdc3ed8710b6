use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use serocohort::config::ExperimentConfig;
use serocohort::data::{load_serodata_with, Convention};
use serocohort::experiments::{run_fit, run_holdout, run_simulate, run_toy_convergence, simulate};
use serocohort::likelihood::SeroDataset;

#[derive(Parser)]
#[command(name = "serocohort", version, about = "Force-of-infection inference from serosurvey data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a serosurvey from the configured design and `model.truth`.
    Simulate(Common),
    /// Fit the configured model to a serosurvey.
    Fit(DataArgs),
    /// Compare exact and cohort-approximated posteriors.
    ToyConvergence(OptionalData),
    /// Fit without one year and predict its prevalence.
    Predict {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        holdout_year: i32,
    },
    /// Check a configuration file.
    ValidateConfig {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Overrides `sampler.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DataArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    data: PathBuf,
    /// What a seropositive test indicates: infected or susceptible.
    #[arg(long, default_value = "infected")]
    convention: Convention,
}

#[derive(Args)]
struct OptionalData {
    #[command(flatten)]
    common: Common,
    /// Serosurvey file; simulated from `model.truth` when absent.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long, default_value = "infected")]
    convention: Convention,
}

fn setup(c: &Common) -> serocohort::Result<(ExperimentConfig, PathBuf)> {
    let mut config = ExperimentConfig::load(&c.config)?;
    if let Some(s) = c.seed {
        config.sampler.seed = s;
    }
    let out = c.out.clone().unwrap_or_else(|| PathBuf::from(&config.output.dir));
    Ok((config, out))
}

fn load(config: &ExperimentConfig, path: &Path, convention: Convention) -> serocohort::Result<SeroDataset> {
    load_serodata_with(path, convention, &config.design)
}

fn run(cli: Cli, stop: &AtomicBool) -> serocohort::Result<()> {
    match cli.command {
        Command::Simulate(c) => {
            let (config, out) = setup(&c)?;
            let ds = run_simulate(&config, config.sampler.seed, &out)?;
            eprintln!("simulated {} cells, {} tests -> {}", ds.len(), ds.total_tested(), out.display());
        }
        Command::Fit(d) => {
            let (config, out) = setup(&d.common)?;
            let ds = load(&config, &d.data, d.convention)?;
            let res = run_fit(&config, ds, &out, Some(stop))?;
            eprintln!(
                "{} iterations, acceptance {:.3} -> {}",
                res.cold().len(),
                res.cold().acceptance_rate(config.sampler.burn_in),
                out.display()
            );
        }
        Command::ToyConvergence(d) => {
            let (config, out) = setup(&d.common)?;
            let ds = match &d.data {
                Some(p) => load(&config, p, d.convention)?,
                None => simulate(&config, config.sampler.seed)?.0,
            };
            let study = run_toy_convergence(&config, &ds, &out, Some(stop))?;
            for r in &study.report.rows {
                eprintln!(
                    "{:>4} cohorts/box  W1 {:.4}  order {}",
                    r.cohorts_per_box,
                    r.w1,
                    r.order.map_or("-".into(), |o| format!("{o:.3}"))
                );
            }
        }
        Command::Predict { data, holdout_year } => {
            let (config, out) = setup(&data.common)?;
            let ds = load(&config, &data.data, data.convention)?;
            let res = run_holdout(&config, &ds, holdout_year, &out, Some(stop))?;
            eprintln!("hold-out {holdout_year}: 90% band covers {:.0}% of cells", 100.0 * res.coverage());
        }
        Command::ValidateConfig { config } => {
            let c = ExperimentConfig::load(&config)?;
            print!("{}", c.to_toml_string()?);
            eprintln!("{}: ok", config.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let stop = Arc::new(AtomicBool::new(false));
    let flag = stop.clone();
    if let Err(e) = ctrlc::set_handler(move || flag.store(true, Ordering::Relaxed)) {
        eprintln!("warning: no interrupt handler: {e}");
    }
    let result = run(cli, &stop);
    if stop.load(Ordering::Relaxed) {
        eprintln!("interrupted; partial output written");
        return ExitCode::from(130);
    }
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
