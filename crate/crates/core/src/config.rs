//! Experiment configuration, read from TOML.
//!
//! ```toml
//! [model]
//! kind = "age_modulated"            # or "toy"
//! breakpoints = [0, 3, 7, 15, 21]
//! time_origin = 2000
//! truth = [0.08, 0.15, 0.1, 0.05, 1.8, 1.0, 0.5]   # used by `simulate`
//! # prior = [{ kind = "exponential", rate = 10 }, ...]  # defaults per model
//!
//! [design]
//! years = [2000, 2004]               # inclusive
//! ages = [1, 19]                     # inclusive, years completed
//! n_per_cell = 5
//! # age_width = 1.0, edge_t = 0.01, edge_a = 0.01
//!
//! [sampler]
//! algorithm = "apt"                  # or "pm_rwm"
//! iterations = 100000
//! burn_in = 10000
//! m = 250
//! sigma = 0.05
//! levels = 5
//! seed = 1
//!
//! [solver]
//! kind = "exact"                     # or "cohort" with epsilon / cohorts_per_box
//!
//! [output]
//! dir = "out"
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::design::SmoothedBox;
use crate::error::{Error, Result};
use crate::likelihood::{ModelSpec, Prior, PriorSpec, Solver};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelConfig,
    pub design: DesignConfig,
    #[serde(default)]
    pub sampler: SamplerConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub convergence: Option<ConvergenceConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub predict: Option<PredictConfig>,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Toy,
    AgeModulated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub kind: ModelKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub breakpoints: Option<Vec<f64>>,
    #[serde(default)]
    pub time_origin: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prior: Option<Vec<Prior>>,
    /// Parameter used to simulate data.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth: Option<Vec<f64>>,
}

/// A grid of `[year, year + 1] × [age, age + age_width]` cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignConfig {
    pub years: [i32; 2],
    pub ages: [u32; 2],
    #[serde(default = "one")]
    pub n_per_cell: u32,
    #[serde(default = "unit")]
    pub age_width: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edge_t: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edge_a: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    PmRwm,
    Apt,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerConfig {
    pub algorithm: Algorithm,
    pub iterations: usize,
    pub burn_in: usize,
    pub m: usize,
    pub sigma: f64,
    #[serde(default = "two")]
    pub levels: usize,
    pub seed: u64,
    /// Starting point; the prior mean when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub init: Option<Vec<f64>>,
    /// Per-component proposal weights.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
    /// Keep every `thin`-th row in chain files.
    #[serde(default = "one_usize")]
    pub thin: usize,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            algorithm: Algorithm::PmRwm,
            iterations: 10_000,
            burn_in: 1_000,
            m: 500,
            sigma: 0.5,
            levels: 2,
            seed: 1,
            init: None,
            weights: None,
            thin: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SolverConfig {
    #[default]
    Exact,
    Cohort {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        epsilon: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        cohorts_per_box: Option<u32>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergenceConfig {
    /// Cohort counts per box run from `2^0` to `2^max_k`.
    pub max_k: u32,
    #[serde(default = "five")]
    pub runs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictConfig {
    /// Posterior draws used for the bands, evenly spaced after burn-in.
    #[serde(default = "five_hundred")]
    pub draws: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: String,
    #[serde(default = "hundred")]
    pub acf_max_lag: usize,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: "out".into(),
            acf_max_lag: 100,
        }
    }
}

fn one() -> u32 {
    1
}
fn one_usize() -> usize {
    1
}
fn two() -> usize {
    2
}
fn five() -> usize {
    5
}
fn hundred() -> usize {
    100
}
fn five_hundred() -> usize {
    500
}
fn unit() -> f64 {
    1.0
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

impl DesignConfig {
    pub fn validate(&self) -> Result<()> {
        if self.years[1] < self.years[0] {
            return Err(bad("design.years must be [first, last] with first <= last"));
        }
        if self.ages[1] < self.ages[0] {
            return Err(bad("design.ages must be [first, last] with first <= last"));
        }
        if self.n_per_cell == 0 {
            return Err(bad("design.n_per_cell must be >= 1"));
        }
        if !(self.age_width.is_finite() && self.age_width > 0.0) {
            return Err(bad("design.age_width must be > 0"));
        }
        for e in [self.edge_t, self.edge_a].into_iter().flatten() {
            if !(e.is_finite() && e >= 0.0) {
                return Err(bad("design edges must be >= 0"));
            }
        }
        Ok(())
    }

    /// Box for the cell of `year` and completed `age`.
    pub fn cell(&self, year: i32, age: u32) -> Result<SmoothedBox> {
        let t = (year as f64, year as f64 + 1.0);
        let a = (age as f64 * self.age_width, (age as f64 + 1.0) * self.age_width);
        SmoothedBox::new(
            t,
            a,
            self.edge_t.unwrap_or(0.01 * (t.1 - t.0)),
            self.edge_a.unwrap_or(0.01 * (a.1 - a.0)),
        )
    }

    /// All cells, year-major.
    pub fn cells(&self) -> Result<Vec<(i32, u32, SmoothedBox)>> {
        let mut out = Vec::new();
        for y in self.years[0]..=self.years[1] {
            for a in self.ages[0]..=self.ages[1] {
                out.push((y, a, self.cell(y, a)?));
            }
        }
        Ok(out)
    }

    /// Width of every cell along the time axis.
    pub fn time_width(&self) -> f64 {
        1.0
    }
}

impl ModelConfig {
    pub fn spec(&self) -> Result<ModelSpec> {
        match self.kind {
            ModelKind::Toy => {
                if self.breakpoints.is_some() {
                    return Err(bad("model.breakpoints is not used by the toy model"));
                }
                Ok(ModelSpec::Toy)
            }
            ModelKind::AgeModulated => {
                let bp = self
                    .breakpoints
                    .clone()
                    .ok_or_else(|| bad("model.breakpoints is required for age_modulated"))?;
                if bp.len() < 2 || bp[0] != 0.0 || bp.windows(2).any(|w| !(w[1] > w[0])) || !bp[bp.len() - 1].is_finite() {
                    return Err(bad("model.breakpoints must start at 0 and increase strictly"));
                }
                if !self.time_origin.is_finite() {
                    return Err(bad("model.time_origin must be finite"));
                }
                Ok(ModelSpec::AgeModulated {
                    breakpoints: bp,
                    time_origin: self.time_origin,
                })
            }
        }
    }

    pub fn prior(&self) -> Result<PriorSpec> {
        let spec = self.spec()?;
        let prior = match &self.prior {
            Some(p) => PriorSpec(p.clone()),
            None => spec.default_prior(),
        };
        if prior.0.len() != spec.dim() {
            return Err(bad(format!(
                "model.prior has {} entries, model has {} parameters",
                prior.0.len(),
                spec.dim()
            )));
        }
        prior.validate().map_err(|e| bad(e.to_string()))?;
        Ok(prior)
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let c: ExperimentConfig = toml::from_str(s).map_err(|e| bad(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&s)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| bad(e.to_string()))
    }

    /// Checks every field; nothing is computed from an unchecked config.
    pub fn validate(&self) -> Result<()> {
        let spec = self.model.spec()?;
        let prior = self.model.prior()?;
        self.design.validate()?;
        if let Some(max) = spec_max_age(&spec) {
            let top = (self.design.ages[1] as f64 + 1.0) * self.design.age_width;
            let edge = self.design.edge_a.unwrap_or(0.01 * self.design.age_width);
            if top + edge > max {
                return Err(bad(format!(
                    "design ages reach {} but the last breakpoint is {max}",
                    top + edge
                )));
            }
        }
        if let Some(t) = &self.model.truth {
            if t.len() != spec.dim() || !prior.log_prior(t).is_finite() {
                return Err(bad("model.truth must be a point in the prior support"));
            }
        }
        let s = &self.sampler;
        if s.iterations == 0 {
            return Err(bad("sampler.iterations must be >= 1"));
        }
        if s.burn_in >= s.iterations {
            return Err(bad("sampler.burn_in must be < sampler.iterations"));
        }
        if s.m == 0 {
            return Err(bad("sampler.m must be >= 1"));
        }
        if !(s.sigma.is_finite() && s.sigma > 0.0) {
            return Err(bad("sampler.sigma must be > 0"));
        }
        if s.algorithm == Algorithm::Apt && s.levels < 2 {
            return Err(bad("sampler.levels must be >= 2 for apt"));
        }
        if s.thin == 0 {
            return Err(bad("sampler.thin must be >= 1"));
        }
        if let Some(init) = &s.init {
            if init.len() != spec.dim() || !prior.log_prior(init).is_finite() {
                return Err(bad("sampler.init must be a point in the prior support"));
            }
        }
        if let Some(w) = &s.weights {
            if w.len() != spec.dim() || w.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
                return Err(bad("sampler.weights must be positive, one per parameter"));
            }
        }
        self.solver()?;
        if let Some(c) = &self.convergence {
            if c.runs == 0 {
                return Err(bad("convergence.runs must be >= 1"));
            }
            if c.max_k > 20 {
                return Err(bad("convergence.max_k must be <= 20"));
            }
        }
        if let Some(p) = &self.predict {
            if p.draws == 0 {
                return Err(bad("predict.draws must be >= 1"));
            }
        }
        if self.output.dir.is_empty() {
            return Err(bad("output.dir must not be empty"));
        }
        Ok(())
    }

    pub fn solver(&self) -> Result<Solver> {
        match self.solver {
            SolverConfig::Exact => Ok(Solver::Exact),
            SolverConfig::Cohort {
                epsilon,
                cohorts_per_box,
            } => {
                let eps = match (epsilon, cohorts_per_box) {
                    (Some(e), None) => e,
                    (None, Some(c)) if c > 0 => self.design.time_width() / c as f64,
                    _ => return Err(bad("solver.cohort needs exactly one of epsilon, cohorts_per_box (> 0)")),
                };
                if !(eps.is_finite() && eps > 0.0) {
                    return Err(bad("solver.epsilon must be > 0"));
                }
                Ok(Solver::Cohort { epsilon: eps })
            }
        }
    }

    /// Configured starting point, or the prior mean.
    pub fn init(&self) -> Result<Vec<f64>> {
        match &self.sampler.init {
            Some(v) => Ok(v.clone()),
            None => Ok(self.model.prior()?.0.iter().map(Prior::mean).collect()),
        }
    }
}

fn spec_max_age(spec: &ModelSpec) -> Option<f64> {
    match spec {
        ModelSpec::Toy => None,
        ModelSpec::AgeModulated { breakpoints, .. } => breakpoints.last().copied(),
    }
}
