//! Serosurvey CSV input and synthetic data generation.
//!
//! Input files have the header `year,age,n_tested,n_seropositive`; each row
//! is one `(year, age)` cell.

use std::io::{Read, Write};
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::DesignConfig;
use crate::design::SmoothedBox;
use crate::error::{Error, Result};
use crate::foi::ForceOfInfection;
use crate::likelihood::{SeroDataset, Subsample};

/// What a seropositive test indicates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Convention {
    /// Seropositive individuals have been infected; the susceptible count is
    /// `n_tested - n_seropositive`.
    #[default]
    Infected,
    /// The `n_seropositive` column already counts susceptibles.
    Susceptible,
}

impl std::str::FromStr for Convention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "infected" => Ok(Convention::Infected),
            "susceptible" => Ok(Convention::Susceptible),
            _ => Err(Error::Config(format!("unknown convention {s:?}; use infected or susceptible"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeroRecord {
    pub year: i32,
    pub age: u32,
    pub n_tested: u32,
    pub n_seropositive: u32,
}

const HEADER: [&str; 4] = ["year", "age", "n_tested", "n_seropositive"];

/// Parses serosurvey rows. Line numbers in errors count the header as 1.
pub fn read_records<R: Read>(input: R) -> Result<Vec<SeroRecord>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let header = rdr.headers().map_err(|e| Error::Parse {
        line: 1,
        msg: e.to_string(),
    })?;
    if header.iter().collect::<Vec<_>>() != HEADER {
        if header.is_empty() {
            return Err(Error::InvalidDataset("empty file".into()));
        }
        return Err(Error::Parse {
            line: 1,
            msg: format!("expected header {}", HEADER.join(",")),
        });
    }
    let mut out = Vec::new();
    for (i, row) in rdr.deserialize::<SeroRecord>().enumerate() {
        let line = i + 2;
        let rec = row.map_err(|e| Error::Parse {
            line: e.position().map_or(line, |p| p.line() as usize),
            msg: e.to_string(),
        })?;
        if rec.n_tested == 0 {
            return Err(Error::InvalidDataset(format!("line {line}: n_tested must be >= 1")));
        }
        if rec.n_seropositive > rec.n_tested {
            return Err(Error::InvalidDataset(format!(
                "line {line}: n_seropositive {} exceeds n_tested {}",
                rec.n_seropositive, rec.n_tested
            )));
        }
        out.push(rec);
    }
    if out.is_empty() {
        return Err(Error::InvalidDataset("no data rows".into()));
    }
    Ok(out)
}

/// Cells `[year, year+1] × [age, age+1]` with default edges.
pub fn default_geometry() -> DesignConfig {
    DesignConfig {
        years: [0, 0],
        ages: [0, 0],
        n_per_cell: 1,
        age_width: 1.0,
        edge_t: None,
        edge_a: None,
    }
}

/// Dataset from records, one box per row under `geometry`.
pub fn records_to_dataset(records: &[SeroRecord], convention: Convention, geometry: &DesignConfig) -> Result<SeroDataset> {
    let subs = records
        .iter()
        .map(|r| {
            Ok(Subsample {
                bx: geometry.cell(r.year, r.age)?,
                n: r.n_tested,
                y: match convention {
                    Convention::Infected => r.n_tested - r.n_seropositive,
                    Convention::Susceptible => r.n_seropositive,
                },
            })
        })
        .collect::<Result<Vec<_>>>()?;
    SeroDataset::new(subs)
}

/// Reads a serosurvey file with unit cells.
pub fn load_serodata(path: &Path, convention: Convention) -> Result<SeroDataset> {
    load_serodata_with(path, convention, &default_geometry())
}

pub fn load_serodata_with(path: &Path, convention: Convention, geometry: &DesignConfig) -> Result<SeroDataset> {
    let file = std::fs::File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    records_to_dataset(&read_records(file)?, convention, geometry)
}

pub fn write_records<W: Write>(out: W, records: &[SeroRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// One simulated test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Individual {
    pub cell: usize,
    pub t: f64,
    pub a: f64,
    pub susceptible: bool,
}

/// Simulates `n` tests per box: `(t, a) ~ Ψ`, then a susceptible outcome with
/// probability `q(t, a)`.
pub fn generate_synthetic<R: Rng + ?Sized>(
    boxes: &[SmoothedBox],
    foi: &ForceOfInfection,
    n: u32,
    rng: &mut R,
) -> Result<(SeroDataset, Vec<Individual>)> {
    if n == 0 {
        return Err(Error::InvalidParameter("need at least one test per box".into()));
    }
    let mut log = Vec::with_capacity(boxes.len() * n as usize);
    let mut subs = Vec::with_capacity(boxes.len());
    for (cell, bx) in boxes.iter().enumerate() {
        let mut y = 0;
        for _ in 0..n {
            let (t, a) = bx.sample_one(rng);
            let susceptible = rng.random::<f64>() < foi.q_exact(t, a)?;
            y += susceptible as u32;
            log.push(Individual { cell, t, a, susceptible });
        }
        subs.push(Subsample { bx: *bx, n, y });
    }
    Ok((SeroDataset::new(subs)?, log))
}

/// Records for a simulated design grid; counts follow the infected
/// convention.
pub fn dataset_records(design: &DesignConfig, dataset: &SeroDataset) -> Result<Vec<SeroRecord>> {
    let cells = design.cells()?;
    if cells.len() != dataset.len() {
        return Err(Error::InvalidDataset("dataset does not match the design grid".into()));
    }
    Ok(cells
        .iter()
        .zip(dataset.subsamples())
        .map(|(&(year, age, _), s)| SeroRecord {
            year,
            age,
            n_tested: s.n,
            n_seropositive: s.n - s.y,
        })
        .collect())
}
