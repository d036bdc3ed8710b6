pub mod analysis;
pub mod cohort;
pub mod config;
pub mod data;
pub mod design;
pub mod error;
pub mod experiments;
pub mod foi;
pub mod likelihood;
pub mod mcmc;
pub mod quadrature;
pub mod tempering;

pub use error::{Error, Result};
