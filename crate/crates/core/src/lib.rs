//! Numerical toolkit for the Mautner group family `ℝ ⋉_p ℂ²`.

pub mod error;
pub mod grid;
pub mod group;
pub mod kernel;
pub mod plancherel;
pub mod sigma;
pub mod dstar;
pub mod field_io;
pub mod config;
pub mod cli;
pub mod symbols;

pub use error::{Error, Result};
