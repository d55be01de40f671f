//! Command-line front door for the overhead model and the packet-level
//! simulator: model evaluation, sensitivity tables, scenario runs, sweeps
//! and model-vs-simulation comparisons.

pub mod commands;
pub mod error;
pub mod params;
pub mod report;
pub mod scenarios;
