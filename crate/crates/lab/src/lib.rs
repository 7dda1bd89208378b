//! Experiment harness, configuration and output for `exh-core`.

pub mod config;
pub mod harness;
pub mod output;
pub mod plot;
