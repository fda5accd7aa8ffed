//! Config-driven runner for the dwlab experiments.

pub mod config;
pub mod experiments;
pub mod output;
