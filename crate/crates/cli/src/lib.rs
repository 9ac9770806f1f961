//! Experiment runner for data-driven reachability and nonlinear zonotopic
//! predictive control on the stirred-tank benchmark.

pub mod commands;
pub mod config;
pub mod estimate;

pub use config::ExperimentConfig;
