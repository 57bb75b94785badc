//! Simulation and evaluation harness for the star-convex SLAM filter:
//! a ground-truth world with a scripted robot and 2D LiDAR, the scenario
//! runner that drives the filter, run logs, metrics and reports.

pub mod config;
pub mod error;
pub mod metrics;
pub mod report;
pub mod runlog;
pub mod runner;
pub mod sensor;
pub mod trajectory;
pub mod world;

pub use config::ScenarioConfig;
pub use error::{Result, SimError};
pub use runlog::RunLog;
pub use runner::run;
