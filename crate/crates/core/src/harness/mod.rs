//! Scenario configuration, the trajectory engine, ensembles, CSV output and
//! self-check suites.

pub mod config;
pub mod engine;
pub mod ensemble;
pub mod output;
pub mod presets;
pub mod validate;

pub use config::{RawConfig, Scenario};
pub use engine::{run_reference, run_trajectory, ControlSchedule, Model, ReferenceTrajectory, TrajectoryRecord, TrajectoryRow};
pub use ensemble::{run_ensemble, run_sweep, EnsembleSummary, RunOptions};
