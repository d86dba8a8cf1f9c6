//! Scenario-file front end for the enflow model generator: parsing, the
//! validate/build/solve/results pipeline, and the `enflow` binary on top.

pub mod pipeline;
pub mod scenario;

pub use pipeline::{run_build, run_results, run_solve, run_validate, CliError};
pub use scenario::{parse_scenario, LocatedViolation, Scenario, ScenarioError};
