//! Simulation runtime for clusters of buildings with HVAC plant, batteries
//! and PV, plus the tool catalog that exposes it.

pub mod analysis;
pub mod disturbance;
pub mod error;
pub mod model;
pub mod physics;
pub mod reference;
pub mod runtime;
pub mod sim;
pub mod tools;
pub mod validate;

pub use analysis::{ComparisonReport, Facet, MetricDelta};
pub use error::RuntimeError;
pub use runtime::{Entity, RunRequest, RunSummary, Runtime};
pub use sim::{Simulation, SimulationResult, StepRecord};
pub use tools::{register_tools, shared_registry};
pub use validate::validate_config;
