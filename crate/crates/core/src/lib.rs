//! Phase-level energy model of edge and cloud offloading for big-data
//! platforms, with a scenario simulator, probe ingestion and calibration.

pub mod calibration;
pub mod energy;
pub mod error;
pub mod model;
pub mod probes;
pub mod report;
pub mod series;
pub mod sim;

pub use error::{Error, ParseError, PlanError, Result};
pub use model::{
    default_catalog, default_plan, validate_plan, Catalog, ExperimentPlan, Phase, PlatformName, Scenario, Tier,
    WorkloadKind, WorkloadName,
};
pub use sim::{run_matrix, run_scenario, MatrixCell, MatrixOptions, ScenarioResult};
