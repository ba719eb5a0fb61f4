//! Seeded multi-trial experiments over the relaxation controller and the
//! packet simulator, emitting CSV tables.

use thiserror::Error;

pub mod attack;
pub mod capacity;
pub mod output;
pub mod sensitivity;
pub mod spec;
pub mod stats;
pub mod structural;
pub mod sweep;

pub use output::{run_experiment, run_to_dir, ExperimentOutput};
pub use spec::{ExperimentSpec, Family, TopologyConfig};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid experiment spec: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Topology(#[from] sra_core::topology::TopologyError),
    #[error(transparent)]
    Routing(#[from] sra_core::routing::RoutingError),
    #[error(transparent)]
    Controller(#[from] sra_core::controller::ControllerError),
    #[error(transparent)]
    Sim(#[from] sra_netsim::SimError),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}
