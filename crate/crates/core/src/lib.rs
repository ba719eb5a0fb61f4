//! Betweenness-driven relaxation of node transit costs.
//!
//! - [`topology`]: graphs, random-graph generators, edge-list I/O.
//! - [`routing`]: node-cost shortest paths, Brandes betweenness, route tables.
//! - [`controller`]: the leaky-integrator cost controller and its traces.
//! - [`stability`]: energy, switch and dwell-time diagnostics over traces.

pub mod controller;
pub mod routing;
pub mod stability;
pub mod topology;

use rand::SeedableRng;

pub use controller::{run_relaxation, RelaxTrace, SraConfig, SraState};
pub use routing::{betweenness, CentralityReport, CostVector, RouteTable};
pub use topology::{generate, Graph, Model, TopologySpec};

/// The crate-wide random generator. ChaCha8 has a fixed, documented output
/// stream, so seeded results are identical across platforms.
pub type SimRng = rand_chacha::ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}
