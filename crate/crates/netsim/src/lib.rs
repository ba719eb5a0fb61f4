//! Packet-level traffic simulation and routing policies.

pub mod capacity;
pub mod protocols;
pub mod sim;

pub use capacity::{critical_load, CriticalLoadReport, CriticalLoadSearch, SweepPoint};
pub use protocols::{make_policy, PolicyKind, PolicyParams, SraMode};
pub use sim::{
    simulate, PacketCounts, RoutingPolicy, SimError, SimOutcome, TrafficConfig, TrafficMetrics,
};
