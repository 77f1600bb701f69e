//! Deterministic simulator for temperature-aware adaptive transmission power
//! control in wireless sensor networks.
//!
//! The model: ambient temperature degrades RSSI linearly; each node compensates
//! by raising its transmit power level. A reference node partitions the network
//! into three regions (A hottest, B, C coolest) from an RSSI census, and the
//! adaptive scheme clamps every node that sits above its region's mean RSSI loss
//! down to that mean, provided enough of the region's members are still inside
//! the band. Classical baselines (per-node and network-max assignment) are
//! included as comparators. Runs are round-based and fully deterministic for a
//! given seed.

pub mod east;
pub mod engine;
pub mod link_model;
pub mod regioning;
pub mod topology;

pub use east::{
    check_constraints, classical_assign, east_assign, AssignmentRound, ClassicalMode,
    ConstraintReport, ControlTraffic, PowerAssignment, TrafficAccountant,
};
pub use engine::{
    run, run_with_observer, summarize, MinMaxMean, RoundMetrics, RoundView, RunSummary, Scheme,
    SimConfig, TemperatureProcess,
};
pub use link_model::{
    required_tx_power, rssi_loss_to_power_level, temp_to_rssi_loss, PowerLevel, RadioConstants,
    RssiLoss, Temperature,
};
pub use regioning::{Region, RegionPartition, RssiCensus};
pub use topology::{MobilitySchedule, NodeState, Position};

/// Errors surfaced by the library. Configuration problems are reported before
/// any simulation round executes.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error("non-finite {what}: {value}")]
    NonFinite { what: &'static str, value: f64 },
    #[error("RSSI loss {rssi} dBm is at or below the -40 dBm power-level floor")]
    PowerLevelDomain { rssi: f64 },
    #[error("distance must be positive, got {d} m")]
    NonPositiveDistance { d: f64 },
    #[error("network has no nodes")]
    EmptyNetwork,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}
