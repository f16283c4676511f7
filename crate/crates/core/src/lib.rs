//! Discrete-event simulation of energy-aware on-demand routing in mobile
//! ad hoc networks.
//!
//! The [`sim::Simulation`] type runs one network; [`batch`] runs scenario
//! sweeps over seeds and protocols and writes CSV results.

pub mod batch;
pub mod energy;
pub mod engine;
pub mod linklayer;
pub mod metrics;
pub mod mobility;
pub mod routing;
pub mod scenario;
pub mod sim;
pub mod traffic;

/// Index of a node within a simulation.
pub type NodeId = usize;

pub use energy::{Battery, DrainRateEstimator, EnergyModel};
pub use metrics::{aggregate, Aggregate, MetricsLedger};
pub use routing::{CostPolicy, ProtocolKind};
pub use scenario::{Scenario, ScenarioError};
pub use sim::{NodeSetup, SimError, Simulation};
