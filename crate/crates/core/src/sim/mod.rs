//! Deterministic round-based network simulation.

pub mod kernel;
pub mod rng;
pub mod topology;

pub use kernel::{Context, Delivery, Destination, Process, RadioModel, RoundReport, SimStats, Simulator};
pub use topology::{build_topology, PlacedNode, Topology, TopologyError, TopologyKind, TopologySpec};
