//! Component-based clustering for wireless sensor networks.

pub mod apps;
pub mod chd;
pub mod cluster;
pub mod experiment;
pub mod it;
pub mod jd;
pub mod network;
pub mod sim;
pub mod validation;
pub mod wire;

/// Node identifier.
pub type NodeId = u32;
/// Cluster identifier; always the id of the cluster's head.
pub type ClusterId = u32;
