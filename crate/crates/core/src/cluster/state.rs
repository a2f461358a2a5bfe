use std::fmt;

use crate::{ClusterId, NodeId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Role {
    Unclustered,
    Head,
    Member,
    Gateway,
}

impl Role {
    pub fn code(self) -> u8 {
        match self {
            Role::Unclustered => 0,
            Role::Head => 1,
            Role::Member => 2,
            Role::Gateway => 3,
        }
    }

    /// Role byte announced by a self-promoted singleton head.
    pub const ORPHAN_CODE: u8 = 4;

    pub fn is_clustered(self) -> bool {
        self != Role::Unclustered
    }
}

/// Per-node clustering outcome for the current epoch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClusterState {
    pub role: Role,
    /// Primary cluster. Equal to the node's own id while unclustered.
    pub cluster_id: ClusterId,
    /// Next hop toward the head; the node itself when head or unclustered.
    pub parent: NodeId,
    pub hops_to_head: u8,
}

impl ClusterState {
    pub fn unclustered(id: NodeId) -> Self {
        ClusterState { role: Role::Unclustered, cluster_id: id, parent: id, hops_to_head: 0 }
    }

    pub fn head(id: NodeId) -> Self {
        ClusterState { role: Role::Head, cluster_id: id, parent: id, hops_to_head: 0 }
    }

    pub fn member(cluster: ClusterId, parent: NodeId, hops: u8) -> Self {
        debug_assert!(hops >= 1);
        ClusterState { role: Role::Member, cluster_id: cluster, parent, hops_to_head: hops }
    }

    pub fn is_head(&self) -> bool {
        self.role == Role::Head
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EventKind {
    ClusterFormed,
    NodeJoined,
    JoinedCluster,
    NeighborOtherCluster,
    ClusterHeadChanged,
    FormationComplete,
}

impl EventKind {
    pub fn name(self) -> &'static str {
        match self {
            EventKind::ClusterFormed => "CLUSTER_FORMED",
            EventKind::NodeJoined => "NODE_JOINED",
            EventKind::JoinedCluster => "JOINED_CLUSTER",
            EventKind::NeighborOtherCluster => "NEIGHBOR_OTHER_CLUSTER",
            EventKind::ClusterHeadChanged => "CLUSTER_HEAD_CHANGED",
            EventKind::FormationComplete => "FORMATION_COMPLETE",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClusterEvent {
    pub kind: EventKind,
    pub subject: NodeId,
    pub cluster: ClusterId,
}

/// An event as it was observed by a node, with the round it happened in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LoggedEvent {
    pub round: u64,
    pub node: NodeId,
    pub event: ClusterEvent,
}

impl fmt::Display for LoggedEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "event={} node={} cluster={} round={}",
            self.event.kind.name(),
            self.event.subject,
            self.event.cluster,
            self.round
        )
    }
}

/// Static per-node attributes supplied by the experiment setup.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeInfo {
    pub id: NodeId,
    /// Residual energy scalar.
    pub energy: f64,
    /// Value compared by attribute-based election; the node id by default.
    pub attribute: u32,
}

impl NodeInfo {
    pub fn new(id: NodeId) -> Self {
        NodeInfo { id, energy: 1.0, attribute: id }
    }
}

/// Parameters fanned out to every module by a single `set_parameters` call.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Parameters {
    /// Head probability (PROB, TCCA).
    pub p: f64,
    /// Re-clustering period in rounds; 0 forms clusters once.
    pub t: u64,
    /// Hop radius for attribute election and BFS/DFS joining.
    pub k: u8,
    /// Hop radius for max-min election.
    pub d: u8,
    /// Desired fraction of heads per formation (LEACH).
    pub desired_fraction: f64,
    /// Energy normaliser (TCCA).
    pub e_max: f64,
}

impl Default for Parameters {
    fn default() -> Self {
        Parameters { p: 0.15, t: 0, k: 2, d: 2, desired_fraction: 0.05, e_max: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid parameter {name}: {reason}")]
pub struct ParameterError {
    pub name: &'static str,
    pub reason: String,
}

impl Parameters {
    pub fn validate(&self) -> Result<(), ParameterError> {
        let err = |name, reason: String| Err(ParameterError { name, reason });
        if !(0.0..=1.0).contains(&self.p) {
            return err("p", format!("{} outside [0, 1]", self.p));
        }
        if !(self.desired_fraction > 0.0 && self.desired_fraction <= 1.0) {
            return err("desired_fraction", format!("{} outside (0, 1]", self.desired_fraction));
        }
        if self.k == 0 {
            return err("k", "must be at least 1".into());
        }
        if self.d == 0 {
            return err("d", "must be at least 1".into());
        }
        if !(self.e_max > 0.0) {
            return err("e_max", format!("{} must be positive", self.e_max));
        }
        Ok(())
    }
}
