//! A simulated network of clustering nodes running one composition.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;

use crate::cluster::{AlgorithmComposition, ClusterNode, CompositionError, NodeInfo, Role};
use crate::sim::rng::{self, Stream};
use crate::sim::{RadioModel, Simulator, Topology};
use crate::{ClusterId, NodeId};

/// How residual energy is assigned to nodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EnergyModel {
    Full,
    /// Uniform in `[lo, hi]`, drawn from each node's energy stream.
    Uniform { lo: f64, hi: f64 },
}

impl Default for EnergyModel {
    fn default() -> Self {
        EnergyModel::Uniform { lo: 0.2, hi: 1.0 }
    }
}

impl EnergyModel {
    pub fn energy(&self, seed: u64, id: NodeId) -> f64 {
        match *self {
            EnergyModel::Full => 1.0,
            EnergyModel::Uniform { lo, hi } => {
                let u: f64 = rng::stream(seed, Stream::Energy, id).gen();
                lo + (hi - lo) * u
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("network still active after {rounds} rounds")]
pub struct NotQuiescent {
    pub rounds: u64,
}

pub struct ClusterNetwork {
    sim: Simulator<ClusterNode>,
    composition: AlgorithmComposition,
}

impl ClusterNetwork {
    pub fn new(
        topology: Topology,
        composition: &AlgorithmComposition,
        radio: RadioModel,
        seed: u64,
        energy: EnergyModel,
    ) -> Result<Self, CompositionError> {
        Self::with_nodes(topology, composition, radio, seed, |id| NodeInfo {
            energy: energy.energy(seed, id),
            ..NodeInfo::new(id)
        })
    }

    /// Like [`ClusterNetwork::new`] with caller-supplied node attributes.
    pub fn with_nodes(
        topology: Topology,
        composition: &AlgorithmComposition,
        radio: RadioModel,
        seed: u64,
        mut info: impl FnMut(NodeId) -> NodeInfo,
    ) -> Result<Self, CompositionError> {
        composition.validate()?;
        let sim = Simulator::new(topology, radio, seed, |id| ClusterNode::new(info(id), composition, seed));
        Ok(ClusterNetwork { sim, composition: composition.clone() })
    }

    pub fn composition(&self) -> &AlgorithmComposition {
        &self.composition
    }

    pub fn sim(&self) -> &Simulator<ClusterNode> {
        &self.sim
    }

    pub fn sim_mut(&mut self) -> &mut Simulator<ClusterNode> {
        &mut self.sim
    }

    pub fn topology(&self) -> &Topology {
        self.sim.topology()
    }

    pub fn node(&self, id: NodeId) -> &ClusterNode {
        self.sim.node(id).unwrap_or_else(|| panic!("unknown node {id}"))
    }

    pub fn node_mut(&mut self, id: NodeId) -> &mut ClusterNode {
        self.sim.node_mut(id).unwrap_or_else(|| panic!("unknown node {id}"))
    }

    pub fn nodes(&self) -> impl Iterator<Item = &ClusterNode> + '_ {
        self.sim.processes().map(|(_, n)| n)
    }

    pub fn enable(&mut self, id: NodeId) {
        self.sim.with_node(id, |node, cx| node.enable(cx));
    }

    pub fn enable_all(&mut self) {
        let ids: Vec<NodeId> = self.topology().ids().collect();
        for id in ids {
            self.enable(id);
        }
    }

    /// Steps until no message or timer is pending; returns the final round.
    pub fn run_to_quiescence(&mut self, max_rounds: u64) -> Result<u64, NotQuiescent> {
        match self.sim.run_until_quiescent(max_rounds) {
            Some(_) => Ok(self.sim.round()),
            None => Err(NotQuiescent { rounds: self.sim.round() }),
        }
    }

    pub fn run_rounds(&mut self, rounds: u64) {
        for _ in 0..rounds {
            self.sim.step_round();
        }
    }

    /// Current heads, by orphan promotion or election.
    pub fn heads(&self) -> BTreeSet<NodeId> {
        self.nodes().filter(|n| n.state().role == Role::Head).map(|n| n.id()).collect()
    }

    /// Heads chosen by the CHD in the current formation.
    pub fn elected_heads(&self) -> BTreeSet<NodeId> {
        self.nodes().filter(|n| n.is_elected_head()).map(|n| n.id()).collect()
    }

    /// Every cluster a node belongs to: the MOCA head list where kept,
    /// otherwise the primary cluster alone.
    pub fn memberships(&self, id: NodeId) -> BTreeSet<ClusterId> {
        let node = self.node(id);
        let state = node.state();
        if !state.role.is_clustered() {
            return BTreeSet::new();
        }
        match node.moca() {
            Some(m) if !state.is_head() && !m.my_heads.is_empty() => m.my_heads.clone(),
            _ => BTreeSet::from([state.cluster_id]),
        }
    }

    /// Cluster id → nodes in it (heads included), over all memberships.
    pub fn clusters(&self) -> BTreeMap<ClusterId, BTreeSet<NodeId>> {
        let mut out: BTreeMap<ClusterId, BTreeSet<NodeId>> = BTreeMap::new();
        for id in self.topology().ids() {
            for c in self.memberships(id) {
                out.entry(c).or_default().insert(id);
            }
        }
        out
    }
}
