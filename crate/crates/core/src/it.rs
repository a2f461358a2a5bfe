//! Iterator modules: NORM (single-cluster tables), MOCA_IT (overlapping
//! membership) and MAXMIND_IT (gateway tables plus convergecast).

use std::collections::{BTreeMap, BTreeSet};

use crate::cluster::contracts::NeighborIterator;
use crate::cluster::node::Shared;
use crate::cluster::ClusterState;
use crate::sim::{Context, Destination};
use crate::wire::{decode_cluster_list, encode_cluster_list, MsgType, WireMessage, MAX_LISTED_IDS};
use crate::{ClusterId, NodeId};

/// Neighbour classification plus the node's place in its cluster tree.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MembershipTable {
    pub cluster_neighbors: BTreeSet<NodeId>,
    pub non_cluster_neighbors: BTreeSet<NodeId>,
    pub unexamined_neighbors: BTreeSet<NodeId>,
    pub parent: NodeId,
    pub children: BTreeSet<NodeId>,
    /// Every node that joined this head's cluster (heads only).
    pub members: BTreeSet<NodeId>,
    /// Last cluster heard from each neighbour; `None` when only a refusal was
    /// seen.
    known: BTreeMap<NodeId, Option<ClusterId>>,
    /// Neighbours that announced themselves as self-promoted singletons and
    /// may still be invited into a cluster.
    orphans: BTreeSet<NodeId>,
    /// Hop distance to its head each neighbour last announced.
    announced_hops: BTreeMap<NodeId, u8>,
    reported_foreign: BTreeSet<(NodeId, ClusterId)>,
    yielded: BTreeSet<NodeId>,
}

impl MembershipTable {
    pub fn new(own: NodeId, neighbors: &[NodeId]) -> Self {
        MembershipTable {
            unexamined_neighbors: neighbors.iter().copied().collect(),
            parent: own,
            ..MembershipTable::default()
        }
    }

    /// Every neighbour the table knows of.
    pub fn neighbors(&self) -> BTreeSet<NodeId> {
        let mut all = self.cluster_neighbors.clone();
        all.extend(&self.non_cluster_neighbors);
        all.extend(&self.unexamined_neighbors);
        all
    }

    /// Records the cluster a neighbour announced. Ids never seen before are
    /// kept (late discovery).
    pub fn observe(&mut self, neighbor: NodeId, cluster: ClusterId, hops: u8, orphan: bool) {
        self.known.insert(neighbor, Some(cluster));
        self.announced_hops.insert(neighbor, hops);
        if orphan {
            self.orphans.insert(neighbor);
        } else {
            self.orphans.remove(&neighbor);
        }
    }

    /// A neighbour refused our cluster or never answered an invitation.
    pub fn mark_other(&mut self, neighbor: NodeId) {
        let announced = self.known.entry(neighbor).or_insert(None).is_some();
        if !announced && !self.children.contains(&neighbor) {
            self.unexamined_neighbors.remove(&neighbor);
            self.cluster_neighbors.remove(&neighbor);
            self.non_cluster_neighbors.insert(neighbor);
        }
    }

    pub fn add_child(&mut self, child: NodeId) {
        self.children.insert(child);
        self.unexamined_neighbors.remove(&child);
        self.non_cluster_neighbors.remove(&child);
        self.cluster_neighbors.insert(child);
    }

    pub fn add_member(&mut self, member: NodeId) -> bool {
        self.members.insert(member)
    }

    pub fn cluster_of(&self, neighbor: NodeId) -> Option<ClusterId> {
        self.known.get(&neighbor).copied().flatten()
    }

    pub fn announced_hops(&self, neighbor: NodeId) -> Option<u8> {
        self.announced_hops.get(&neighbor).copied()
    }

    /// Moves neighbours between the three sets given the node's own state and
    /// returns neighbour/cluster pairs that became foreign for the first time.
    pub fn reclassify(&mut self, own: &ClusterState) -> Vec<(NodeId, ClusterId)> {
        let mut newly_foreign = Vec::new();
        for (&n, &c) in &self.known {
            self.unexamined_neighbors.remove(&n);
            self.cluster_neighbors.remove(&n);
            self.non_cluster_neighbors.remove(&n);
            let same = own.role.is_clustered() && c == Some(own.cluster_id);
            let is_parent = own.role.is_clustered() && !own.is_head() && n == own.parent;
            if same || self.children.contains(&n) || is_parent {
                self.cluster_neighbors.insert(n);
            } else {
                self.non_cluster_neighbors.insert(n);
                if let (true, Some(c)) = (own.role.is_clustered(), c) {
                    if self.reported_foreign.insert((n, c)) {
                        newly_foreign.push((n, c));
                    }
                }
            }
        }
        if own.role.is_clustered() && !own.is_head() {
            let p = own.parent;
            if self.unexamined_neighbors.remove(&p) | self.non_cluster_neighbors.remove(&p) {
                self.cluster_neighbors.insert(p);
            }
        }
        newly_foreign
    }

    /// (neighbour, cluster) pairs for neighbours announced in another cluster.
    pub fn foreign_links(&self, own: &ClusterState) -> BTreeSet<(NodeId, ClusterId)> {
        if !own.role.is_clustered() {
            return BTreeSet::new();
        }
        self.known
            .iter()
            .filter_map(|(&n, &c)| c.filter(|&c| c != own.cluster_id).map(|c| (n, c)))
            .collect()
    }

    /// Next unexamined neighbour in ascending id order; each id is yielded at
    /// most once per epoch. Orphaned neighbours count as unexamined.
    pub fn next_neighbor(&mut self) -> Option<NodeId> {
        let rescuable = self.non_cluster_neighbors.intersection(&self.orphans);
        let next = self
            .unexamined_neighbors
            .iter()
            .chain(rescuable)
            .copied()
            .filter(|n| !self.yielded.contains(n))
            .min()?;
        self.yielded.insert(next);
        Some(next)
    }
}

/// Overlapping-membership tables.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MocaTables {
    /// Heads this node belongs to (members only).
    pub my_heads: BTreeSet<ClusterId>,
    /// Clusters overlapping or adjacent to this head's cluster (heads only).
    pub adjacent_clusters: BTreeSet<ClusterId>,
}

/// Links to foreign clusters, and for heads the aggregate learnt by convergecast.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GatewayTable {
    pub foreign_links: BTreeSet<(NodeId, ClusterId)>,
    /// Heads only: foreign clusters adjacent to any node of this cluster.
    pub cluster_links: BTreeSet<ClusterId>,
}

impl GatewayTable {
    pub fn foreign_clusters(&self) -> BTreeSet<ClusterId> {
        self.foreign_links.iter().map(|&(_, c)| c).collect()
    }
}

#[derive(Debug, Default)]
pub struct NormIterator {
    table: MembershipTable,
    gateway: GatewayTable,
}

impl NormIterator {
    pub fn new() -> Self {
        NormIterator::default()
    }
}

impl NeighborIterator for NormIterator {
    fn name(&self) -> &'static str {
        "norm"
    }

    fn reset(&mut self, own: NodeId, neighbors: &[NodeId]) {
        self.table = MembershipTable::new(own, neighbors);
        self.gateway = GatewayTable::default();
    }

    fn table(&self) -> &MembershipTable {
        &self.table
    }

    fn table_mut(&mut self) -> &mut MembershipTable {
        &mut self.table
    }

    fn next_neighbor(&mut self) -> Option<NodeId> {
        self.table.next_neighbor()
    }

    fn gateway(&self) -> &GatewayTable {
        &self.gateway
    }

    fn gateway_mut(&mut self) -> &mut GatewayTable {
        &mut self.gateway
    }
}

#[derive(Debug, Default)]
pub struct MocaIterator {
    norm: NormIterator,
    moca: MocaTables,
}

impl MocaIterator {
    pub fn new() -> Self {
        MocaIterator::default()
    }
}

impl NeighborIterator for MocaIterator {
    fn name(&self) -> &'static str {
        "moca_it"
    }

    fn reset(&mut self, own: NodeId, neighbors: &[NodeId]) {
        self.norm.reset(own, neighbors);
        self.moca = MocaTables::default();
    }

    fn table(&self) -> &MembershipTable {
        self.norm.table()
    }

    fn table_mut(&mut self) -> &mut MembershipTable {
        self.norm.table_mut()
    }

    fn next_neighbor(&mut self) -> Option<NodeId> {
        self.norm.next_neighbor()
    }

    fn moca(&self) -> Option<&MocaTables> {
        Some(&self.moca)
    }

    fn moca_mut(&mut self) -> Option<&mut MocaTables> {
        Some(&mut self.moca)
    }

    fn gateway(&self) -> &GatewayTable {
        self.norm.gateway()
    }

    fn gateway_mut(&mut self) -> &mut GatewayTable {
        self.norm.gateway_mut()
    }
}

/// NORM plus the convergecast that tells each head which foreign clusters
/// touch its cluster.
#[derive(Debug, Default)]
pub struct MaxMindIterator {
    norm: NormIterator,
    /// Cluster ids waiting to be forwarded, per destination head.
    pending: BTreeMap<ClusterId, BTreeSet<ClusterId>>,
    forwarded: BTreeMap<ClusterId, BTreeSet<ClusterId>>,
}

impl MaxMindIterator {
    pub fn new() -> Self {
        MaxMindIterator::default()
    }
}

impl NeighborIterator for MaxMindIterator {
    fn name(&self) -> &'static str {
        "maxmind_it"
    }

    fn reset(&mut self, own: NodeId, neighbors: &[NodeId]) {
        self.norm.reset(own, neighbors);
        self.pending.clear();
        self.forwarded.clear();
    }

    fn table(&self) -> &MembershipTable {
        self.norm.table()
    }

    fn table_mut(&mut self) -> &mut MembershipTable {
        self.norm.table_mut()
    }

    fn next_neighbor(&mut self) -> Option<NodeId> {
        self.norm.next_neighbor()
    }

    fn gateway(&self) -> &GatewayTable {
        self.norm.gateway()
    }

    fn gateway_mut(&mut self) -> &mut GatewayTable {
        self.norm.gateway_mut()
    }

    fn on_message(&mut self, net: &mut Context<'_>, core: &mut Shared, msg: &WireMessage) {
        let ids = match decode_cluster_list(&msg.payload) {
            Ok(ids) => ids,
            Err(_) => {
                core.counters.malformed_payload += 1;
                return;
            }
        };
        let own = core.state;
        if own.is_head() && msg.cluster_id == own.cluster_id {
            let before = self.gateway().cluster_links.len();
            self.gateway_mut().cluster_links.extend(ids);
            if self.gateway().cluster_links.len() != before {
                core.touch(net);
            }
        } else {
            self.pending.entry(msg.cluster_id).or_default().extend(ids);
        }
    }

    fn on_round_end(&mut self, net: &mut Context<'_>, core: &mut Shared) {
        let own = core.state;
        if own.role.is_clustered() {
            let observed = self.gateway().foreign_clusters();
            if own.is_head() {
                self.gateway_mut().cluster_links.extend(observed);
            } else if !observed.is_empty() {
                self.pending.entry(own.cluster_id).or_default().extend(observed);
            }
        }
        for (head, ids) in std::mem::take(&mut self.pending) {
            let sent = self.forwarded.entry(head).or_default();
            let fresh: Vec<ClusterId> = ids.difference(sent).copied().collect();
            if fresh.is_empty() {
                continue;
            }
            let Some(&(via, hops)) = core.next_hop.get(&head) else {
                continue;
            };
            sent.extend(&fresh);
            for chunk in fresh.chunks(MAX_LISTED_IDS) {
                let msg = WireMessage::new(MsgType::Convergecast, core.info.id, head, hops)
                    .with_payload(encode_cluster_list(chunk));
                core.send(net, Destination::Node(via), &msg);
            }
        }
    }
}
