//! Intra- and inter-cluster routing over a formed clustering.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::network::ClusterNetwork;
use crate::sim::Topology;
use crate::{ClusterId, NodeId};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RouteMode {
    Intra,
    Inter,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RouteResult {
    pub path: Vec<NodeId>,
    pub hop_count: usize,
    pub mode: RouteMode,
    /// Clusters traversed, source cluster first.
    pub cluster_path: Vec<ClusterId>,
}

impl RouteResult {
    fn new(path: Vec<NodeId>, mode: RouteMode, cluster_path: Vec<ClusterId>) -> Self {
        RouteResult { hop_count: path.len().saturating_sub(1), path, mode, cluster_path }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RouteError {
    #[error("node {0} is not in the network")]
    UnknownNode(NodeId),
    #[error("node {0} belongs to no cluster")]
    Unclustered(NodeId),
    #[error("nodes {src} and {dst} are in different clusters")]
    NotInCluster { src: NodeId, dst: NodeId },
    #[error("cluster {to} is unreachable from cluster {from}")]
    Unreachable { from: ClusterId, to: ClusterId },
    #[error("node {at} has no route toward head {cluster}")]
    BrokenRoute { at: NodeId, cluster: ClusterId },
}

#[derive(Debug, Clone)]
struct NodeView {
    cluster: Option<ClusterId>,
    routes: BTreeMap<ClusterId, NodeId>,
    foreign_links: BTreeSet<(NodeId, ClusterId)>,
}

/// Routing layer over a snapshot of a formed clustering. Within a cluster,
/// packets follow next-hop pointers toward the head; between clusters, the
/// head floods a route request over the cluster graph whose edges are the
/// gateway links.
#[derive(Debug, Clone)]
pub struct ClusterRadio {
    topology: Topology,
    nodes: BTreeMap<NodeId, NodeView>,
    /// cluster → neighbouring cluster → gateway edge (inside, outside).
    graph: BTreeMap<ClusterId, BTreeMap<ClusterId, (NodeId, NodeId)>>,
    next_seq: u16,
    route_messages: u64,
}

impl ClusterRadio {
    pub fn from_network(net: &ClusterNetwork) -> Self {
        let nodes: BTreeMap<NodeId, NodeView> = net
            .nodes()
            .map(|n| {
                let s = n.state();
                let view = NodeView {
                    cluster: s.role.is_clustered().then_some(s.cluster_id),
                    routes: n.routes().iter().map(|(&c, &(via, _))| (c, via)).collect(),
                    foreign_links: n.gateway().foreign_links.clone(),
                };
                (n.id(), view)
            })
            .collect();
        let mut graph: BTreeMap<ClusterId, BTreeMap<ClusterId, (NodeId, NodeId)>> = BTreeMap::new();
        for (&u, view) in &nodes {
            let Some(cu) = view.cluster else { continue };
            for &(v, cv) in &view.foreign_links {
                let confirmed = nodes.get(&v).and_then(|n| n.cluster) == Some(cv);
                if !confirmed || cv == cu || !net.topology().are_adjacent(u, v) {
                    continue;
                }
                for (a, b, edge) in [(cu, cv, (u, v)), (cv, cu, (v, u))] {
                    let slot = graph.entry(a).or_default().entry(b).or_insert(edge);
                    *slot = (*slot).min(edge);
                }
            }
        }
        ClusterRadio { topology: net.topology().clone(), nodes, graph, next_seq: 0, route_messages: 0 }
    }

    /// Route-request messages sent by cluster-level discovery so far.
    pub fn route_messages(&self) -> u64 {
        self.route_messages
    }

    pub fn cluster_of(&self, id: NodeId) -> Result<ClusterId, RouteError> {
        self.nodes.get(&id).ok_or(RouteError::UnknownNode(id))?.cluster.ok_or(RouteError::Unclustered(id))
    }

    /// Clusters adjacent to `cluster` through at least one gateway link.
    pub fn neighbor_clusters(&self, cluster: ClusterId) -> BTreeSet<ClusterId> {
        self.graph.get(&cluster).map(|m| m.keys().copied().collect()).unwrap_or_default()
    }

    pub fn gateway_edge(&self, from: ClusterId, to: ClusterId) -> Option<(NodeId, NodeId)> {
        self.graph.get(&from)?.get(&to).copied()
    }

    /// `node`, its next hop toward `head`, ..., `head`.
    fn chain(&self, node: NodeId, head: ClusterId) -> Result<Vec<NodeId>, RouteError> {
        let mut chain = vec![node];
        let mut cur = node;
        while cur != head {
            let next = self
                .nodes
                .get(&cur)
                .and_then(|v| v.routes.get(&head))
                .copied()
                .ok_or(RouteError::BrokenRoute { at: cur, cluster: head })?;
            if chain.len() > self.nodes.len() || !self.topology.are_adjacent(cur, next) {
                return Err(RouteError::BrokenRoute { at: cur, cluster: head });
            }
            chain.push(next);
            cur = next;
        }
        Ok(chain)
    }

    /// Route between two nodes of the same cluster, up toward the head to the
    /// lowest common ancestor and back down.
    pub fn intra_route(&self, src: NodeId, dst: NodeId) -> Result<RouteResult, RouteError> {
        let cs = self.cluster_of(src)?;
        let cd = self.cluster_of(dst)?;
        if cs != cd {
            return Err(RouteError::NotInCluster { src, dst });
        }
        let path = self.tree_path(src, dst, cs)?;
        Ok(RouteResult::new(path, RouteMode::Intra, vec![cs]))
    }

    fn tree_path(&self, src: NodeId, dst: NodeId, head: ClusterId) -> Result<Vec<NodeId>, RouteError> {
        let up = self.chain(src, head)?;
        let down = self.chain(dst, head)?;
        let on_down: BTreeMap<NodeId, usize> = down.iter().enumerate().map(|(i, &n)| (n, i)).collect();
        let (i, j) = up
            .iter()
            .enumerate()
            .find_map(|(i, n)| on_down.get(n).map(|&j| (i, j)))
            .expect("both chains end at the head");
        let mut path = up[..=i].to_vec();
        path.extend(down[..j].iter().rev());
        Ok(path)
    }

    /// Floods a route request from `from` over the cluster graph, forwarding
    /// each request at most once per cluster. Returns the cluster path.
    pub fn discover(&mut self, from: ClusterId, to: ClusterId) -> Result<Vec<ClusterId>, RouteError> {
        self.next_seq = self.next_seq.wrapping_add(1);
        let mut parent: BTreeMap<ClusterId, ClusterId> = BTreeMap::new();
        let mut seen = BTreeSet::from([from]);
        let mut queue = VecDeque::from([from]);
        while let Some(c) = queue.pop_front() {
            let neighbors = self.neighbor_clusters(c);
            self.route_messages += neighbors.len() as u64;
            for n in neighbors {
                if seen.insert(n) {
                    parent.insert(n, c);
                    queue.push_back(n);
                }
            }
        }
        if !seen.contains(&to) {
            return Err(RouteError::Unreachable { from, to });
        }
        let mut path = vec![to];
        while let Some(&p) = parent.get(path.last().expect("non-empty")) {
            path.push(p);
        }
        path.reverse();
        Ok(path)
    }

    /// Route between any two clustered nodes. Same-cluster pairs use
    /// [`ClusterRadio::intra_route`].
    pub fn inter_route(&mut self, src: NodeId, dst: NodeId) -> Result<RouteResult, RouteError> {
        let cs = self.cluster_of(src)?;
        let cd = self.cluster_of(dst)?;
        if cs == cd {
            return self.intra_route(src, dst);
        }
        let clusters = self.discover(cs, cd)?;
        let mut path = self.chain(src, cs)?;
        for pair in clusters.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            let (u, v) = self.gateway_edge(a, b).expect("discovered clusters are linked");
            let mut to_gateway = self.chain(u, a)?;
            to_gateway.reverse();
            path.extend(&to_gateway[1..]);
            path.extend(self.chain(v, b)?);
        }
        let mut last = self.chain(dst, cd)?;
        last.reverse();
        path.extend(&last[1..]);
        Ok(RouteResult::new(erase_loops(path), RouteMode::Inter, clusters))
    }
}

/// Cuts every cycle out of a walk, keeping its endpoints.
fn erase_loops(walk: Vec<NodeId>) -> Vec<NodeId> {
    let mut out: Vec<NodeId> = Vec::with_capacity(walk.len());
    let mut at: BTreeMap<NodeId, usize> = BTreeMap::new();
    for n in walk {
        if let Some(&i) = at.get(&n) {
            for dropped in out.drain(i + 1..) {
                at.remove(&dropped);
            }
        } else {
            at.insert(n, out.len());
            out.push(n);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn loop_erasure_keeps_a_simple_walk() {
        assert_eq!(erase_loops(vec![1, 2, 3, 2, 4]), vec![1, 2, 4]);
        assert_eq!(erase_loops(vec![1, 2, 3, 1, 5]), vec![1, 5]);
        assert_eq!(erase_loops(vec![7]), vec![7]);
    }
}
