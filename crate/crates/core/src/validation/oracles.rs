//! Brute-force reference computations over a topology. None of these look at
//! protocol state or messages; they are what a central observer with the whole
//! graph would compute.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rand::Rng;

use crate::sim::rng::{self, Stream};
use crate::sim::Topology;
use crate::{ClusterId, NodeId};

/// Hop distance from `src` to every node reachable within `limit` hops.
pub fn bfs_within(topo: &Topology, src: NodeId, limit: usize) -> BTreeMap<NodeId, usize> {
    let mut dist = BTreeMap::from([(src, 0)]);
    let mut queue = VecDeque::from([src]);
    while let Some(u) = queue.pop_front() {
        let du = dist[&u];
        if du == limit {
            continue;
        }
        for &v in topo.neighbors(u) {
            if !dist.contains_key(&v) {
                dist.insert(v, du + 1);
                queue.push_back(v);
            }
        }
    }
    dist
}

/// Nodes whose (attribute, id) is the smallest in their closed k-hop
/// neighbourhood.
pub fn attr_heads(topo: &Topology, attribute: impl Fn(NodeId) -> u32, k: usize) -> BTreeSet<NodeId> {
    topo.ids()
        .filter(|&u| {
            let own = (attribute(u), u);
            bfs_within(topo, u, k).keys().all(|&v| v == u || own < (attribute(v), v))
        })
        .collect()
}

/// Heads drawn by the probabilistic election in a node's first formation.
pub fn prob_heads(topo: &Topology, seed: u64, p: f64) -> BTreeSet<NodeId> {
    topo.ids().filter(|&id| rng::stream(seed, Stream::Election, id).gen::<f64>() < p).collect()
}

/// Central replay of d rounds of floodmax and d rounds of floodmin followed
/// by the max-min selection rules. Maps every node to its elected head.
pub fn maxmind_heads(topo: &Topology, d: usize) -> BTreeMap<NodeId, NodeId> {
    let ids: Vec<NodeId> = topo.ids().collect();
    let mut winner: BTreeMap<NodeId, NodeId> = ids.iter().map(|&u| (u, u)).collect();
    let mut max_log: BTreeMap<NodeId, Vec<NodeId>> = BTreeMap::new();
    let mut min_log: BTreeMap<NodeId, Vec<NodeId>> = BTreeMap::new();
    for round in 0..2 * d {
        let prev = winner.clone();
        for &u in &ids {
            let around = topo.neighbors(u).iter().map(|v| prev[v]).chain([prev[&u]]);
            let w = if round < d { around.max() } else { around.min() }.expect("closed neighbourhood");
            winner.insert(u, w);
            let log = if round < d { &mut max_log } else { &mut min_log };
            log.entry(u).or_default().push(w);
        }
    }
    ids.iter()
        .map(|&u| {
            let maxes = &max_log.get(&u).cloned().unwrap_or_default();
            let mins = &min_log.get(&u).cloned().unwrap_or_default();
            let head = if mins.contains(&u) {
                u
            } else if let Some(&pair) = mins.iter().filter(|v| maxes.contains(v)).min() {
                pair
            } else {
                maxes.iter().copied().max().unwrap_or(u)
            };
            (u, head)
        })
        .collect()
}

/// For every non-head, the heads within k hops. An empty set marks a node
/// that no head covers.
pub fn moca_memberships(
    topo: &Topology,
    heads: &BTreeSet<NodeId>,
    k: usize,
) -> BTreeMap<NodeId, BTreeSet<ClusterId>> {
    topo.ids()
        .filter(|u| !heads.contains(u))
        .map(|u| {
            let near = bfs_within(topo, u, k).into_keys().filter(|v| heads.contains(v)).collect();
            (u, near)
        })
        .collect()
}

/// Edge-cut image: for each cluster, the other clusters reachable over one
/// edge from any of its nodes.
pub fn cluster_adjacency(
    topo: &Topology,
    cluster_of: &BTreeMap<NodeId, ClusterId>,
) -> BTreeMap<ClusterId, BTreeSet<ClusterId>> {
    let mut out: BTreeMap<ClusterId, BTreeSet<ClusterId>> = BTreeMap::new();
    for (&u, &cu) in cluster_of {
        out.entry(cu).or_default();
        for v in topo.neighbors(u) {
            match cluster_of.get(v) {
                Some(&cv) if cv != cu => {
                    out.entry(cu).or_default().insert(cv);
                }
                _ => {}
            }
        }
    }
    out
}

/// Nodes adjacent to `u` that sit in a different cluster, with that cluster.
pub fn foreign_links(
    topo: &Topology,
    cluster_of: &BTreeMap<NodeId, ClusterId>,
    u: NodeId,
) -> BTreeSet<(NodeId, ClusterId)> {
    let own = cluster_of.get(&u).copied();
    topo.neighbors(u)
        .iter()
        .filter_map(|&v| cluster_of.get(&v).filter(|&&c| Some(c) != own).map(|&c| (v, c)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::PlacedNode;

    fn path(ids: &[NodeId]) -> Topology {
        let nodes = ids.iter().enumerate().map(|(i, &id)| PlacedNode { id, x: i as f64 * 10.0, y: 0.0 }).collect();
        Topology::new(nodes, 15.0).unwrap()
    }

    #[test]
    fn attr_heads_on_a_path() {
        let t = path(&[4, 2, 7, 9, 1, 5]);
        assert_eq!(attr_heads(&t, |id| id, 1), BTreeSet::from([1, 2]));
        assert_eq!(attr_heads(&t, |id| id, 2), BTreeSet::from([1, 2]));
        assert_eq!(attr_heads(&t, |id| id, 3), BTreeSet::from([1]));
    }

    #[test]
    fn maxmind_star_elects_the_centre() {
        let nodes = [(5, 0.0, 0.0), (1, 10.0, 0.0), (2, -10.0, 0.0), (3, 0.0, 10.0)]
            .iter()
            .map(|&(id, x, y)| PlacedNode { id, x, y })
            .collect();
        let t = Topology::new(nodes, 12.0).unwrap();
        let heads = maxmind_heads(&t, 1);
        assert!(heads.values().all(|&h| h == 5));
    }

    #[test]
    fn moca_and_edge_cut() {
        let t = path(&[1, 2, 3, 4, 5]);
        let m = moca_memberships(&t, &BTreeSet::from([1, 5]), 2);
        assert_eq!(m[&3], BTreeSet::from([1, 5]));
        assert_eq!(m[&2], BTreeSet::from([1]));
        let cluster_of = BTreeMap::from([(1, 1), (2, 1), (3, 1), (4, 5), (5, 5)]);
        let adj = cluster_adjacency(&t, &cluster_of);
        assert_eq!(adj[&1], BTreeSet::from([5]));
        assert_eq!(adj[&5], BTreeSet::from([1]));
        assert_eq!(foreign_links(&t, &cluster_of, 3), BTreeSet::from([(4, 5)]));
    }
}
