#![allow(dead_code)]

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::rc::Rc;

use clusterkit::cluster::{AlgorithmComposition, ChdKind, ItKind, JdKind, Parameters};
use clusterkit::experiment::round_cap;
use clusterkit::network::{ClusterNetwork, EnergyModel};
use clusterkit::sim::{build_topology, PlacedNode, RadioModel, Topology, TopologyKind, TopologySpec};
use clusterkit::{ClusterId, NodeId};

pub fn placed(nodes: &[(NodeId, f64, f64)], range: f64) -> Topology {
    let nodes = nodes.iter().map(|&(id, x, y)| PlacedNode { id, x, y }).collect();
    Topology::new(nodes, range).expect("valid topology")
}

/// Nodes 10 units apart on a line, in the given order, with range 10.
pub fn path(ids: &[NodeId]) -> Topology {
    let nodes: Vec<_> = ids.iter().enumerate().map(|(i, &id)| (id, 10.0 * i as f64, 0.0)).collect();
    placed(&nodes, 10.0)
}

/// `center` with leaves on the axes; leaves are out of each other's range.
pub fn star(center: NodeId, leaves: &[NodeId]) -> Topology {
    let spots = [(8.0, 0.0), (0.0, 8.0), (-8.0, 0.0), (0.0, -8.0), (5.7, 5.7), (-5.7, 5.7), (-5.7, -5.7)];
    let mut nodes = vec![(center, 0.0, 0.0)];
    nodes.extend(leaves.iter().zip(spots).map(|(&id, (x, y))| (id, x, y)));
    placed(&nodes, 10.0)
}

pub fn random(n: usize, density: f64, seed: u64) -> Topology {
    build_topology(&TopologySpec { kind: TopologyKind::FixedDensity { density }, node_count: n, comm_range: 20.0, seed })
        .expect("valid spec")
}

pub fn designated(heads: &[NodeId], jd: JdKind, k: u8) -> AlgorithmComposition {
    let params = Parameters { k, ..Parameters::default() };
    AlgorithmComposition::new(ChdKind::Designated(heads.iter().copied().collect()), jd, ItKind::Norm, params)
}

pub fn network(topo: Topology, comp: &AlgorithmComposition, seed: u64) -> ClusterNetwork {
    ClusterNetwork::new(topo, comp, RadioModel::lossless(), seed, EnergyModel::default()).expect("valid composition")
}

pub fn form(topo: Topology, comp: &AlgorithmComposition, seed: u64) -> ClusterNetwork {
    let cap = round_cap(comp, &topo);
    let mut net = network(topo, comp, seed);
    net.enable_all();
    net.run_to_quiescence(cap).expect("formation quiesces");
    net
}

/// Like [`form`], also returning the frame trace.
pub fn form_traced(topo: Topology, comp: &AlgorithmComposition, seed: u64) -> (ClusterNetwork, Vec<String>) {
    let cap = round_cap(comp, &topo);
    let mut net = network(topo, comp, seed);
    let buf = SharedBuf::default();
    net.sim_mut().set_trace_sink(Box::new(buf.clone()));
    net.enable_all();
    net.run_to_quiescence(cap).expect("formation quiesces");
    (net, buf.lines())
}

/// All-pairs hop distances by Floyd-Warshall over the adjacency matrix.
pub fn all_pairs(topo: &Topology) -> BTreeMap<(NodeId, NodeId), usize> {
    let ids: Vec<NodeId> = topo.ids().collect();
    let n = ids.len();
    const INF: usize = usize::MAX / 4;
    let mut d = vec![vec![INF; n]; n];
    for i in 0..n {
        d[i][i] = 0;
        for j in 0..n {
            if i != j && topo.distance(ids[i], ids[j]).unwrap() <= topo.comm_range() {
                d[i][j] = 1;
            }
        }
    }
    for m in 0..n {
        for i in 0..n {
            for j in 0..n {
                if d[i][m] + d[m][j] < d[i][j] {
                    d[i][j] = d[i][m] + d[m][j];
                }
            }
        }
    }
    let mut out = BTreeMap::new();
    for i in 0..n {
        for j in 0..n {
            if d[i][j] < INF {
                out.insert((ids[i], ids[j]), d[i][j]);
            }
        }
    }
    out
}

pub fn within(dist: &BTreeMap<(NodeId, NodeId), usize>, from: NodeId, k: usize) -> BTreeSet<NodeId> {
    dist.iter().filter(|(&(a, _), &h)| a == from && h <= k).map(|(&(_, b), _)| b).collect()
}

pub fn cluster(net: &ClusterNetwork, head: ClusterId) -> BTreeSet<NodeId> {
    net.clusters().remove(&head).unwrap_or_default()
}

/// An in-memory trace sink that can still be read after it is handed over.
#[derive(Clone, Default)]
pub struct SharedBuf(Rc<RefCell<Vec<u8>>>);

impl SharedBuf {
    pub fn lines(&self) -> Vec<String> {
        String::from_utf8(self.0.borrow().clone()).unwrap().lines().map(str::to_string).collect()
    }
}

impl Write for SharedBuf {
    fn write(&mut self, buf: &[u8]) -> std::io::Result<usize> {
        self.0.borrow_mut().extend_from_slice(buf);
        Ok(buf.len())
    }

    fn flush(&mut self) -> std::io::Result<()> {
        Ok(())
    }
}

/// Parsed `round=.. type=.. from=.. to=..` trace line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    pub round: u64,
    pub kind: String,
    pub from: NodeId,
    pub to: Option<NodeId>,
}

pub fn frames(lines: &[String]) -> Vec<Frame> {
    lines
        .iter()
        .filter_map(|l| {
            let field = |key: &str| {
                l.split_whitespace().find_map(|w| w.strip_prefix(key).and_then(|r| r.strip_prefix('=')))
            };
            Some(Frame {
                round: field("round")?.parse().ok()?,
                kind: field("type")?.to_string(),
                from: field("from")?.parse().ok()?,
                to: field("to")?.parse().ok(),
            })
        })
        .collect()
}
