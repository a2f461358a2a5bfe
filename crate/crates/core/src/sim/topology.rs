//! Node placement and unit-disk adjacency.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::Rng;
use thiserror::Error;

use super::rng::{self, Stream};
use crate::NodeId;

#[derive(Debug, Error)]
pub enum TopologyError {
    #[error("invalid topology spec: {0}")]
    InvalidSpec(String),
    #[error("duplicate node id {0}")]
    DuplicateId(NodeId),
    #[error("topology file line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("{path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlacedNode {
    pub id: NodeId,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TopologyKind {
    /// World side derived from the target mean neighbour count.
    FixedDensity { density: f64 },
    /// Square world of a fixed side; density grows with node count.
    FixedDiameter { world_side: f64 },
    /// Positions read from a topology file.
    File { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TopologySpec {
    pub kind: TopologyKind,
    pub node_count: usize,
    pub comm_range: f64,
    pub seed: u64,
}

impl TopologySpec {
    /// Side of the square world this spec places nodes in, if it is generated.
    pub fn world_side(&self) -> Option<f64> {
        match &self.kind {
            TopologyKind::FixedDensity { density } => {
                Some((PI * self.comm_range * self.comm_range * self.node_count as f64 / density).sqrt())
            }
            TopologyKind::FixedDiameter { world_side } => Some(*world_side),
            TopologyKind::File { .. } => None,
        }
    }
}

pub fn build_topology(spec: &TopologySpec) -> Result<Topology, TopologyError> {
    if let TopologyKind::File { path } = &spec.kind {
        return Topology::load(path);
    }
    if spec.node_count == 0 {
        return Err(TopologyError::InvalidSpec("node_count must be at least 1".into()));
    }
    if !(spec.comm_range > 0.0) {
        return Err(TopologyError::InvalidSpec(format!("comm_range must be positive, got {}", spec.comm_range)));
    }
    if let TopologyKind::FixedDensity { density } = spec.kind {
        if !(density > 0.0) {
            return Err(TopologyError::InvalidSpec(format!("density must be positive, got {density}")));
        }
        if spec.node_count > 1 && density >= spec.node_count as f64 {
            return Err(TopologyError::InvalidSpec(format!(
                "density {density} must be below node_count {}",
                spec.node_count
            )));
        }
    }
    let side = spec.world_side().unwrap_or(0.0);
    if !(side > 0.0) || !side.is_finite() {
        return Err(TopologyError::InvalidSpec(format!("implied world side {side} is not positive")));
    }
    let nodes = (0..spec.node_count as NodeId)
        .map(|id| {
            let mut r = rng::stream(spec.seed, Stream::Placement, id);
            PlacedNode { id, x: r.gen::<f64>() * side, y: r.gen::<f64>() * side }
        })
        .collect();
    let mut topo = Topology::new(nodes, spec.comm_range)?;
    topo.world_side = Some(side);
    Ok(topo)
}

#[derive(Debug, Clone)]
pub struct Topology {
    nodes: Vec<PlacedNode>,
    index: HashMap<NodeId, usize>,
    comm_range: f64,
    world_side: Option<f64>,
    adjacency: Vec<Vec<NodeId>>,
}

impl Topology {
    /// Builds the unit-disk graph over `nodes`. Nodes are kept sorted by id.
    pub fn new(mut nodes: Vec<PlacedNode>, comm_range: f64) -> Result<Topology, TopologyError> {
        if !(comm_range > 0.0) {
            return Err(TopologyError::InvalidSpec(format!("comm_range must be positive, got {comm_range}")));
        }
        nodes.sort_by_key(|n| n.id);
        if let Some(w) = nodes.windows(2).find(|w| w[0].id == w[1].id) {
            return Err(TopologyError::DuplicateId(w[0].id));
        }
        let index = nodes.iter().enumerate().map(|(i, n)| (n.id, i)).collect();
        let adjacency = unit_disk_adjacency(&nodes, comm_range);
        Ok(Topology { nodes, index, comm_range, world_side: None, adjacency })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn comm_range(&self) -> f64 {
        self.comm_range
    }

    pub fn world_side(&self) -> Option<f64> {
        self.world_side
    }

    pub fn nodes(&self) -> &[PlacedNode] {
        &self.nodes
    }

    pub fn ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes.iter().map(|n| n.id)
    }

    pub fn index_of(&self, id: NodeId) -> Option<usize> {
        self.index.get(&id).copied()
    }

    pub fn contains(&self, id: NodeId) -> bool {
        self.index.contains_key(&id)
    }

    pub fn node(&self, id: NodeId) -> Option<&PlacedNode> {
        self.index_of(id).map(|i| &self.nodes[i])
    }

    /// Neighbours of `id` in ascending id order. Unknown ids have none.
    pub fn neighbors(&self, id: NodeId) -> &[NodeId] {
        self.index_of(id).map(|i| self.adjacency[i].as_slice()).unwrap_or(&[])
    }

    pub fn neighbors_at(&self, index: usize) -> &[NodeId] {
        &self.adjacency[index]
    }

    pub fn are_adjacent(&self, a: NodeId, b: NodeId) -> bool {
        self.neighbors(a).binary_search(&b).is_ok()
    }

    pub fn distance(&self, a: NodeId, b: NodeId) -> Option<f64> {
        let (p, q) = (self.node(a)?, self.node(b)?);
        Some((p.x - q.x).hypot(p.y - q.y))
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn mean_degree(&self) -> f64 {
        if self.nodes.is_empty() {
            return 0.0;
        }
        2.0 * self.edge_count() as f64 / self.nodes.len() as f64
    }

    /// Hop distance from `src` to every reachable node (BFS).
    pub fn hop_distances(&self, src: NodeId) -> HashMap<NodeId, usize> {
        self.hop_distances_bounded(src, usize::MAX)
    }

    pub fn hop_distances_bounded(&self, src: NodeId, limit: usize) -> HashMap<NodeId, usize> {
        let mut dist = HashMap::new();
        if !self.contains(src) {
            return dist;
        }
        dist.insert(src, 0);
        let mut queue = VecDeque::from([src]);
        while let Some(u) = queue.pop_front() {
            let du = dist[&u];
            if du >= limit {
                continue;
            }
            for &v in self.neighbors(u) {
                if !dist.contains_key(&v) {
                    dist.insert(v, du + 1);
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    /// Nodes at graph distance 1..=k from `node`.
    pub fn k_hop_neighbors(&self, node: NodeId, k: usize) -> BTreeSet<NodeId> {
        self.hop_distances_bounded(node, k)
            .into_iter()
            .filter(|&(v, d)| v != node && d <= k)
            .map(|(v, _)| v)
            .collect()
    }

    /// Fraction of nodes in the largest connected component.
    pub fn giant_component_fraction(&self) -> f64 {
        if self.nodes.is_empty() {
            return 0.0;
        }
        let mut seen = vec![false; self.nodes.len()];
        let mut best = 0usize;
        for start in 0..self.nodes.len() {
            if seen[start] {
                continue;
            }
            seen[start] = true;
            let mut size = 0;
            let mut stack = vec![start];
            while let Some(i) = stack.pop() {
                size += 1;
                for v in &self.adjacency[i] {
                    let j = self.index[v];
                    if !seen[j] {
                        seen[j] = true;
                        stack.push(j);
                    }
                }
            }
            best = best.max(size);
        }
        best as f64 / self.nodes.len() as f64
    }

    pub fn is_connected(&self) -> bool {
        self.giant_component_fraction() == 1.0
    }

    /// Renders the `# range <r>` / `<id> <x> <y>` text format.
    pub fn to_file_string(&self) -> String {
        let mut out = format!("# range {}\n", self.comm_range);
        for n in &self.nodes {
            let _ = writeln!(out, "{} {} {}", n.id, n.x, n.y);
        }
        out
    }

    pub fn parse(text: &str) -> Result<Topology, TopologyError> {
        let mut range = None;
        let mut nodes = Vec::new();
        let mut ids = BTreeSet::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            let lineno = i + 1;
            if line.is_empty() {
                continue;
            }
            if let Some(comment) = line.strip_prefix('#') {
                let mut parts = comment.split_whitespace();
                if parts.next() == Some("range") {
                    let r = parts
                        .next()
                        .ok_or_else(|| TopologyError::Parse { line: lineno, msg: "missing range value".into() })?;
                    range = Some(parse_num::<f64>(r, lineno)?);
                }
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 3 {
                return Err(TopologyError::Parse {
                    line: lineno,
                    msg: format!("expected `<id> <x> <y>`, got {} fields", fields.len()),
                });
            }
            let id = parse_num::<NodeId>(fields[0], lineno)?;
            if !ids.insert(id) {
                return Err(TopologyError::DuplicateId(id));
            }
            nodes.push(PlacedNode { id, x: parse_num(fields[1], lineno)?, y: parse_num(fields[2], lineno)? });
        }
        let range = range.ok_or_else(|| TopologyError::Parse { line: 1, msg: "missing `# range <r>` header".into() })?;
        Topology::new(nodes, range)
    }

    pub fn load(path: &Path) -> Result<Topology, TopologyError> {
        let text = std::fs::read_to_string(path).map_err(|source| TopologyError::Io { path: path.to_owned(), source })?;
        Topology::parse(&text)
    }

    pub fn save(&self, path: &Path) -> Result<(), TopologyError> {
        std::fs::write(path, self.to_file_string()).map_err(|source| TopologyError::Io { path: path.to_owned(), source })
    }
}

fn parse_num<T: std::str::FromStr>(s: &str, line: usize) -> Result<T, TopologyError> {
    s.parse().map_err(|_| TopologyError::Parse { line, msg: format!("bad number `{s}`") })
}

/// Grid-bucketed unit-disk construction; cells are one range wide so only the
/// 3x3 block around a node needs checking.
fn unit_disk_adjacency(nodes: &[PlacedNode], range: f64) -> Vec<Vec<NodeId>> {
    let r2 = range * range;
    let cell = |v: f64| (v / range).floor() as i64;
    let mut grid: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    for (i, n) in nodes.iter().enumerate() {
        grid.entry((cell(n.x), cell(n.y))).or_default().push(i);
    }
    nodes
        .iter()
        .enumerate()
        .map(|(i, n)| {
            let (cx, cy) = (cell(n.x), cell(n.y));
            let mut adj = Vec::new();
            for dx in -1..=1 {
                for dy in -1..=1 {
                    let Some(bucket) = grid.get(&(cx + dx, cy + dy)) else { continue };
                    for &j in bucket {
                        if j == i {
                            continue;
                        }
                        let m = &nodes[j];
                        let (ex, ey) = (n.x - m.x, n.y - m.y);
                        if ex * ex + ey * ey <= r2 {
                            adj.push(m.id);
                        }
                    }
                }
            }
            adj.sort_unstable();
            adj
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path(n: u32) -> Topology {
        Topology::new((0..n).map(|i| PlacedNode { id: i, x: i as f64 * 10.0, y: 0.0 }).collect(), 10.0).unwrap()
    }

    #[test]
    fn single_node_density_topology_is_isolated() {
        let spec = TopologySpec {
            kind: TopologyKind::FixedDensity { density: 8.0 },
            node_count: 1,
            comm_range: 20.0,
            seed: 3,
        };
        let t = build_topology(&spec).unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t.edge_count(), 0);
    }

    #[test]
    fn file_nodes_out_of_range_have_no_edge() {
        let t = Topology::parse("# range 20\n0 0 0\n1 0 25\n").unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t.edge_count(), 0);
    }

    #[test]
    fn boundary_distance_is_adjacent() {
        let t = Topology::parse("# range 20\n0 0 0\n1 0 20\n").unwrap();
        assert!(t.are_adjacent(0, 1));
    }

    #[test]
    fn rejects_bad_specs_and_files() {
        assert!(matches!(Topology::parse("# range 5\n1 0 0\n1 1 1\n"), Err(TopologyError::DuplicateId(1))));
        assert!(matches!(Topology::parse("1 0 0\n"), Err(TopologyError::Parse { .. })));
        assert!(matches!(Topology::parse("# range 5\n1 0\n"), Err(TopologyError::Parse { line: 2, .. })));
        let bad = TopologySpec {
            kind: TopologyKind::FixedDiameter { world_side: 0.0 },
            node_count: 5,
            comm_range: 1.0,
            seed: 0,
        };
        assert!(matches!(build_topology(&bad), Err(TopologyError::InvalidSpec(_))));
        let dense = TopologySpec { kind: TopologyKind::FixedDensity { density: 10.0 }, ..bad.clone() };
        assert!(matches!(build_topology(&dense), Err(TopologyError::InvalidSpec(_))));
        let no_nodes = TopologySpec { node_count: 0, ..dense };
        assert!(build_topology(&no_nodes).is_err());
    }

    #[test]
    fn k_hop_on_path() {
        let t = path(3);
        assert!(t.k_hop_neighbors(0, 0).is_empty());
        assert_eq!(t.k_hop_neighbors(0, 2), BTreeSet::from([1, 2]));
        assert_eq!(t.k_hop_neighbors(0, 1), BTreeSet::from([1]));
    }

    #[test]
    fn file_format_round_trips() {
        let spec = TopologySpec {
            kind: TopologyKind::FixedDiameter { world_side: 50.0 },
            node_count: 30,
            comm_range: 12.0,
            seed: 9,
        };
        let t = build_topology(&spec).unwrap();
        let back = Topology::parse(&t.to_file_string()).unwrap();
        assert_eq!(back.nodes(), t.nodes());
        assert_eq!(back.edge_count(), t.edge_count());
    }

    #[test]
    fn same_seed_same_topology() {
        let spec = TopologySpec {
            kind: TopologyKind::FixedDensity { density: 8.0 },
            node_count: 200,
            comm_range: 20.0,
            seed: 77,
        };
        let a = build_topology(&spec).unwrap();
        let b = build_topology(&spec).unwrap();
        assert_eq!(a.nodes(), b.nodes());
        assert_eq!(a.to_file_string(), b.to_file_string());
    }
}
