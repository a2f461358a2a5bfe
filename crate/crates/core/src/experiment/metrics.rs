//! Per-run metrics and their CSV encoding.

use std::collections::{BTreeSet, VecDeque};
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::network::ClusterNetwork;
use crate::wire::MsgType;
use crate::NodeId;

pub const CSV_HEADER: &str = "algorithm,seed,node_count,density,k,d,p,ch_count,avg_cluster_size,coverage_pct,\
overlap_degree,orphan_count,rounds,msgs_join_req,msgs_join_acc,msgs_join_deny,msgs_attr,msgs_resume,\
msgs_convergecast,msgs_hello";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub algorithm: String,
    pub seed: u64,
    pub node_count: usize,
    /// Measured mean neighbour count.
    pub density: f64,
    pub k: u8,
    pub d: u8,
    pub p: f64,
    pub ch_count: usize,
    pub avg_cluster_size: f64,
    pub coverage_pct: f64,
    pub overlap_degree: f64,
    pub orphan_count: usize,
    pub rounds: u64,
    pub msgs_join_req: u64,
    pub msgs_join_acc: u64,
    pub msgs_join_deny: u64,
    pub msgs_attr: u64,
    pub msgs_resume: u64,
    pub msgs_convergecast: u64,
    pub msgs_hello: u64,
}

impl MetricsRecord {
    pub fn total_messages(&self) -> u64 {
        self.msgs_join_req
            + self.msgs_join_acc
            + self.msgs_join_deny
            + self.msgs_attr
            + self.msgs_resume
            + self.msgs_convergecast
            + self.msgs_hello
    }

    /// Named numeric columns, for summaries and plots.
    pub fn numeric(&self) -> [(&'static str, f64); 10] {
        [
            ("ch_count", self.ch_count as f64),
            ("avg_cluster_size", self.avg_cluster_size),
            ("coverage_pct", self.coverage_pct),
            ("overlap_degree", self.overlap_degree),
            ("orphan_count", self.orphan_count as f64),
            ("rounds", self.rounds as f64),
            ("msgs_join_req", self.msgs_join_req as f64),
            ("msgs_join_acc", self.msgs_join_acc as f64),
            ("msgs_attr", self.msgs_attr as f64),
            ("msgs_total", self.total_messages() as f64),
        ]
    }
}

/// Percentage of nodes with an elected head within `radius` hops.
fn coverage_pct(net: &ClusterNetwork, radius: usize) -> f64 {
    let topo = net.topology();
    if topo.is_empty() {
        return 0.0;
    }
    let heads = net.elected_heads();
    let mut seen: BTreeSet<NodeId> = heads.clone();
    let mut queue: VecDeque<(NodeId, usize)> = heads.iter().map(|&h| (h, 0)).collect();
    while let Some((u, dist)) = queue.pop_front() {
        if dist == radius {
            continue;
        }
        for &v in topo.neighbors(u) {
            if seen.insert(v) {
                queue.push_back((v, dist + 1));
            }
        }
    }
    100.0 * seen.len() as f64 / topo.len() as f64
}

/// Metrics of a network at the end of a run.
pub fn measure(net: &ClusterNetwork, algorithm: &str, seed: u64, rounds: u64) -> MetricsRecord {
    let comp = net.composition();
    let params = comp.params;
    let topo = net.topology();
    let n = topo.len();
    let clusters = net.clusters();
    let memberships: usize = clusters.values().map(|m| m.len()).sum();
    let clustered = topo.ids().filter(|&id| !net.memberships(id).is_empty()).count();
    let stats = net.sim().stats();
    MetricsRecord {
        algorithm: algorithm.to_string(),
        seed,
        node_count: n,
        density: topo.mean_degree(),
        k: params.k,
        d: params.d,
        p: params.p,
        ch_count: clusters.len(),
        avg_cluster_size: if clusters.is_empty() { 0.0 } else { memberships as f64 / clusters.len() as f64 },
        coverage_pct: coverage_pct(net, comp.radius() as usize),
        overlap_degree: if clustered == 0 { 0.0 } else { memberships as f64 / clustered as f64 },
        orphan_count: net.nodes().filter(|n| n.is_orphan()).count(),
        rounds,
        msgs_join_req: stats.sent(MsgType::JoinRequest),
        msgs_join_acc: stats.sent(MsgType::JoinAccept),
        msgs_join_deny: stats.sent(MsgType::JoinDeny),
        msgs_attr: stats.sent(MsgType::Attribute),
        msgs_resume: stats.sent(MsgType::Resume),
        msgs_convergecast: stats.sent(MsgType::Convergecast),
        msgs_hello: stats.sent(MsgType::NeighborHello),
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CsvError {
    #[error("{path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv: {0}")]
    Format(#[from] csv::Error),
    #[error("unexpected csv header {0:?}")]
    Header(String),
    #[error("no records to write")]
    Empty,
}

fn to_writer<W: Write>(records: &[MetricsRecord], out: W) -> Result<(), CsvError> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// CSV text with the fixed header.
pub fn to_csv(records: &[MetricsRecord]) -> Result<String, CsvError> {
    let mut buf = Vec::new();
    if records.is_empty() {
        return Err(CsvError::Empty);
    }
    to_writer(records, &mut buf)?;
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}

pub fn write_csv(records: &[MetricsRecord], path: &Path) -> Result<(), CsvError> {
    let text = to_csv(records)?;
    std::fs::write(path, text).map_err(|source| CsvError::Io { path: path.to_path_buf(), source })
}

pub fn parse_csv(text: &str) -> Result<Vec<MetricsRecord>, CsvError> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header = r.headers()?.iter().collect::<Vec<_>>().join(",");
    if header != CSV_HEADER {
        return Err(CsvError::Header(header));
    }
    r.deserialize().map(|row| row.map_err(CsvError::from)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record() -> MetricsRecord {
        MetricsRecord {
            algorithm: "lca".into(),
            seed: 42,
            node_count: 50,
            density: 7.96,
            k: 2,
            d: 2,
            p: 0.15,
            ch_count: 9,
            avg_cluster_size: 50.0 / 9.0,
            coverage_pct: 100.0,
            overlap_degree: 1.0,
            orphan_count: 1,
            rounds: 12,
            msgs_join_req: 30,
            msgs_join_acc: 41,
            msgs_join_deny: 3,
            msgs_attr: 0,
            msgs_resume: 0,
            msgs_convergecast: 0,
            msgs_hello: 50,
        }
    }

    #[test]
    fn one_record_is_header_plus_row() {
        let text = to_csv(&[record()]).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0], CSV_HEADER);
        assert!(lines[1].starts_with("lca,42,50,7.96,2,2,0.15,9,"));
    }

    #[test]
    fn round_trips_exactly() {
        let mut b = record();
        b.algorithm = "attr+dfs+norm".into();
        b.coverage_pct = 1.0 / 3.0;
        let recs = vec![record(), b];
        assert_eq!(parse_csv(&to_csv(&recs).unwrap()).unwrap(), recs);
    }

    #[test]
    fn rejects_empty_and_foreign_header() {
        assert!(matches!(to_csv(&[]), Err(CsvError::Empty)));
        assert!(matches!(parse_csv("a,b\n1,2\n"), Err(CsvError::Header(_))));
    }

    #[test]
    fn unwritable_path_is_named() {
        let err = write_csv(&[record()], Path::new("/nonexistent/dir/out.csv")).unwrap_err();
        assert!(err.to_string().contains("/nonexistent/dir/out.csv"));
    }
}
