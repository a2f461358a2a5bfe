//! Runs one configured experiment, seed by seed.

use std::io::Write;

use rayon::prelude::*;

use crate::cluster::{AlgorithmComposition, CompositionError, JdKind};
use crate::experiment::config::ExperimentConfig;
use crate::experiment::metrics::{measure, MetricsRecord};
use crate::network::ClusterNetwork;
use crate::sim::{build_topology, RadioModel, Topology, TopologyError};

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error(transparent)]
    Composition(#[from] CompositionError),
    #[error("seed {seed}: network still active after {rounds} rounds")]
    NotQuiescent { seed: u64, rounds: u64, record: Box<MetricsRecord> },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub record: MetricsRecord,
    /// Largest number of rounds any node spent in head decision.
    pub chd_rounds: u64,
    pub trace_hash: u64,
    pub quiescent: bool,
    /// Fraction of nodes in the largest connected component.
    pub giant_component: f64,
}

/// Hard round budget for one formation. DFS gets extra room for its
/// sequential traversal, which is linear in the size of the graph.
pub fn round_cap(comp: &AlgorithmComposition, topology: &Topology) -> u64 {
    let k = comp.params.k as u64;
    let d = comp.params.d as u64;
    let base = 10 * (2 * k + 2) + 2 * d;
    match comp.jd {
        JdKind::Dfs => base + 6 * (2 * topology.edge_count() as u64 + topology.len() as u64),
        _ => base,
    }
}

/// One seed of `cfg`, optionally tracing every frame to `trace`.
pub fn run_seed(
    cfg: &ExperimentConfig,
    seed: u64,
    trace: Option<Box<dyn Write>>,
) -> Result<RunOutcome, ExperimentError> {
    let topology = build_topology(&cfg.topology.spec(seed))?;
    let comp = cfg.composition();
    let radio = if cfg.loss > 0.0 { RadioModel::lossy(cfg.loss) } else { RadioModel::lossless() };
    let giant_component = topology.giant_component_fraction();
    let cap = round_cap(&comp, &topology);
    let mut net = ClusterNetwork::new(topology, &comp, radio, seed, cfg.energy)?;
    if let Some(sink) = trace {
        net.sim_mut().set_trace_sink(sink);
    }
    net.enable_all();
    let algorithm = cfg.algorithm.name();
    let (rounds, quiescent) = if comp.params.t > 0 {
        let rounds = comp.params.t * cfg.formations as u64 - 1;
        net.run_rounds(rounds);
        (rounds, false)
    } else {
        match net.run_to_quiescence(cap) {
            Ok(r) => (r, true),
            Err(e) => {
                let record = measure(&net, &algorithm, seed, e.rounds);
                return Err(ExperimentError::NotQuiescent { seed, rounds: e.rounds, record: Box::new(record) });
            }
        }
    };
    let record = measure(&net, &algorithm, seed, rounds);
    let chd_rounds = net.nodes().filter_map(|n| n.chd_rounds()).max().unwrap_or(0);
    Ok(RunOutcome { record, chd_rounds, trace_hash: net.sim().trace_hash(), quiescent, giant_component })
}

/// Every configured seed, in seed order.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<RunOutcome>, ExperimentError> {
    cfg.validate().map_err(|e| ExperimentError::Invalid(e.to_string()))?;
    cfg.seeds.par_iter().map(|&seed| run_seed(cfg, seed, None)).collect()
}
