mod common;

use std::collections::BTreeSet;

use clusterkit::cluster::{AlgorithmComposition, Parameters, Preset};
use clusterkit::experiment::round_cap;
use clusterkit::sim::{
    build_topology, Context, Delivery, Destination, Process, RadioModel, RoundReport, Simulator, TopologyKind, TopologySpec,
};
use clusterkit::NodeId;
use common::*;
use proptest::prelude::*;

#[derive(Default)]
struct Sink {
    heard: u64,
}

impl Process for Sink {
    fn on_message(&mut self, _cx: &mut Context<'_>, _d: &Delivery<'_>) {
        self.heard += 1;
    }

    fn on_timer(&mut self, _cx: &mut Context<'_>, _token: u64) {}
}

#[test]
fn fixed_diameter_mean_degree_matches_the_area_ratio() {
    let expected = std::f64::consts::PI * 20.0 * 20.0 * 600.0 / (200.0 * 200.0);
    let mean = (0..20)
        .map(|seed| {
            let spec = TopologySpec {
                kind: TopologyKind::FixedDiameter { world_side: 200.0 },
                node_count: 600,
                comm_range: 20.0,
                seed,
            };
            build_topology(&spec).unwrap().mean_degree()
        })
        .sum::<f64>()
        / 20.0;
    assert!((mean - expected).abs() <= 0.1 * expected, "mean degree {mean}, expected {expected}");
}

#[test]
fn fixed_density_hits_its_target() {
    for density in [6.0, 9.0, 21.0] {
        let mean = (0..10).map(|s| random(800, density, s).mean_degree()).sum::<f64>() / 10.0;
        assert!((mean - density).abs() <= 0.1 * density, "target {density}, got {mean}");
    }
}

#[test]
fn lossy_broadcast_delivers_about_half() {
    let spokes = (1..=100u32).map(|i| {
        let a = i as f64 * std::f64::consts::TAU / 100.0;
        (i, 5.0 * a.cos(), 5.0 * a.sin())
    });
    let mut nodes = vec![(0, 0.0, 0.0)];
    nodes.extend(spokes);
    let topo = placed(&nodes, 5.5);
    assert_eq!(topo.neighbors(0).len(), 100);
    let mut sim = Simulator::new(topo, RadioModel::lossy(0.5), 11, |_| Sink::default());
    for _ in 0..1000 {
        sim.send(0, Destination::Broadcast, vec![1]);
        sim.step_round();
    }
    let total: u64 = (1..=100).map(|i| sim.node(i).unwrap().heard).sum();
    let pct = total as f64 / 1000.0;
    assert!((48.0..=52.0).contains(&pct), "{pct}% delivered");
}

#[test]
fn identical_seeds_give_identical_round_reports() {
    let run = || -> Vec<RoundReport> {
        let comp = AlgorithmComposition::preset(Preset::Lca, Parameters::default());
        let topo = random(50, 8.0, 42);
        let cap = round_cap(&comp, &topo);
        let mut net = network(topo, &comp, 42);
        net.enable_all();
        net.sim_mut().run_until_quiescent(cap).expect("quiesces")
    };
    let (a, b) = (run(), run());
    assert!(!a.is_empty());
    assert_eq!(a, b);
    assert!(a.last().unwrap().quiescent);
}

/// Nodes reachable in 1..=k steps, by boolean matrix powers.
fn matrix_power_hood(topo: &clusterkit::sim::Topology, node: NodeId, k: usize) -> BTreeSet<NodeId> {
    let ids: Vec<NodeId> = topo.ids().collect();
    let n = ids.len();
    let adj: Vec<Vec<bool>> = ids.iter().map(|&u| ids.iter().map(|&v| topo.are_adjacent(u, v)).collect()).collect();
    let src = ids.iter().position(|&v| v == node).unwrap();
    let mut reach = vec![false; n];
    let mut power = adj[src].clone();
    for _ in 0..k {
        for j in 0..n {
            reach[j] |= power[j];
        }
        power = (0..n).map(|j| (0..n).any(|m| power[m] && adj[m][j])).collect();
    }
    reach[src] = false;
    (0..n).filter(|&j| reach[j]).map(|j| ids[j]).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn k_hop_neighbors_match_matrix_powers(seed in any::<u64>(), k in 0usize..5, pick in any::<prop::sample::Index>()) {
        let topo = random(100, 6.0, seed);
        let ids: Vec<NodeId> = topo.ids().collect();
        let node = *pick.get(&ids);
        prop_assert_eq!(topo.k_hop_neighbors(node, k), matrix_power_hood(&topo, node, k));
    }

    #[test]
    fn adjacency_is_symmetric_and_range_bound(seed in any::<u64>(), n in 1usize..120, density in 0.5f64..12.0) {
        let topo = random(n, density.min(n as f64 - 0.5).max(0.1), seed);
        let ids: Vec<NodeId> = topo.ids().collect();
        prop_assert_eq!(ids.iter().collect::<BTreeSet<_>>().len(), n);
        for &u in &ids {
            for &v in &ids {
                let near = u != v && topo.distance(u, v).unwrap() <= topo.comm_range();
                prop_assert_eq!(topo.are_adjacent(u, v), near);
                prop_assert_eq!(topo.are_adjacent(u, v), topo.are_adjacent(v, u));
            }
        }
    }

    #[test]
    fn topology_files_round_trip(seed in any::<u64>(), n in 1usize..80) {
        let topo = random(n, 5.0f64.min(n as f64 - 0.5).max(0.1), seed);
        let back = clusterkit::sim::Topology::parse(&topo.to_file_string()).unwrap();
        prop_assert_eq!(back.nodes(), topo.nodes());
        prop_assert_eq!(back.comm_range(), topo.comm_range());
    }
}
