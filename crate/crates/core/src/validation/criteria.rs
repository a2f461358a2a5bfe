//! The acceptance suite. Each check runs at its stated scale and time budget
//! and reports pass or fail with a one-line summary.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;
use std::process::Command;
use std::panic::{self, AssertUnwindSafe};
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::apps::{node_secrets, AdditiveCombiner, ClusterRadio, GroupKey, GroupKeySession};
use crate::cluster::{AlgorithmComposition, ChdKind, ItKind, JdKind, Parameters, Preset};
use crate::experiment::{
    measure, round_cap, run_seed, sweep, to_csv, AlgorithmChoice, Axis, ExperimentConfig, TopologyConfig,
    SEED_ENV,
};
use crate::network::{ClusterNetwork, EnergyModel};
use crate::sim::{build_topology, PlacedNode, RadioModel, Topology, TopologyKind, TopologySpec};
use crate::validation::oracles;
use crate::wire::{decode_message, MsgType, WireMessage, MAX_PAYLOAD};
use crate::NodeId;

#[derive(Debug, Clone)]
pub struct CriterionReport {
    pub number: u8,
    pub title: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
    pub budget: Duration,
}

impl fmt::Display for CriterionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} criterion {}: {} ({:.2}s of {}s) {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.number,
            self.title,
            self.elapsed.as_secs_f64(),
            self.budget.as_secs(),
            self.detail
        )
    }
}

fn timed(
    number: u8,
    title: &'static str,
    budget_secs: u64,
    check: impl FnOnce() -> Result<String, String>,
) -> CriterionReport {
    let start = Instant::now();
    let outcome = panic::catch_unwind(AssertUnwindSafe(check))
        .unwrap_or_else(|p| Err(format!("panicked: {}", panic_text(&p))));
    let elapsed = start.elapsed();
    let budget = Duration::from_secs(budget_secs);
    let (mut passed, mut detail) = match outcome {
        Ok(d) => (true, d),
        Err(d) => (false, d),
    };
    if elapsed > budget {
        passed = false;
        detail = format!("over time budget; {detail}");
    }
    CriterionReport { number, title, passed, detail, elapsed, budget }
}

fn panic_text(p: &Box<dyn std::any::Any + Send>) -> String {
    p.downcast_ref::<String>()
        .cloned()
        .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
        .unwrap_or_else(|| "unknown panic".into())
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

/// Runs `comp` on `topo` to quiescence within the standard round cap.
pub fn formed(topo: Topology, comp: &AlgorithmComposition, seed: u64) -> Result<ClusterNetwork, String> {
    let cap = round_cap(comp, &topo);
    let mut net = ClusterNetwork::new(topo, comp, RadioModel::lossless(), seed, EnergyModel::default())
        .map_err(|e| e.to_string())?;
    net.enable_all();
    net.run_to_quiescence(cap).map_err(|e| format!("seed {seed}: {e}"))?;
    Ok(net)
}

fn density_topology(n: usize, density: f64, seed: u64) -> Topology {
    build_topology(&TopologySpec { kind: TopologyKind::FixedDensity { density }, node_count: n, comm_range: 20.0, seed })
        .expect("valid generated topology")
}

fn attr_params(k: u8) -> Parameters {
    Parameters { k, ..Parameters::default() }
}

/// ATTR head sets, MaxMinD elected heads, MOCA memberships and MaxMinD head
/// gateway tables against brute-force oracles on small topologies.
pub fn check_small_instance(seed: u64) -> Result<(), String> {
    let n = 30 + (seed as usize * 37) % 71;
    let topo = density_topology(n, 6.0 + (seed % 5) as f64, seed);

    let k = 1 + (seed % 3) as u8;
    let comp = AlgorithmComposition::new(ChdKind::Attr, JdKind::Bfs, ItKind::Norm, attr_params(k));
    let net = formed(topo.clone(), &comp, seed)?;
    let want = oracles::attr_heads(&topo, |id| net.node(id).info().attribute, k as usize);
    ensure(net.elected_heads() == want, || format!("seed {seed}: ATTR k={k} heads differ from oracle"))?;

    let d = 1 + (seed % 3) as u8;
    let comp = AlgorithmComposition::preset(Preset::MaxMind, Parameters { d, ..Parameters::default() });
    let net = formed(topo.clone(), &comp, seed)?;
    let want = oracles::maxmind_heads(&topo, d as usize);
    for (&u, &h) in &want {
        let got = net.node(u).state().cluster_id;
        ensure(got == h, || format!("seed {seed}: MaxMinD d={d} node {u} joined {got}, oracle {h}"))?;
    }
    let cluster_of: BTreeMap<NodeId, NodeId> = topo.ids().map(|u| (u, net.node(u).state().cluster_id)).collect();
    let adjacency = oracles::cluster_adjacency(&topo, &cluster_of);
    for h in net.heads() {
        let g = net.node(h).gateway();
        let want_links = adjacency.get(&h).cloned().unwrap_or_default();
        ensure(g.cluster_links == want_links, || {
            format!("seed {seed}: head {h} cluster links {:?}, oracle {:?}", g.cluster_links, want_links)
        })?;
        let direct = oracles::foreign_links(&topo, &cluster_of, h);
        ensure(g.foreign_links == direct, || format!("seed {seed}: head {h} foreign links differ"))?;
    }

    let p = 0.2;
    let comp = AlgorithmComposition::preset(Preset::Moca, Parameters { p, k: 2, ..Parameters::default() });
    let net = formed(topo.clone(), &comp, seed)?;
    let heads = oracles::prob_heads(&topo, seed, p);
    ensure(net.elected_heads() == heads, || format!("seed {seed}: MOCA elected heads differ"))?;
    for (u, want) in oracles::moca_memberships(&topo, &heads, 2) {
        let got = net.memberships(u);
        if want.is_empty() {
            ensure(net.node(u).is_orphan() && got == BTreeSet::from([u]), || {
                format!("seed {seed}: uncovered node {u} should be an orphan, has {got:?}")
            })?;
        } else {
            ensure(got == want, || format!("seed {seed}: MOCA node {u} in {got:?}, oracle {want:?}"))?;
        }
    }
    Ok(())
}

pub fn oracle_equivalence() -> CriterionReport {
    timed(1, "oracle equivalence on 30 small topologies", 60, || {
        let failures: Vec<String> =
            (0..30u64).into_par_iter().filter_map(|s| check_small_instance(s).err()).collect();
        match failures.first() {
            None => Ok("ATTR, MaxMinD, MOCA and gateway tables match on all 30 seeds".into()),
            Some(f) => Err(format!("{} seeds disagree; first: {f}", failures.len())),
        }
    })
}

pub fn maxmind_validity() -> CriterionReport {
    timed(2, "MaxMinD validity sweep, N = 100..600 on a 200x200 world", 300, || {
        let d = 2u8;
        let comp = AlgorithmComposition::preset(Preset::MaxMind, Parameters { d, ..Parameters::default() });
        let sizes: Vec<usize> = (1..=6).map(|i| i * 100).collect();
        let jobs: Vec<(usize, u64)> = sizes.iter().flat_map(|&n| (0..20).map(move |s| (n, s))).collect();
        let runs: Vec<Result<(usize, usize), String>> = jobs
            .par_iter()
            .map(|&(n, seed)| {
                let spec = TopologySpec {
                    kind: TopologyKind::FixedDiameter { world_side: 200.0 },
                    node_count: n,
                    comm_range: 20.0,
                    seed,
                };
                let topo = build_topology(&spec).map_err(|e| e.to_string())?;
                let net = formed(topo.clone(), &comp, seed)?;
                for u in topo.ids() {
                    let h = net.node(u).state().cluster_id;
                    ensure(oracles::bfs_within(&topo, u, d as usize).contains_key(&h), || {
                        format!("N={n} seed {seed}: node {u} is more than {d} hops from head {h}")
                    })?;
                }
                let r = measure(&net, "maxmind", seed, 0);
                ensure((r.ch_count as f64 * r.avg_cluster_size - n as f64).abs() < 1e-6, || {
                    format!("N={n} seed {seed}: {} clusters of mean size {} do not cover N", r.ch_count, r.avg_cluster_size)
                })?;
                Ok((n, r.ch_count))
            })
            .collect();
        let mut by_n: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for r in runs {
            let (n, ch) = r?;
            by_n.entry(n).or_default().push(ch);
        }
        let means: Vec<f64> = by_n.values().map(|v| v.iter().sum::<usize>() as f64 / v.len() as f64).collect();
        let shown: Vec<String> = means.iter().map(|m| format!("{m:.2}")).collect();
        ensure(means.windows(2).all(|w| w[0] < w[1]), || format!("mean head counts not increasing: {shown:?}"))?;
        Ok(format!("all nodes within {d} hops, sizes sum to N, mean heads {}", shown.join(" < ")))
    })
}

pub fn moca_coverage() -> CriterionReport {
    timed(3, "MOCA coverage, N = 400, density 9, k = 2..4", 180, || {
        let ps: Vec<f64> = (1..=10).map(|i| i as f64 * 0.05).collect();
        let mut notes = Vec::new();
        for k in [2u8, 3, 4] {
            let cfg = ExperimentConfig {
                algorithm: AlgorithmChoice::Preset(Preset::Moca),
                topology: TopologyConfig {
                    kind: TopologyKind::FixedDensity { density: 9.0 },
                    node_count: 400,
                    comm_range: 20.0,
                },
                params: Parameters { k, ..Parameters::default() },
                seeds: (0..20).collect(),
                ..ExperimentConfig::default()
            };
            let res = sweep(&cfg, Axis::P, &ps).map_err(|e| e.to_string())?;
            let means: Vec<f64> = res.summary.iter().map(|s| s.mean("coverage_pct").unwrap_or(0.0)).collect();
            ensure(means.windows(2).all(|w| w[0] <= w[1]), || {
                format!("k={k}: mean coverage decreases somewhere in {means:?}")
            })?;
            if k == 2 {
                let at_half = res.summary.last().and_then(|s| s.mean("coverage_pct")).unwrap_or(0.0);
                let worst = res
                    .rows
                    .iter()
                    .filter(|(p, _)| (*p - 0.5).abs() < 1e-12)
                    .map(|(_, r)| r.coverage_pct)
                    .fold(f64::INFINITY, f64::min);
                ensure(at_half >= 99.0, || format!("k=2, p=0.5: mean coverage {at_half:.3}% below 99%"))?;
                notes.push(format!("k=2 p=0.5 mean {at_half:.3}% (lowest seed {worst:.2}%)"));
            }
            notes.push(format!("k={k} {:.1}%..{:.1}%", means[0], means[means.len() - 1]));
        }
        Ok(format!("non-decreasing in p; {}", notes.join(", ")))
    })
}

/// CHD rounds at each size for one configuration, plus total rounds.
fn chd_rounds_by_size(algorithm: AlgorithmChoice, params: Parameters, sizes: &[usize]) -> Result<Vec<(u64, u64)>, String> {
    sizes
        .iter()
        .map(|&n| {
            let cfg = ExperimentConfig {
                algorithm: algorithm.clone(),
                topology: TopologyConfig { kind: TopologyKind::FixedDensity { density: 8.0 }, node_count: n, comm_range: 20.0 },
                params,
                seeds: vec![1],
                ..ExperimentConfig::default()
            };
            let o = run_seed(&cfg, 1, None).map_err(|e| format!("N={n}: {e}"))?;
            Ok((o.chd_rounds, o.record.rounds))
        })
        .collect()
}

pub fn scalability() -> CriterionReport {
    timed(4, "scalability shape, N = 10..10000 at density 8", 900, || {
        let sizes = [10usize, 100, 1000, 10000];
        let prob = chd_rounds_by_size(AlgorithmChoice::Preset(Preset::Lca), Parameters::default(), &sizes)?;
        ensure(prob.iter().all(|r| r.0 == prob[0].0), || format!("PROB CHD rounds vary with N: {prob:?}"))?;
        let mut attr_offsets = BTreeSet::new();
        for k in 1..=3u8 {
            let algo = AlgorithmChoice::Custom { chd: ChdKind::Attr, jd: JdKind::Bfs, it: ItKind::Norm };
            for (chd, _) in chd_rounds_by_size(algo, attr_params(k), &sizes)? {
                attr_offsets.insert(chd as i64 - k as i64);
            }
        }
        ensure(attr_offsets.len() == 1, || format!("ATTR CHD rounds minus k not constant: {attr_offsets:?}"))?;
        let mut maxmind_offsets = BTreeSet::new();
        for d in 1..=3u8 {
            let params = Parameters { d, ..Parameters::default() };
            for (chd, _) in chd_rounds_by_size(AlgorithmChoice::Preset(Preset::MaxMind), params, &sizes)? {
                maxmind_offsets.insert(chd as i64 - 2 * d as i64);
            }
        }
        ensure(maxmind_offsets.len() == 1, || format!("MaxMinD CHD rounds minus 2d not constant: {maxmind_offsets:?}"))?;
        let totals: Vec<u64> = prob.iter().map(|r| r.1).collect();
        Ok(format!(
            "PROB CHD rounds {} at every N, ATTR k+{}, MaxMinD 2d+{}; full LCA formation rounds {totals:?}",
            prob[0].0,
            attr_offsets.first().expect("one offset"),
            maxmind_offsets.first().expect("one offset")
        ))
    })
}

/// Ten nodes within range of each other.
pub fn complete_graph(n: usize) -> Topology {
    let nodes = (0..n)
        .map(|i| {
            let a = i as f64 * std::f64::consts::TAU / n as f64;
            PlacedNode { id: i as NodeId + 1, x: 5.0 * a.cos(), y: 5.0 * a.sin() }
        })
        .collect();
    Topology::new(nodes, 20.0).expect("valid topology")
}

pub fn testbed_messages() -> CriterionReport {
    timed(5, "10-node single-hop formation within 80 messages", 1, || {
        let mut counts = Vec::new();
        for jd in [JdKind::Bfs, JdKind::Dfs] {
            let comp = AlgorithmComposition::new(ChdKind::Attr, jd, ItKind::Norm, attr_params(1));
            let net = formed(complete_graph(10), &comp, 0)?;
            ensure(net.clusters().len() == 1, || format!("{jd:?}: expected one cluster, got {}", net.clusters().len()))?;
            let total = net.sim().stats().total_sent();
            ensure(total <= 80, || format!("{jd:?}: {total} messages"))?;
            counts.push(format!("{jd:?} {total}"));
        }
        Ok(format!("messages: {}", counts.join(", ")))
    })
}

pub fn leach_rotation() -> CriterionReport {
    timed(6, "LEACH rotation, P = 0.2, 3 epochs of 5 formations", 10, || {
        let period = 20u64;
        let params = Parameters { desired_fraction: 0.2, t: period, ..Parameters::default() };
        let comp = AlgorithmComposition::preset(Preset::Leach, params);
        let topo = density_topology(100, 8.0, 0);
        let mut net = ClusterNetwork::new(topo, &comp, RadioModel::lossless(), 0, EnergyModel::default())
            .map_err(|e| e.to_string())?;
        net.enable_all();
        net.run_rounds(15 * period - 1);
        for node in net.nodes() {
            let terms = node.head_terms();
            for epoch in 0..3u32 {
                let times = terms.iter().filter(|&&t| t / 5 == epoch).count();
                ensure(times == 1, || format!("node {} was head {times} times in epoch {epoch}: {terms:?}", node.id()))?;
            }
            ensure(terms.len() == 3, || format!("node {} terms {terms:?}", node.id()))?;
        }
        Ok("every node was head exactly once in each epoch".into())
    })
}

/// Configuration used by the determinism check: LCA on 50 nodes, seed 42.
pub const GOLDEN_CONFIG: &str = "seeds = 42

[topology]
kind = fixed-density
nodes = 50
density = 8
range = 20

[algorithm]
preset = lca
p = 0.15
k = 2
";

/// One in-process run of [`GOLDEN_CONFIG`]: CSV bytes and trace hash.
pub fn golden_run() -> Result<(Vec<u8>, u64), String> {
    let cfg = ExperimentConfig::parse(GOLDEN_CONFIG).map_err(|e| e.to_string())?;
    let o = run_seed(&cfg, 42, None).map_err(|e| e.to_string())?;
    let csv = to_csv(&[o.record]).map_err(|e| e.to_string())?;
    Ok((csv.into_bytes(), o.trace_hash))
}

/// Runs `exe run --config <file>` on [`GOLDEN_CONFIG`] in a fresh process,
/// writing into `dir`. Returns the CSV bytes and the reported trace hash.
pub fn spawned_golden_run(exe: &Path, dir: &Path, invocation: usize) -> Result<(Vec<u8>, u64), String> {
    let csv = dir.join(format!("golden-{invocation}.csv"));
    let config = dir.join(format!("golden-{invocation}.conf"));
    let text = format!("{GOLDEN_CONFIG}\n[output]\ncsv = {}\n", csv.display());
    std::fs::write(&config, text).map_err(|e| format!("{}: {e}", config.display()))?;
    let out = Command::new(exe)
        .args(["run", "--config"])
        .arg(&config)
        .env_remove(SEED_ENV)
        .output()
        .map_err(|e| format!("{}: {e}", exe.display()))?;
    if !out.status.success() {
        return Err(format!("run exited with {}: {}", out.status, String::from_utf8_lossy(&out.stderr)));
    }
    let report = String::from_utf8_lossy(&out.stderr);
    let hash = report
        .split_whitespace()
        .find_map(|w| w.strip_prefix("trace_hash=0x"))
        .and_then(|h| u64::from_str_radix(h, 16).ok())
        .ok_or_else(|| format!("no trace hash in output: {report}"))?;
    let bytes = std::fs::read(&csv).map_err(|e| format!("{}: {e}", csv.display()))?;
    Ok((bytes, hash))
}

/// Runs `invoke` twice and compares the outputs byte for byte. `invoke`
/// should run [`GOLDEN_CONFIG`] in a fresh process where possible.
pub fn determinism(invoke: &dyn Fn(usize) -> Result<(Vec<u8>, u64), String>) -> CriterionReport {
    timed(7, "determinism across two invocations", 10, || {
        let (csv_a, hash_a) = invoke(0)?;
        let (csv_b, hash_b) = invoke(1)?;
        ensure(!csv_a.is_empty(), || "empty CSV".into())?;
        ensure(csv_a == csv_b, || "CSV output differs between invocations".into())?;
        ensure(hash_a == hash_b, || format!("trace hash {hash_a:#018x} vs {hash_b:#018x}"))?;
        Ok(format!("identical CSV ({} bytes) and trace hash {hash_a:#018x}", csv_a.len()))
    })
}

fn valid_path(topo: &Topology, path: &[NodeId], src: NodeId, dst: NodeId) -> bool {
    let distinct: BTreeSet<&NodeId> = path.iter().collect();
    path.first() == Some(&src)
        && path.last() == Some(&dst)
        && distinct.len() == path.len()
        && path.windows(2).all(|w| topo.are_adjacent(w[0], w[1]))
}

/// First connected topology at or after seed `from`.
fn connected_topology(n: usize, density: f64, from: u64) -> (Topology, u64) {
    (from..)
        .map(|seed| (density_topology(n, density, seed), seed))
        .find(|(t, _)| t.is_connected())
        .expect("some seed gives a connected topology")
}

/// `topo` with ids relabelled by `perm`, positions unchanged.
fn relabel(topo: &Topology, perm: &BTreeMap<NodeId, NodeId>) -> Topology {
    let nodes = topo.nodes().iter().map(|n| PlacedNode { id: perm[&n.id], ..*n }).collect();
    Topology::new(nodes, topo.comm_range()).expect("relabelling keeps ids distinct")
}

fn gke_run(topo: Topology, head: NodeId, k: u8, secrets: BTreeMap<NodeId, u64>) -> Result<(GroupKey, Vec<NodeId>), String> {
    let comp = AlgorithmComposition::new(
        ChdKind::Designated(BTreeSet::from([head])),
        JdKind::Dfs,
        ItKind::Norm,
        Parameters { k, ..Parameters::default() },
    );
    let cap = round_cap(&comp, &topo);
    let mut net = ClusterNetwork::new(topo, &comp, RadioModel::lossless(), 0, EnergyModel::Full)
        .map_err(|e| e.to_string())?;
    let session = GroupKeySession::attach(&mut net, AdditiveCombiner, secrets);
    net.enable_all();
    net.run_to_quiescence(cap).map_err(|e| e.to_string())?;
    let key = session.keys(&net).get(&head).copied().ok_or("head finished without a key")?;
    Ok((key, session.join_order(head)))
}

pub fn swappability() -> CriterionReport {
    timed(8, "routing under all presets and order-free group keys", 120, || {
        let (topo, seed) = connected_topology(200, 10.0, 0);
        let ids: Vec<NodeId> = topo.ids().collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pairs: Vec<(NodeId, NodeId)> =
            (0..200).map(|_| (*ids.choose(&mut rng).unwrap(), *ids.choose(&mut rng).unwrap())).collect();
        for preset in Preset::ALL {
            let comp = AlgorithmComposition::preset(preset, Parameters::default());
            let net = formed(topo.clone(), &comp, seed)?;
            let mut radio = ClusterRadio::from_network(&net);
            for &(s, d) in &pairs {
                let route = radio.inter_route(s, d).map_err(|e| format!("{preset}: {s}->{d}: {e}"))?;
                ensure(valid_path(&topo, &route.path, s, d), || format!("{preset}: invalid path {:?}", route.path))?;
            }
        }

        let mut keys = Vec::new();
        for gke_seed in [1u64, 2] {
            let (topo, _) = connected_topology(40, 8.0, gke_seed * 100);
            let head = topo.ids().next().expect("non-empty");
            let k = topo.hop_distances(head).values().copied().max().unwrap_or(1).max(1) as u8;
            let secrets = node_secrets(gke_seed, topo.ids());
            let mut shuffled: Vec<NodeId> = topo.ids().map(|u| u + 1000).collect();
            shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(gke_seed));
            let perm: BTreeMap<NodeId, NodeId> = topo.ids().zip(shuffled).collect();
            let permuted_secrets = secrets.iter().map(|(u, s)| (perm[u], *s)).collect();
            let (a, order_a) = gke_run(topo.clone(), head, k, secrets.clone())?;
            let (b, order_b) = gke_run(relabel(&topo, &perm), perm[&head], k, permuted_secrets)?;
            let expected = secrets.values().fold(0u64, |acc, s| acc.wrapping_add(*s));
            ensure(a == b, || format!("seed {gke_seed}: keys differ under relabelling: {a:?} vs {b:?}"))?;
            ensure(a.value == expected && a.contributors as usize == secrets.len(), || {
                format!("seed {gke_seed}: key {a:?} does not fold all {} secrets", secrets.len())
            })?;
            let unmapped: Vec<NodeId> = order_a.iter().map(|u| perm[u]).collect();
            keys.push(format!("seed {gke_seed} key {:#x} (join order {})", a.value, if unmapped == order_b { "same" } else { "differs" }));
        }
        Ok(format!("{} routes valid under 5 presets; {}", pairs.len(), keys.join(", ")))
    })
}

fn random_frame(rng: &mut ChaCha8Rng) -> Vec<u8> {
    let t = MsgType::ALL[rng.gen_range(0..MsgType::ALL.len())];
    let len = rng.gen_range(0..=MAX_PAYLOAD);
    let payload = (0..len).map(|_| rng.gen()).collect();
    WireMessage::new(t, rng.gen(), rng.gen(), rng.gen()).with_payload(payload).encode().expect("payload fits")
}

fn fuzz_input(rng: &mut ChaCha8Rng) -> Vec<u8> {
    match rng.gen_range(0..4) {
        0 => (0..rng.gen_range(0..80)).map(|_| rng.gen()).collect(),
        1 => random_frame(rng),
        2 => {
            let mut f = random_frame(rng);
            for _ in 0..rng.gen_range(1..4) {
                let i = rng.gen_range(0..f.len());
                f[i] ^= 1 << rng.gen_range(0..8);
            }
            f
        }
        _ => {
            let mut f = random_frame(rng);
            if rng.gen() {
                f.truncate(rng.gen_range(0..f.len()));
            } else {
                f.extend((0..rng.gen_range(1..8)).map(|_| rng.gen::<u8>()));
            }
            f
        }
    }
}

pub fn codec_fuzz() -> CriterionReport {
    timed(9, "wire codec fuzz, 100000 inputs", 5, || {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        let (mut accepted, mut rejected) = (0u32, 0u32);
        for i in 0..100_000 {
            let input = fuzz_input(&mut rng);
            match decode_message(&input) {
                Ok(m) => {
                    accepted += 1;
                    let again = m.encode().map_err(|e| format!("input {i}: accepted frame fails to encode: {e}"))?;
                    ensure(again == input, || format!("input {i}: re-encoding differs from {input:02x?}"))?;
                }
                Err(_) => rejected += 1,
            }
        }
        ensure(accepted > 0 && rejected > 0, || "fuzz corpus did not exercise both outcomes".into())?;
        Ok(format!("{accepted} accepted and re-encoded exactly, {rejected} rejected, no panics"))
    })
}

/// Every criterion. `invoke` feeds the determinism check.
pub fn run_all(invoke: &dyn Fn(usize) -> Result<(Vec<u8>, u64), String>) -> Vec<CriterionReport> {
    vec![
        oracle_equivalence(),
        maxmind_validity(),
        moca_coverage(),
        scalability(),
        testbed_messages(),
        leach_rotation(),
        determinism(invoke),
        swappability(),
        codec_fuzz(),
    ]
}
