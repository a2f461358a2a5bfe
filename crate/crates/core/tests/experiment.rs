mod common;

use std::path::PathBuf;

use clusterkit::cluster::{AlgorithmComposition, ChdKind, ItKind, JdKind, Parameters, Preset};
use clusterkit::experiment::{
    parse_csv, run_experiment, run_seed, sweep, to_csv, write_csv, AlgorithmChoice, Axis, CsvError, ExperimentConfig,
    ExperimentError, CSV_HEADER,
};
use clusterkit::sim::TopologyKind;
use clusterkit::validation::criteria::golden_run;
use clusterkit::wire::MsgType;
use common::*;
use proptest::prelude::*;

const GOLDEN: &str = include_str!("golden/lca-50-seed42.csv");

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("clusterkit-test-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn preset_cfg(preset: Preset, params: Parameters, nodes: usize, seeds: Vec<u64>) -> ExperimentConfig {
    let mut cfg = ExperimentConfig { algorithm: AlgorithmChoice::Preset(preset), params, seeds, ..ExperimentConfig::default() };
    cfg.topology.node_count = nodes;
    cfg
}

#[test]
fn golden_csv_is_byte_stable() {
    let (first, hash_a) = golden_run().unwrap();
    let (second, hash_b) = golden_run().unwrap();
    assert_eq!(first, second);
    assert_eq!(hash_a, hash_b);
    assert_eq!(String::from_utf8(first).unwrap(), GOLDEN);
}

#[test]
fn different_seeds_differ() {
    let cfg = preset_cfg(Preset::Lca, Parameters::default(), 50, vec![1, 2]);
    let out = run_experiment(&cfg).unwrap();
    assert_ne!(out[0].trace_hash, out[1].trace_hash);
    assert_eq!(out.iter().map(|o| o.record.seed).collect::<Vec<_>>(), vec![1, 2]);
}

#[test]
fn lca_with_p_one_makes_singletons() {
    let cfg = preset_cfg(Preset::Lca, Parameters { p: 1.0, ..Parameters::default() }, 64, vec![0, 9]);
    for o in run_experiment(&cfg).unwrap() {
        assert_eq!(o.record.ch_count, 64);
        assert_eq!(o.record.avg_cluster_size, 1.0);
        assert_eq!(o.record.coverage_pct, 100.0);
        assert_eq!(o.record.orphan_count, 0);
    }
}

#[test]
fn maxmind_star_file_topology_forms_one_cluster() {
    let path = scratch("star.topo");
    star(5, &[1, 2, 3]).save(&path).unwrap();
    let mut cfg = preset_cfg(Preset::MaxMind, Parameters { d: 1, ..Parameters::default() }, 0, vec![0]);
    cfg.topology.kind = TopologyKind::File { path };
    let r = &run_experiment(&cfg).unwrap()[0].record;
    assert_eq!((r.ch_count, r.avg_cluster_size, r.node_count), (1, 4.0, 4));
}

#[test]
fn maxmind_sends_only_flood_and_hello_traffic() {
    for d in 1..=3u8 {
        for seed in 0..5 {
            let cfg = preset_cfg(Preset::MaxMind, Parameters { d, ..Parameters::default() }, 120, vec![seed]);
            let r = run_seed(&cfg, seed, None).unwrap().record;
            assert_eq!(r.msgs_attr, 2 * d as u64 * 120, "d={d} seed={seed}");
            assert_eq!((r.msgs_join_req, r.msgs_join_acc, r.msgs_join_deny, r.msgs_resume), (0, 0, 0, 0));
            assert_eq!(r.msgs_hello, 120);
        }
    }
}

#[test]
fn non_overlapping_presets_count_each_node_once() {
    for preset in [Preset::Lca, Preset::Leach, Preset::Tcca, Preset::MaxMind] {
        let cfg = preset_cfg(preset, Parameters::default(), 150, (0..4).collect());
        for o in run_experiment(&cfg).unwrap() {
            let r = o.record;
            let total = r.ch_count as f64 * r.avg_cluster_size;
            assert!((total - r.node_count as f64).abs() < 1e-9, "{preset} seed {}: {total}", r.seed);
            assert_eq!(r.overlap_degree, 1.0);
        }
    }
}

#[test]
fn moca_dense_high_probability_covers_nearly_everyone() {
    let mut cfg = preset_cfg(Preset::Moca, Parameters { p: 0.5, k: 2, ..Parameters::default() }, 400, (0..5).collect());
    cfg.topology.kind = TopologyKind::FixedDensity { density: 9.0 };
    let out = run_experiment(&cfg).unwrap();
    let mean = out.iter().map(|o| o.record.coverage_pct).sum::<f64>() / out.len() as f64;
    assert!(mean >= 99.0, "mean coverage {mean}");
    assert!(out.iter().all(|o| o.record.overlap_degree > 1.0));
}

#[test]
fn moca_coverage_is_monotone_in_p_and_k() {
    for seed in 0..3 {
        let mut last = 0.0;
        for p in [0.05, 0.1, 0.2, 0.35, 0.5] {
            let cfg = preset_cfg(Preset::Moca, Parameters { p, k: 2, ..Parameters::default() }, 200, vec![seed]);
            let c = run_seed(&cfg, seed, None).unwrap().record.coverage_pct;
            assert!(c >= last, "seed {seed} p {p}: {c} < {last}");
            last = c;
        }
        let mut last = 0.0;
        for k in 1..=4 {
            let cfg = preset_cfg(Preset::Moca, Parameters { p: 0.1, k, ..Parameters::default() }, 200, vec![seed]);
            let c = run_seed(&cfg, seed, None).unwrap().record.coverage_pct;
            assert!(c >= last, "seed {seed} k {k}: {c} < {last}");
            last = c;
        }
    }
}

#[test]
fn bfs_requests_are_bounded_by_the_covered_nodes() {
    for seed in 0..5 {
        let topo = random(150, 8.0, seed);
        let dist = all_pairs(&topo);
        for k in 1..=4u8 {
            let comp = AlgorithmComposition::new(ChdKind::Prob, JdKind::Lca, ItKind::Norm, Parameters { k, ..Parameters::default() });
            let net = form(topo.clone(), &comp, seed);
            let covered = topo
                .ids()
                .filter(|&v| net.elected_heads().iter().any(|&h| dist.get(&(v, h)).is_some_and(|&d| d < k as usize)))
                .count() as u64;
            let sent = net.sim().stats().sent(MsgType::JoinRequest);
            assert!(sent <= covered, "seed {seed} k {k}: {sent} requests, {covered} relaying nodes");
        }
    }
}

#[test]
fn node_count_sweep_has_one_row_per_value_and_seed() {
    let mut cfg = preset_cfg(Preset::MaxMind, Parameters { d: 2, ..Parameters::default() }, 100, vec![0, 1]);
    cfg.topology.kind = TopologyKind::FixedDiameter { world_side: 200.0 };
    let values: Vec<f64> = (1..=6).map(|i| 100.0 * i as f64).collect();
    let res = sweep(&cfg, Axis::NodeCount, &values).unwrap();
    assert_eq!(res.rows.len(), 12);
    assert_eq!(res.summary.len(), 6);
    for (i, (v, r)) in res.rows.iter().enumerate() {
        assert_eq!(*v, values[i / 2]);
        assert_eq!(r.node_count as f64, *v);
        assert_eq!(r.seed, (i % 2) as u64);
    }
    let text = to_csv(&res.records()).unwrap();
    assert_eq!(text.lines().next(), Some(CSV_HEADER));
    assert_eq!(parse_csv(&text).unwrap(), res.records());
}

#[test]
fn chd_rounds_do_not_grow_with_network_size() {
    let cases = [
        (Preset::Lca, 0),
        (Preset::MaxMind, 2 * Parameters::default().d as u64),
    ];
    for (preset, want) in cases {
        for n in [10, 100, 1000] {
            let cfg = preset_cfg(preset, Parameters::default(), n, vec![1]);
            assert_eq!(run_seed(&cfg, 1, None).unwrap().chd_rounds, want, "{preset} n={n}");
        }
    }
    let attr = ExperimentConfig::parse("[algorithm]\nchd = attr\njd = bfs\nit = norm\nk = 3\n").unwrap();
    for n in [10, 100, 1000] {
        let mut cfg = attr.clone();
        cfg.topology.node_count = n;
        assert_eq!(run_seed(&cfg, 1, None).unwrap().chd_rounds, 3, "attr n={n}");
    }
}

#[test]
fn csv_and_config_errors_name_the_path() {
    let records = run_experiment(&preset_cfg(Preset::Lca, Parameters::default(), 20, vec![0])).unwrap();
    let records: Vec<_> = records.into_iter().map(|o| o.record).collect();
    let good = scratch("out.csv");
    write_csv(&records, &good).unwrap();
    assert_eq!(parse_csv(&std::fs::read_to_string(&good).unwrap()).unwrap(), records);
    let bad = PathBuf::from("/no/such/dir/out.csv");
    let err = write_csv(&records, &bad).unwrap_err();
    assert!(matches!(err, CsvError::Io { .. }));
    assert!(err.to_string().contains("/no/such/dir/out.csv"));
    assert!(ExperimentConfig::load(&PathBuf::from("/no/such.conf")).unwrap_err().to_string().contains("/no/such.conf"));
}

#[test]
fn sweeps_reject_empty_and_unknown_axes() {
    assert!(matches!(sweep(&ExperimentConfig::default(), Axis::K, &[]), Err(ExperimentError::Invalid(_))));
    assert!("diameter".parse::<Axis>().is_err());
    assert!(Axis::P.apply(&ExperimentConfig::default(), 1.5).is_err());
}

fn config_text(preset: Preset, n: usize, density: f64, p: f64, k: u8, d: u8, seeds: &[u64], loss: f64) -> String {
    let seeds: Vec<String> = seeds.iter().map(u64::to_string).collect();
    format!(
        "seeds = {}\n[topology]\nkind = fixed-density\nnodes = {n}\ndensity = {density}\nrange = 20\n\
         [algorithm]\npreset = {preset}\np = {p}\nk = {k}\nd = {d}\n[radio]\nloss = {loss}\n",
        seeds.join(", ")
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn config_text_binds_every_field(
        preset in prop::sample::select(Preset::ALL.to_vec()),
        n in 2usize..5000,
        density in 0.5f64..40.0,
        p in 0.0f64..=1.0,
        k in 1u8..=8,
        d in 1u8..=8,
        seeds in prop::collection::vec(any::<u64>(), 1..6),
        loss in 0.0f64..=1.0,
    ) {
        let cfg = ExperimentConfig::parse(&config_text(preset, n, density, p, k, d, &seeds, loss)).unwrap();
        prop_assert_eq!(&cfg.algorithm, &AlgorithmChoice::Preset(preset));
        prop_assert_eq!(cfg.topology.node_count, n);
        prop_assert_eq!(&cfg.topology.kind, &TopologyKind::FixedDensity { density });
        prop_assert_eq!((cfg.params.p, cfg.params.k, cfg.params.d), (p, k, d));
        prop_assert_eq!(&cfg.seeds, &seeds);
        prop_assert_eq!(cfg.loss, loss);
        let (chd, jd, it) = preset.modules();
        prop_assert_eq!(cfg.composition(), AlgorithmComposition::new(chd, jd, it, cfg.params));
    }

    #[test]
    fn sweep_rows_are_sorted_whatever_the_value_order(
        values in prop::collection::vec(prop::sample::select(vec![10.0, 15.0, 20.0, 25.0]), 1..5),
        seeds in prop::collection::btree_set(0u64..50, 1..3),
    ) {
        let cfg = ExperimentConfig { seeds: seeds.iter().copied().collect(), ..preset_cfg(Preset::Lca, Parameters::default(), 20, vec![0]) };
        let res = sweep(&cfg, Axis::NodeCount, &values).unwrap();
        let keys: Vec<(f64, u64)> = res.rows.iter().map(|(v, r)| (*v, r.seed)).collect();
        let mut want: Vec<(f64, u64)> = values.iter().flat_map(|&v| seeds.iter().map(move |&s| (v, s))).collect();
        want.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        want.dedup();
        prop_assert_eq!(keys, want);
        for s in &res.summary {
            let xs: Vec<f64> = res.rows.iter().filter(|(v, _)| *v == s.value).map(|(_, r)| r.ch_count as f64).collect();
            let mean = xs.iter().sum::<f64>() / xs.len() as f64;
            prop_assert!((s.mean("ch_count").unwrap() - mean).abs() < 1e-9);
        }
    }
}
