use std::path::Path;
use std::process::{Command, Output};

use clusterkit::experiment::{parse_csv, CSV_HEADER, SEED_ENV};
use clusterkit::sim::Topology;

fn clusterkit(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_clusterkit"))
        .args(args)
        .current_dir(dir)
        .env_remove(SEED_ENV)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) {
    std::fs::write(dir.join(name), text).unwrap();
}

const CONFIG: &str = "seeds = 3, 1
[topology]
nodes = 40
density = 7
[algorithm]
preset = moca
p = 0.3
k = 2
[output]
csv = out.csv
plot = plot.svg
";

#[test]
fn run_writes_one_row_per_seed_and_reports_hashes() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "exp.conf", CONFIG);
    let out = clusterkit(&["run", "--config", "exp.conf"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.path().join("out.csv")).unwrap();
    let rows = parse_csv(&text).unwrap();
    assert_eq!(rows.iter().map(|r| r.seed).collect::<Vec<_>>(), vec![3, 1]);
    assert!(rows.iter().all(|r| r.algorithm == "moca" && r.node_count == 40));
    let report = String::from_utf8_lossy(&out.stderr);
    assert_eq!(report.matches("trace_hash=0x").count(), 2, "{report}");
}

#[test]
fn run_without_csv_prints_to_stdout_and_honours_the_seed_variable() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "exp.conf", "seeds = 0..5\n[topology]\nnodes = 30\n");
    let out = Command::new(env!("CARGO_BIN_EXE_clusterkit"))
        .args(["run", "--config", "exp.conf"])
        .current_dir(dir.path())
        .env(SEED_ENV, "17")
        .output()
        .unwrap();
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert_eq!(stdout.lines().next(), Some(CSV_HEADER));
    let rows = parse_csv(&stdout).unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0].seed, 17);
}

#[test]
fn sweep_writes_rows_summary_and_plot() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "exp.conf", CONFIG);
    let out = clusterkit(&["sweep", "--config", "exp.conf", "--axis", "k", "--values", "1..3:1", "--metric", "coverage_pct"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = parse_csv(&std::fs::read_to_string(dir.path().join("out.csv")).unwrap()).unwrap();
    let keys: Vec<(u8, u64)> = rows.iter().map(|r| (r.k, r.seed)).collect();
    assert_eq!(keys, vec![(1, 1), (1, 3), (2, 1), (2, 3), (3, 1), (3, 3)]);
    let summary = std::fs::read_to_string(dir.path().join("out-summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 4);
    assert!(summary.starts_with("k,runs,ch_count_mean,ch_count_stddev"));
    let svg = std::fs::read_to_string(dir.path().join("plot.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.contains("coverage_pct"));
}

#[test]
fn generate_writes_a_loadable_topology() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "exp.conf", "[topology]\nkind = fixed-diameter\nnodes = 60\nworld_side = 100\n");
    let out = clusterkit(&["generate", "--spec", "exp.conf", "--seed", "4", "--out", "net.topo"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let topo = Topology::load(&dir.path().join("net.topo")).unwrap();
    assert_eq!(topo.len(), 60);
    assert_eq!(topo.comm_range(), 20.0);

    write(dir.path(), "file.conf", "seeds = 0\n[topology]\nkind = file\nfile = net.topo\n");
    let out = clusterkit(&["run", "--config", "file.conf"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(parse_csv(&String::from_utf8(out.stdout).unwrap()).unwrap()[0].node_count, 60);
}

#[test]
fn bad_input_fails_with_a_message() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "bad.conf", "[topology]\nnodes = lots\n");
    let out = clusterkit(&["run", "--config", "bad.conf"], dir.path());
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.starts_with("error:") && err.contains("line 2"), "{err}");

    let out = clusterkit(&["run", "--config", "missing.conf"], dir.path());
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing.conf"));

    write(dir.path(), "ok.conf", "seeds = 0\n");
    let out = clusterkit(&["sweep", "--config", "ok.conf", "--axis", "width", "--values", "1"], dir.path());
    assert!(!out.status.success());
}
