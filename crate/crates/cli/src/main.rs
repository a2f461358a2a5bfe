use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use clusterkit::experiment::{
    render_svg, run_seed, sweep, to_csv, write_csv, Axis, ExperimentConfig, ExperimentError, MetricsRecord, RunOutcome,
    SEED_ENV,
};
use clusterkit::sim::build_topology;
use clusterkit::validation::criteria;

#[derive(Parser)]
#[command(name = "clusterkit", version, about = "Run and sweep clustering experiments on simulated sensor networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a topology file from the [topology] section of a config.
    Generate {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run every configured seed and emit one CSV row per seed.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run the configuration once per axis value and seed.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// One of node_count, p, k, d, density.
        #[arg(long)]
        axis: Axis,
        /// Comma-separated values, or start..end:step.
        #[arg(long)]
        values: String,
        /// Metric to plot when the config names a plot file.
        #[arg(long, default_value = "ch_count")]
        metric: String,
    },
    /// Run the acceptance suite.
    Validate,
}

fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let cfg = ExperimentConfig::load(path)?;
    let env = std::env::var(SEED_ENV).ok();
    Ok(cfg.with_seed_override(env.as_deref())?)
}

fn parse_values(text: &str) -> Result<Vec<f64>> {
    if let Some((range, step)) = text.split_once(':') {
        let (a, b) = range.split_once("..").context("range values look like start..end:step")?;
        let (a, b, step): (f64, f64, f64) = (a.trim().parse()?, b.trim().parse()?, step.trim().parse()?);
        if step <= 0.0 {
            bail!("step must be positive");
        }
        let count = ((b - a) / step + 1e-9).floor() as usize;
        return Ok((0..=count).map(|i| a + step * i as f64).collect());
    }
    text.split(',')
        .map(|v| v.trim().parse::<f64>().with_context(|| format!("bad sweep value {v:?}")))
        .collect()
}

fn trace_path(base: &Path, seed: u64, seeds: usize) -> PathBuf {
    if seeds == 1 {
        return base.to_path_buf();
    }
    let stem = base.file_stem().and_then(|s| s.to_str()).unwrap_or("trace");
    let name = match base.extension().and_then(|e| e.to_str()) {
        Some(ext) => format!("{stem}-{seed}.{ext}"),
        None => format!("{stem}-{seed}"),
    };
    base.with_file_name(name)
}

fn report(o: &RunOutcome) {
    let r = &o.record;
    eprintln!(
        "seed={} nodes={} heads={} orphans={} coverage={:.2}% rounds={} messages={} trace_hash={:#018x}",
        r.seed,
        r.node_count,
        r.ch_count,
        r.orphan_count,
        r.coverage_pct,
        r.rounds,
        r.total_messages(),
        o.trace_hash
    );
}

fn emit(records: &[MetricsRecord], path: Option<&Path>) -> Result<()> {
    match path {
        Some(p) => write_csv(records, p)?,
        None => print!("{}", to_csv(records)?),
    }
    Ok(())
}

fn run(config: &Path) -> Result<()> {
    let cfg = load_config(config)?;
    let mut records = Vec::with_capacity(cfg.seeds.len());
    for &seed in &cfg.seeds {
        let sink: Option<Box<dyn Write>> = match &cfg.output.trace {
            Some(base) => {
                let path = trace_path(base, seed, cfg.seeds.len());
                let file = File::create(&path).with_context(|| path.display().to_string())?;
                Some(Box::new(BufWriter::new(file)))
            }
            None => None,
        };
        match run_seed(&cfg, seed, sink) {
            Ok(o) => {
                report(&o);
                records.push(o.record);
            }
            Err(ExperimentError::NotQuiescent { seed, rounds, record }) => {
                eprint!("{}", to_csv(&[*record])?);
                bail!("seed {seed}: no quiescence within the {rounds}-round cap");
            }
            Err(e) => return Err(e.into()),
        }
    }
    emit(&records, cfg.output.csv.as_deref())
}

fn run_sweep(config: &Path, axis: Axis, values: &str, metric: &str) -> Result<()> {
    let cfg = load_config(config)?;
    let values = parse_values(values)?;
    let result = sweep(&cfg, axis, &values)?;
    emit(&result.records(), cfg.output.csv.as_deref())?;
    let summary = result.summary_csv();
    match &cfg.output.csv {
        Some(csv) => {
            let stem = csv.file_stem().and_then(|s| s.to_str()).unwrap_or("sweep");
            let path = csv.with_file_name(format!("{stem}-summary.csv"));
            std::fs::write(&path, summary).with_context(|| path.display().to_string())?;
        }
        None => eprint!("{summary}"),
    }
    if let Some(plot) = &cfg.output.plot {
        std::fs::write(plot, render_svg(&result, metric)).with_context(|| plot.display().to_string())?;
    }
    Ok(())
}

fn generate(spec: &Path, seed: u64, out: &Path) -> Result<()> {
    let cfg = ExperimentConfig::load(spec)?;
    let topology = build_topology(&cfg.topology.spec(seed))?;
    topology.save(out)?;
    eprintln!(
        "{} nodes, {} edges, mean degree {:.2}, largest component {:.1}%",
        topology.len(),
        topology.edge_count(),
        topology.mean_degree(),
        100.0 * topology.giant_component_fraction()
    );
    Ok(())
}

fn validate() -> Result<bool> {
    let exe = std::env::current_exe()?;
    let dir = tempfile::tempdir()?;
    let invoke = |i: usize| criteria::spawned_golden_run(&exe, dir.path(), i);
    let mut all = true;
    for r in criteria::run_all(&invoke) {
        println!("{r}");
        all &= r.passed;
    }
    Ok(all)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Generate { spec, seed, out } => generate(&spec, seed, &out).map(|_| true),
        Command::Run { config } => run(&config).map(|_| true),
        Command::Sweep { config, axis, values, metric } => run_sweep(&config, axis, &values, &metric).map(|_| true),
        Command::Validate => validate(),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_values() {
        assert_eq!(parse_values("1, 2,4").unwrap(), vec![1.0, 2.0, 4.0]);
        assert_eq!(parse_values("100..300:100").unwrap(), vec![100.0, 200.0, 300.0]);
        assert!(parse_values("1..2:0").is_err());
        assert!(parse_values("x").is_err());
    }

    #[test]
    fn trace_files_per_seed() {
        assert_eq!(trace_path(Path::new("out/t.log"), 3, 1), PathBuf::from("out/t.log"));
        assert_eq!(trace_path(Path::new("out/t.log"), 3, 2), PathBuf::from("out/t-3.log"));
    }
}
