//! Configuration-driven experiments: run a composition over seeded
//! topologies, collect metrics, sweep parameters and write CSV and SVG output.

pub mod config;
pub mod metrics;
pub mod plot;
pub mod runner;
pub mod sweep;

pub use config::{AlgorithmChoice, ConfigError, ExperimentConfig, OutputSpec, TopologyConfig, SEED_ENV};
pub use metrics::{measure, parse_csv, to_csv, write_csv, CsvError, MetricsRecord, CSV_HEADER};
pub use plot::render_svg;
pub use runner::{round_cap, run_experiment, run_seed, ExperimentError, RunOutcome};
pub use sweep::{sweep, Axis, SweepResult, SweepSummary};
