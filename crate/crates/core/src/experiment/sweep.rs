//! Parameter sweeps: one run per (value, seed), plus per-value summaries.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::experiment::config::ExperimentConfig;
use crate::experiment::metrics::MetricsRecord;
use crate::experiment::runner::{run_seed, ExperimentError};
use crate::sim::TopologyKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    NodeCount,
    P,
    K,
    D,
    Density,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::NodeCount => "node_count",
            Axis::P => "p",
            Axis::K => "k",
            Axis::D => "d",
            Axis::Density => "density",
        }
    }

    /// `cfg` with this axis set to `value`.
    pub fn apply(self, cfg: &ExperimentConfig, value: f64) -> Result<ExperimentConfig, ExperimentError> {
        let mut out = cfg.clone();
        let whole = |max: f64| -> Result<f64, ExperimentError> {
            if value.fract() != 0.0 || value < 0.0 || value > max {
                Err(ExperimentError::Invalid(format!("{} needs a whole number, got {value}", self.name())))
            } else {
                Ok(value)
            }
        };
        match self {
            Axis::NodeCount => out.topology.node_count = whole(u32::MAX as f64)? as usize,
            Axis::P => out.params.p = value,
            Axis::K => out.params.k = whole(u8::MAX as f64)? as u8,
            Axis::D => out.params.d = whole(u8::MAX as f64)? as u8,
            Axis::Density => out.topology.kind = TopologyKind::FixedDensity { density: value },
        }
        out.validate().map_err(|e| ExperimentError::Invalid(e.to_string()))?;
        Ok(out)
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Axis {
    type Err = ExperimentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "node_count" | "nodes" | "n" => Axis::NodeCount,
            "p" => Axis::P,
            "k" => Axis::K,
            "d" => Axis::D,
            "density" => Axis::Density,
            _ => return Err(ExperimentError::Invalid(format!("unknown sweep axis {s:?}"))),
        })
    }
}

/// Mean and sample standard deviation of each numeric metric at one value.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSummary {
    pub value: f64,
    pub runs: usize,
    pub stats: Vec<(&'static str, f64, f64)>,
}

impl SweepSummary {
    fn of(value: f64, records: &[&MetricsRecord]) -> Self {
        let columns = records[0].numeric().map(|(name, _)| name);
        let stats = columns
            .iter()
            .enumerate()
            .map(|(i, &name)| {
                let xs: Vec<f64> = records.iter().map(|r| r.numeric()[i].1).collect();
                let n = xs.len() as f64;
                let mean = xs.iter().sum::<f64>() / n;
                let var = if xs.len() > 1 { xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
                (name, mean, var.sqrt())
            })
            .collect();
        SweepSummary { value, runs: records.len(), stats }
    }

    pub fn mean(&self, metric: &str) -> Option<f64> {
        self.stats.iter().find(|s| s.0 == metric).map(|s| s.1)
    }

    pub fn stddev(&self, metric: &str) -> Option<f64> {
        self.stats.iter().find(|s| s.0 == metric).map(|s| s.2)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub axis: Axis,
    /// One row per (value, seed), in that order.
    pub rows: Vec<(f64, MetricsRecord)>,
    pub summary: Vec<SweepSummary>,
}

impl SweepResult {
    pub fn records(&self) -> Vec<MetricsRecord> {
        self.rows.iter().map(|(_, r)| r.clone()).collect()
    }

    /// Summary table as CSV: the sweep value, run count, then mean and
    /// stddev of every numeric metric.
    pub fn summary_csv(&self) -> String {
        let mut out = format!("{},runs", self.axis);
        if let Some(first) = self.summary.first() {
            for (name, _, _) in &first.stats {
                out.push_str(&format!(",{name}_mean,{name}_stddev"));
            }
        }
        out.push('\n');
        for s in &self.summary {
            out.push_str(&format!("{},{}", s.value, s.runs));
            for (_, mean, sd) in &s.stats {
                out.push_str(&format!(",{mean},{sd}"));
            }
            out.push('\n');
        }
        out
    }
}

/// Runs every (value, seed) pair in parallel. Rows come out sorted by
/// (value, seed) whatever the scheduling.
pub fn sweep(cfg: &ExperimentConfig, axis: Axis, values: &[f64]) -> Result<SweepResult, ExperimentError> {
    if values.is_empty() {
        return Err(ExperimentError::Invalid("sweep needs at least one value".into()));
    }
    let configs: Vec<(f64, ExperimentConfig)> =
        values.iter().map(|&v| axis.apply(cfg, v).map(|c| (v, c))).collect::<Result<_, _>>()?;
    let mut jobs: Vec<(f64, &ExperimentConfig, u64)> =
        configs.iter().flat_map(|(v, c)| c.seeds.iter().map(move |&s| (*v, c, s))).collect();
    jobs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.2.cmp(&b.2)));
    jobs.dedup_by(|a, b| a.0 == b.0 && a.2 == b.2);
    let mut values = values.to_vec();
    values.sort_by(f64::total_cmp);
    values.dedup();
    let rows: Vec<(f64, MetricsRecord)> = jobs
        .par_iter()
        .map(|&(v, c, s)| run_seed(c, s, None).map(|o| (v, o.record)))
        .collect::<Result<_, _>>()?;
    let summary = values
        .iter()
        .map(|&v| {
            let recs: Vec<&MetricsRecord> = rows.iter().filter(|(x, _)| *x == v).map(|(_, r)| r).collect();
            SweepSummary::of(v, &recs)
        })
        .collect();
    Ok(SweepResult { axis, rows, summary })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_values_are_rejected() {
        assert!(sweep(&ExperimentConfig::default(), Axis::P, &[]).is_err());
    }

    #[test]
    fn integer_axes_reject_fractions() {
        assert!(Axis::K.apply(&ExperimentConfig::default(), 2.5).is_err());
        assert_eq!(Axis::K.apply(&ExperimentConfig::default(), 3.0).unwrap().params.k, 3);
        assert_eq!("node_count".parse::<Axis>().unwrap(), Axis::NodeCount);
    }

    #[test]
    fn rows_are_ordered_by_value_then_seed() {
        let cfg = ExperimentConfig { seeds: vec![4, 1], ..ExperimentConfig::default() };
        let res = sweep(&cfg, Axis::NodeCount, &[30.0, 20.0]).unwrap();
        let keys: Vec<(f64, u64)> = res.rows.iter().map(|(v, r)| (*v, r.seed)).collect();
        assert_eq!(keys, vec![(20.0, 1), (20.0, 4), (30.0, 1), (30.0, 4)]);
        assert_eq!(res.summary.len(), 2);
        let mean = (res.rows[2].1.ch_count + res.rows[3].1.ch_count) as f64 / 2.0;
        assert_eq!(res.summary[1].mean("ch_count"), Some(mean));
        assert_eq!(res.summary_csv().lines().count(), 3);
    }
}
