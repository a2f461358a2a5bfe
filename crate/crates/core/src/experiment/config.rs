//! Line-oriented `key = value` experiment configuration.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::cluster::{AlgorithmComposition, ChdKind, ItKind, JdKind, Parameters, Preset};
use crate::network::EnergyModel;
use crate::sim::{TopologyKind, TopologySpec};

/// Environment variable that replaces the configured seeds with one seed.
pub const SEED_ENV: &str = "CLUSTERKIT_SEED";

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("{0}")]
    Invalid(String),
    #[error("{path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum AlgorithmChoice {
    Preset(Preset),
    Custom { chd: ChdKind, jd: JdKind, it: ItKind },
}

impl AlgorithmChoice {
    pub fn name(&self) -> String {
        match self {
            AlgorithmChoice::Preset(p) => p.name().to_string(),
            AlgorithmChoice::Custom { chd, jd, it } => {
                format!("{}+{}+{}", chd_name(chd), jd_name(*jd), it_name(*it))
            }
        }
    }
}

fn chd_name(c: &ChdKind) -> &'static str {
    match c {
        ChdKind::Prob => "prob",
        ChdKind::Attr => "attr",
        ChdKind::Leach => "leach_chd",
        ChdKind::Tcca => "tcca_chd",
        ChdKind::MaxMind => "maxmind_chd",
        ChdKind::Designated(_) => "designated",
    }
}

fn jd_name(j: JdKind) -> &'static str {
    match j {
        JdKind::Bfs => "bfs",
        JdKind::Dfs => "dfs",
        JdKind::Lca => "lca_jd",
        JdKind::Leach => "leach_jd",
        JdKind::Tcca => "tcca_jd",
        JdKind::Moca => "moca_jd",
        JdKind::MaxMind => "maxmind_jd",
    }
}

fn it_name(i: ItKind) -> &'static str {
    match i {
        ItKind::Norm => "norm",
        ItKind::Moca => "moca_it",
        ItKind::MaxMind => "maxmind_it",
    }
}

fn parse_chd(s: &str) -> Option<ChdKind> {
    Some(match s {
        "prob" => ChdKind::Prob,
        "attr" => ChdKind::Attr,
        "leach" | "leach_chd" => ChdKind::Leach,
        "tcca" | "tcca_chd" => ChdKind::Tcca,
        "maxmind" | "maxmind_chd" => ChdKind::MaxMind,
        _ => return None,
    })
}

fn parse_jd(s: &str) -> Option<JdKind> {
    Some(match s {
        "bfs" => JdKind::Bfs,
        "dfs" => JdKind::Dfs,
        "lca" | "lca_jd" => JdKind::Lca,
        "leach" | "leach_jd" => JdKind::Leach,
        "tcca" | "tcca_jd" => JdKind::Tcca,
        "moca" | "moca_jd" => JdKind::Moca,
        "maxmind" | "maxmind_jd" => JdKind::MaxMind,
        _ => return None,
    })
}

fn parse_it(s: &str) -> Option<ItKind> {
    Some(match s {
        "norm" => ItKind::Norm,
        "moca" | "moca_it" => ItKind::Moca,
        "maxmind" | "maxmind_it" => ItKind::MaxMind,
        _ => return None,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TopologyConfig {
    pub kind: TopologyKind,
    pub node_count: usize,
    pub comm_range: f64,
}

impl TopologyConfig {
    pub fn spec(&self, seed: u64) -> TopologySpec {
        TopologySpec { kind: self.kind.clone(), node_count: self.node_count, comm_range: self.comm_range, seed }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct OutputSpec {
    pub csv: Option<PathBuf>,
    pub plot: Option<PathBuf>,
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub algorithm: AlgorithmChoice,
    pub topology: TopologyConfig,
    pub params: Parameters,
    pub seeds: Vec<u64>,
    pub loss: f64,
    pub energy: EnergyModel,
    /// Formations to run when `params.t > 0`.
    pub formations: u32,
    pub output: OutputSpec,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            algorithm: AlgorithmChoice::Preset(Preset::Lca),
            topology: TopologyConfig {
                kind: TopologyKind::FixedDensity { density: 8.0 },
                node_count: 100,
                comm_range: 20.0,
            },
            params: Parameters::default(),
            seeds: (0..20).collect(),
            loss: 0.0,
            energy: EnergyModel::default(),
            formations: 1,
            output: OutputSpec::default(),
        }
    }
}

fn value<T: FromStr>(line: usize, key: &str, v: &str) -> Result<T, ConfigError> {
    v.parse().map_err(|_| ConfigError::Syntax { line, msg: format!("bad value {v:?} for {key}") })
}

/// Parses `a,b,c` or a half-open range `a..b`.
pub fn parse_seed_list(v: &str) -> Option<Vec<u64>> {
    if let Some((a, b)) = v.split_once("..") {
        let (a, b): (u64, u64) = (a.trim().parse().ok()?, b.trim().parse().ok()?);
        return (a < b).then(|| (a..b).collect());
    }
    v.split(',').map(|s| s.trim().parse().ok()).collect()
}

impl ExperimentConfig {
    pub fn composition(&self) -> AlgorithmComposition {
        match &self.algorithm {
            AlgorithmChoice::Preset(p) => AlgorithmComposition::preset(*p, self.params),
            AlgorithmChoice::Custom { chd, jd, it } => AlgorithmComposition::new(chd.clone(), *jd, *it, self.params),
        }
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
        let mut cfg = Self::parse(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        if let TopologyKind::File { path: p } = &mut cfg.topology.kind {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = ExperimentConfig::default();
        let mut section = String::new();
        let mut preset: Option<Preset> = None;
        let (mut chd, mut jd, mut it) = (None, None, None);
        let mut kind = "fixed-density".to_string();
        let (mut density, mut world_side, mut file) = (8.0, None, None);
        let (mut e_lo, mut e_hi, mut e_full) = (0.2, 1.0, false);
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let l = raw.split('#').next().unwrap_or("").trim();
            if l.is_empty() {
                continue;
            }
            if let Some(name) = l.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
                section = name.trim().to_ascii_lowercase();
                if !matches!(section.as_str(), "experiment" | "topology" | "algorithm" | "radio" | "output") {
                    return Err(ConfigError::Syntax { line, msg: format!("unknown section [{section}]") });
                }
                continue;
            }
            let (k, v) = l
                .split_once('=')
                .ok_or_else(|| ConfigError::Syntax { line, msg: format!("expected key = value, got {l:?}") })?;
            let (k, v) = (k.trim().to_ascii_lowercase(), v.trim());
            let unknown = || ConfigError::Syntax { line, msg: format!("unknown key {k:?} in [{section}]") };
            match (section.as_str(), k.as_str()) {
                ("" | "experiment", "seeds") => {
                    cfg.seeds = parse_seed_list(v)
                        .ok_or_else(|| ConfigError::Syntax { line, msg: format!("bad seed list {v:?}") })?
                }
                ("" | "experiment", "seed") => cfg.seeds = vec![value(line, &k, v)?],
                ("topology", "kind") => kind = v.to_ascii_lowercase(),
                ("topology", "nodes" | "node_count") => cfg.topology.node_count = value(line, &k, v)?,
                ("topology", "density") => density = value(line, &k, v)?,
                ("topology", "world_side" | "side") => world_side = Some(value(line, &k, v)?),
                ("topology", "range" | "comm_range") => cfg.topology.comm_range = value(line, &k, v)?,
                ("topology", "file" | "path") => file = Some(PathBuf::from(v)),
                ("algorithm", "preset" | "name") => {
                    preset = Some(v.parse().map_err(|e| ConfigError::Syntax { line, msg: format!("{e}") })?)
                }
                ("algorithm", "chd") => chd = Some(parse_chd(v).ok_or_else(unknown)?),
                ("algorithm", "jd") => jd = Some(parse_jd(v).ok_or_else(unknown)?),
                ("algorithm", "it") => it = Some(parse_it(v).ok_or_else(unknown)?),
                ("algorithm", "p") => cfg.params.p = value(line, &k, v)?,
                ("algorithm", "t") => cfg.params.t = value(line, &k, v)?,
                ("algorithm", "k") => cfg.params.k = value(line, &k, v)?,
                ("algorithm", "d") => cfg.params.d = value(line, &k, v)?,
                ("algorithm", "desired_fraction" | "p_desired") => cfg.params.desired_fraction = value(line, &k, v)?,
                ("algorithm", "e_max") => cfg.params.e_max = value(line, &k, v)?,
                ("algorithm", "formations") => cfg.formations = value(line, &k, v)?,
                ("algorithm", "energy") => match v {
                    "full" => e_full = true,
                    "uniform" => e_full = false,
                    _ => return Err(unknown()),
                },
                ("algorithm", "energy_min") => e_lo = value(line, &k, v)?,
                ("algorithm", "energy_max") => e_hi = value(line, &k, v)?,
                ("radio", "loss") => cfg.loss = value(line, &k, v)?,
                ("output", "csv") => cfg.output.csv = Some(PathBuf::from(v)),
                ("output", "plot") => cfg.output.plot = Some(PathBuf::from(v)),
                ("output", "trace") => cfg.output.trace = Some(PathBuf::from(v)),
                _ => return Err(unknown()),
            }
        }
        cfg.topology.kind = match kind.as_str() {
            "fixed-density" => TopologyKind::FixedDensity { density },
            "fixed-diameter" => TopologyKind::FixedDiameter {
                world_side: world_side.ok_or_else(|| ConfigError::Invalid("fixed-diameter needs world_side".into()))?,
            },
            "file" => TopologyKind::File {
                path: file.ok_or_else(|| ConfigError::Invalid("file topology needs file".into()))?,
            },
            other => return Err(ConfigError::Invalid(format!("unknown topology kind {other:?}"))),
        };
        cfg.energy = if e_full { EnergyModel::Full } else { EnergyModel::Uniform { lo: e_lo, hi: e_hi } };
        cfg.algorithm = match (preset, chd, jd, it) {
            (Some(p), None, None, None) => AlgorithmChoice::Preset(p),
            (None, Some(chd), Some(jd), Some(it)) => AlgorithmChoice::Custom { chd, jd, it },
            (None, None, None, None) => cfg.algorithm,
            _ => {
                return Err(ConfigError::Invalid(
                    "give either a preset or all three of chd, jd and it".into(),
                ))
            }
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Applies a `CLUSTERKIT_SEED` value, if one is given.
    pub fn with_seed_override(mut self, env_value: Option<&str>) -> Result<Self, ConfigError> {
        if let Some(v) = env_value {
            let seed = v.trim().parse().map_err(|_| ConfigError::Invalid(format!("{SEED_ENV}={v:?} is not a seed")))?;
            self.seeds = vec![seed];
        }
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.composition().validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if self.seeds.is_empty() {
            return Err(ConfigError::Invalid("no seeds".into()));
        }
        if !(0.0..=1.0).contains(&self.loss) {
            return Err(ConfigError::Invalid(format!("loss {} outside [0, 1]", self.loss)));
        }
        if self.topology.node_count == 0 && !matches!(self.topology.kind, TopologyKind::File { .. }) {
            return Err(ConfigError::Invalid("node_count must be at least 1".into()));
        }
        if self.formations == 0 {
            return Err(ConfigError::Invalid("formations must be at least 1".into()));
        }
        Ok(())
    }
}
