//! Module choices and the five named algorithm presets.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use super::contracts::{HeadDecision, JoinDecision, NeighborIterator};
use super::state::{ParameterError, Parameters};
use crate::chd::{AttrChd, DesignatedChd, LeachChd, MaxMindChd, ProbChd, TccaChd};
use crate::it::{MaxMindIterator, MocaIterator, NormIterator};
use crate::jd::{BfsJoin, DfsJoin, FirstCome, LcaRule, LeachRule, MaxMindJoin, MocaRule, TccaRule};
use crate::NodeId;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ChdKind {
    Prob,
    Attr,
    Leach,
    Tcca,
    MaxMind,
    /// A fixed head set; useful for driving a join module in isolation.
    Designated(BTreeSet<NodeId>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JdKind {
    Bfs,
    Dfs,
    Lca,
    Leach,
    Tcca,
    Moca,
    MaxMind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ItKind {
    Norm,
    Moca,
    MaxMind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Preset {
    Lca,
    Leach,
    Tcca,
    Moca,
    MaxMind,
}

impl Preset {
    pub const ALL: [Preset; 5] = [Preset::Lca, Preset::Leach, Preset::Tcca, Preset::Moca, Preset::MaxMind];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Lca => "lca",
            Preset::Leach => "leach",
            Preset::Tcca => "tcca",
            Preset::Moca => "moca",
            Preset::MaxMind => "maxmind",
        }
    }

    pub fn modules(self) -> (ChdKind, JdKind, ItKind) {
        match self {
            Preset::Lca => (ChdKind::Prob, JdKind::Lca, ItKind::Norm),
            Preset::Leach => (ChdKind::Leach, JdKind::Leach, ItKind::Norm),
            Preset::Tcca => (ChdKind::Tcca, JdKind::Tcca, ItKind::Norm),
            Preset::Moca => (ChdKind::Prob, JdKind::Moca, ItKind::Moca),
            Preset::MaxMind => (ChdKind::MaxMind, JdKind::MaxMind, ItKind::MaxMind),
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown algorithm preset {0:?}")]
pub struct UnknownPreset(pub String);

impl FromStr for Preset {
    type Err = UnknownPreset;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| UnknownPreset(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CompositionError {
    #[error(transparent)]
    Parameter(#[from] ParameterError),
    #[error("{0} requires {1}")]
    Incompatible(&'static str, &'static str),
}

/// One CHD, one JD and one IT module plus the parameters fanned out to them.
#[derive(Debug, Clone, PartialEq)]
pub struct AlgorithmComposition {
    pub chd: ChdKind,
    pub jd: JdKind,
    pub it: ItKind,
    pub params: Parameters,
}

impl AlgorithmComposition {
    pub fn new(chd: ChdKind, jd: JdKind, it: ItKind, params: Parameters) -> Self {
        AlgorithmComposition { chd, jd, it, params }
    }

    pub fn preset(preset: Preset, params: Parameters) -> Self {
        let (chd, jd, it) = preset.modules();
        AlgorithmComposition { chd, jd, it, params }
    }

    /// The preset this composition matches, if any.
    pub fn preset_name(&self) -> Option<Preset> {
        Preset::ALL.into_iter().find(|p| {
            let (c, j, i) = p.modules();
            c == self.chd && j == self.jd && i == self.it
        })
    }

    pub fn validate(&self) -> Result<(), CompositionError> {
        self.params.validate()?;
        let maxmind_chd = self.chd == ChdKind::MaxMind;
        let maxmind_jd = self.jd == JdKind::MaxMind;
        if maxmind_chd && !maxmind_jd {
            return Err(CompositionError::Incompatible("maxmind_chd", "maxmind_jd"));
        }
        if maxmind_jd && !maxmind_chd {
            return Err(CompositionError::Incompatible("maxmind_jd", "maxmind_chd"));
        }
        if self.jd == JdKind::Moca && self.it != ItKind::Moca {
            return Err(CompositionError::Incompatible("moca_jd", "moca_it"));
        }
        Ok(())
    }

    /// Hop bound of the clusters the composition forms.
    pub fn radius(&self) -> u8 {
        match self.jd {
            JdKind::Leach => 1,
            JdKind::MaxMind => self.params.d,
            _ => self.params.k,
        }
    }

    pub fn instantiate(&self) -> (Box<dyn HeadDecision>, Box<dyn JoinDecision>, Box<dyn NeighborIterator>) {
        let chd: Box<dyn HeadDecision> = match &self.chd {
            ChdKind::Prob => Box::new(ProbChd::default()),
            ChdKind::Attr => Box::new(AttrChd::default()),
            ChdKind::Leach => Box::new(LeachChd::default()),
            ChdKind::Tcca => Box::new(TccaChd::default()),
            ChdKind::MaxMind => Box::new(MaxMindChd::default()),
            ChdKind::Designated(heads) => Box::new(DesignatedChd::new(heads.clone())),
        };
        let jd: Box<dyn JoinDecision> = match self.jd {
            JdKind::Bfs => Box::new(BfsJoin::new(FirstCome)),
            JdKind::Dfs => Box::new(DfsJoin::default()),
            JdKind::Lca => Box::new(BfsJoin::new(LcaRule)),
            JdKind::Leach => Box::new(BfsJoin::new(LeachRule)),
            JdKind::Tcca => Box::new(BfsJoin::new(TccaRule)),
            JdKind::Moca => Box::new(BfsJoin::new(MocaRule)),
            JdKind::MaxMind => Box::new(MaxMindJoin::default()),
        };
        let it: Box<dyn NeighborIterator> = match self.it {
            ItKind::Norm => Box::new(NormIterator::new()),
            ItKind::Moca => Box::new(MocaIterator::new()),
            ItKind::MaxMind => Box::new(MaxMindIterator::new()),
        };
        (chd, jd, it)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_parse_case_insensitively() {
        assert_eq!("MOCA".parse::<Preset>().unwrap(), Preset::Moca);
        assert!("kmeans".parse::<Preset>().is_err());
    }

    #[test]
    fn every_preset_validates_and_round_trips() {
        for p in Preset::ALL {
            let c = AlgorithmComposition::preset(p, Parameters::default());
            c.validate().unwrap();
            assert_eq!(c.preset_name(), Some(p));
            let (chd, jd, it) = c.instantiate();
            assert!(!chd.name().is_empty() && !jd.name().is_empty() && !it.name().is_empty());
        }
    }

    #[test]
    fn mismatched_modules_are_rejected() {
        let c = AlgorithmComposition::new(ChdKind::MaxMind, JdKind::Lca, ItKind::Norm, Parameters::default());
        assert!(matches!(c.validate(), Err(CompositionError::Incompatible(..))));
        let c = AlgorithmComposition::new(ChdKind::Prob, JdKind::Moca, ItKind::Norm, Parameters::default());
        assert!(c.validate().is_err());
    }
}
