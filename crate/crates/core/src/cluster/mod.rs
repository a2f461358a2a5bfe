//! The Core Component, the component contracts and algorithm compositions.

pub mod composition;
pub mod contracts;
pub mod node;
pub mod state;

pub use composition::{AlgorithmComposition, ChdKind, CompositionError, ItKind, JdKind, Preset};
pub use contracts::{Cx, Election, HeadDecision, JoinDecision, NeighborIterator, TimerOwner, TimerToken};
pub use node::{CallbackId, ClusterNode, NodeCounters, Shared};
pub use state::{ClusterEvent, ClusterState, EventKind, LoggedEvent, NodeInfo, ParameterError, Parameters, Role};
