//! Applications built on a formed clustering: cluster-aware routing and
//! group key establishment.

pub mod gke;
pub mod routing;

pub use gke::{node_secrets, AdditiveCombiner, GroupKey, GroupKeySession, KeyCombiner};
pub use routing::{ClusterRadio, RouteError, RouteMode, RouteResult};
