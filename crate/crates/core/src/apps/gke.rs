//! Group key establishment driven by clustering events: every join folds the
//! joiner's secret into the head's running state and formation completion
//! finalizes the key.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::rc::Rc;

use rand::Rng;

use crate::cluster::{CallbackId, ClusterEvent, EventKind};
use crate::network::ClusterNetwork;
use crate::sim::rng::{self, Stream};
use crate::{ClusterId, NodeId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GroupKey {
    pub value: u64,
    pub contributors: u32,
}

/// Folds per-node secrets into a group key.
pub trait KeyCombiner {
    type State: Clone;
    fn init(&self) -> Self::State;
    fn contribute(&self, state: Self::State, secret: u64) -> Self::State;
    fn finalize(&self, state: &Self::State, contributors: u32) -> GroupKey;
}

/// Sum of secrets modulo 2^64. Commutative, so visit order does not matter.
#[derive(Debug, Clone, Copy, Default)]
pub struct AdditiveCombiner;

impl KeyCombiner for AdditiveCombiner {
    type State = u64;

    fn init(&self) -> u64 {
        0
    }

    fn contribute(&self, state: u64, secret: u64) -> u64 {
        state.wrapping_add(secret)
    }

    fn finalize(&self, state: &u64, contributors: u32) -> GroupKey {
        GroupKey { value: *state, contributors }
    }
}

/// One seeded 64-bit secret per node.
pub fn node_secrets(seed: u64, ids: impl IntoIterator<Item = NodeId>) -> BTreeMap<NodeId, u64> {
    ids.into_iter().map(|id| (id, rng::stream(seed, Stream::Secret, id).gen())).collect()
}

struct Running<S> {
    state: S,
    contributors: u32,
}

struct Inner<S> {
    running: BTreeMap<ClusterId, Running<S>>,
    keys: BTreeMap<ClusterId, GroupKey>,
    join_order: BTreeMap<ClusterId, Vec<NodeId>>,
}

/// Hooks a combiner into every node of a network through its change callbacks.
pub struct GroupKeySession<C: KeyCombiner> {
    inner: Rc<RefCell<Inner<C::State>>>,
    registrations: Vec<(NodeId, CallbackId)>,
}

impl<C: KeyCombiner + 'static> GroupKeySession<C> {
    /// Registers the session's callbacks. Call before enabling the nodes.
    pub fn attach(net: &mut ClusterNetwork, combiner: C, secrets: BTreeMap<NodeId, u64>) -> Self {
        let inner = Rc::new(RefCell::new(Inner {
            running: BTreeMap::new(),
            keys: BTreeMap::new(),
            join_order: BTreeMap::new(),
        }));
        let combiner = Rc::new(combiner);
        let secrets = Rc::new(secrets);
        let ids: Vec<NodeId> = net.topology().ids().collect();
        let mut registrations = Vec::with_capacity(ids.len());
        for id in ids {
            let (inner, combiner, secrets) = (inner.clone(), combiner.clone(), secrets.clone());
            let cb = net.node_mut(id).register_changed_callback(move |e: &ClusterEvent| {
                let secret = |n: NodeId| secrets.get(&n).copied().unwrap_or(0);
                let mut s = inner.borrow_mut();
                match e.kind {
                    EventKind::ClusterFormed if e.subject == id => {
                        let state = combiner.contribute(combiner.init(), secret(id));
                        s.running.insert(id, Running { state, contributors: 1 });
                        s.keys.remove(&id);
                        s.join_order.insert(id, Vec::new());
                    }
                    EventKind::NodeJoined => {
                        if let Some(r) = s.running.get_mut(&id) {
                            r.state = combiner.contribute(r.state.clone(), secret(e.subject));
                            r.contributors += 1;
                            s.join_order.entry(id).or_default().push(e.subject);
                        }
                    }
                    EventKind::FormationComplete if e.cluster == id => {
                        if let Some(r) = s.running.get(&id) {
                            let key = combiner.finalize(&r.state, r.contributors);
                            s.keys.insert(id, key);
                        }
                    }
                    _ => {}
                }
            });
            registrations.push((id, cb));
        }
        GroupKeySession { inner, registrations }
    }

    /// Finalized keys of the clusters whose heads are still heads.
    pub fn keys(&self, net: &ClusterNetwork) -> BTreeMap<ClusterId, GroupKey> {
        let heads = net.heads();
        self.inner.borrow().keys.iter().filter(|(c, _)| heads.contains(c)).map(|(&c, &k)| (c, k)).collect()
    }

    /// Order in which each head saw its members join.
    pub fn join_order(&self, head: ClusterId) -> Vec<NodeId> {
        self.inner.borrow().join_order.get(&head).cloned().unwrap_or_default()
    }

    /// The key each node ends up holding once its head pushes it down the
    /// cluster tree.
    pub fn member_keys(&self, net: &ClusterNetwork) -> BTreeMap<NodeId, GroupKey> {
        let keys = self.keys(net);
        net.nodes()
            .filter_map(|n| {
                let s = n.state();
                let key = keys.get(&s.cluster_id).filter(|_| s.role.is_clustered())?;
                Some((n.id(), *key))
            })
            .collect()
    }

    pub fn detach(self, net: &mut ClusterNetwork) {
        for (id, cb) in self.registrations {
            net.node_mut(id).unregister_callback(cb);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn additive_combiner_is_order_free() {
        let c = AdditiveCombiner;
        let secrets = [u64::MAX, 3, 1 << 63, 42];
        let fwd = secrets.iter().fold(c.init(), |s, &x| c.contribute(s, x));
        let rev = secrets.iter().rev().fold(c.init(), |s, &x| c.contribute(s, x));
        assert_eq!(c.finalize(&fwd, 4), c.finalize(&rev, 4));
        assert_eq!(fwd, u64::MAX.wrapping_add(3).wrapping_add(1 << 63).wrapping_add(42));
    }

    #[test]
    fn secrets_are_seeded_per_node() {
        let a = node_secrets(5, [1, 2, 3]);
        assert_eq!(a, node_secrets(5, [3, 2, 1]));
        assert_ne!(a, node_secrets(6, [1, 2, 3]));
        assert_eq!(node_secrets(5, [2])[&2], a[&2]);
    }
}
