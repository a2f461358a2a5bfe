//! The three pluggable component contracts and the context the Core
//! Component hands to them.

use std::collections::BTreeMap;

use super::node::Shared;
use super::state::{ClusterState, EventKind, Parameters, Role};
use crate::it::{GatewayTable, MembershipTable, MocaTables};
use crate::sim::{Context, Destination};
use crate::wire::{HelloPayload, MsgType, WireMessage};
use crate::{ClusterId, NodeId};

/// Outcome of the cluster-head decision for one epoch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Election {
    Head,
    NotHead,
    /// The decision also fixed the cluster to join (max-min election).
    Elected { head: NodeId, parent: NodeId, hops: u8 },
}

/// Cluster-Head Decision.
pub trait HeadDecision {
    fn name(&self) -> &'static str;
    fn set_parameters(&mut self, params: &Parameters);
    /// Starts the decision for a new epoch. Returns the verdict if it needs no
    /// message rounds.
    fn begin(&mut self, cx: &mut Cx<'_, '_>) -> Option<Election>;
    fn on_message(&mut self, _cx: &mut Cx<'_, '_>, _msg: &WireMessage) -> Option<Election> {
        None
    }
    fn on_timer(&mut self, _cx: &mut Cx<'_, '_>, _code: u8) -> Option<Election> {
        None
    }
    fn on_round_end(&mut self, _cx: &mut Cx<'_, '_>) -> Option<Election> {
        None
    }
    /// Message rounds the decision takes; constant in network size.
    fn decision_rounds(&self) -> u64;
}

/// Join Decision. Owns the traversal that turns an election into clusters.
pub trait JoinDecision {
    fn name(&self) -> &'static str;
    fn set_parameters(&mut self, params: &Parameters);
    fn reset(&mut self);
    /// Hop bound of the clusters this module forms.
    fn radius(&self) -> u8;
    /// Whether clustered nodes finish by the idle timeout. Traversals that know
    /// exactly when they are done return false and call [`Cx::complete`].
    fn completes_by_timeout(&self) -> bool {
        true
    }
    fn on_election(&mut self, cx: &mut Cx<'_, '_>, election: Election);
    fn on_message(&mut self, cx: &mut Cx<'_, '_>, msg: &WireMessage, rssi: f64);
    fn on_timer(&mut self, _cx: &mut Cx<'_, '_>, _code: u8, _nonce: u32) {}
    fn on_round_end(&mut self, _cx: &mut Cx<'_, '_>) {}
}

/// Iterator: neighbourhood classification and membership tables.
pub trait NeighborIterator {
    fn name(&self) -> &'static str;
    fn reset(&mut self, own: NodeId, neighbors: &[NodeId]);
    fn table(&self) -> &MembershipTable;
    fn table_mut(&mut self) -> &mut MembershipTable;
    /// Yields unexamined neighbours in ascending id order, never twice per epoch.
    fn next_neighbor(&mut self) -> Option<NodeId>;
    fn moca(&self) -> Option<&MocaTables> {
        None
    }
    fn moca_mut(&mut self) -> Option<&mut MocaTables> {
        None
    }
    fn gateway(&self) -> &GatewayTable;
    fn gateway_mut(&mut self) -> &mut GatewayTable;
    fn on_message(&mut self, _net: &mut Context<'_>, _core: &mut Shared, _msg: &WireMessage) {}
    fn on_round_end(&mut self, _net: &mut Context<'_>, _core: &mut Shared) {}
}

/// What a module sees while handling an input: the radio, the node's shared
/// state, and the node's iterator.
pub struct Cx<'a, 'b> {
    pub net: &'a mut Context<'b>,
    pub core: &'a mut Shared,
    pub it: &'a mut dyn NeighborIterator,
}

impl<'a, 'b> Cx<'a, 'b> {
    pub fn id(&self) -> NodeId {
        self.core.info.id
    }

    pub fn round(&self) -> u64 {
        self.net.round()
    }

    pub fn epoch(&self) -> u8 {
        self.core.epoch
    }

    pub fn state(&self) -> &ClusterState {
        &self.core.state
    }

    pub fn params(&self) -> &Parameters {
        &self.core.params
    }

    pub fn send(&mut self, dest: Destination, msg: &WireMessage) {
        self.core.send(self.net, dest, msg);
    }

    pub fn broadcast(&mut self, msg: &WireMessage) {
        self.send(Destination::Broadcast, msg);
    }

    pub fn unicast(&mut self, to: NodeId, msg: &WireMessage) {
        self.send(Destination::Node(to), msg);
    }

    pub fn message(&self, t: MsgType, cluster: ClusterId, hops: u8) -> WireMessage {
        WireMessage::new(t, self.id(), cluster, hops)
    }

    /// Arms a module timer; `owner` tells the Core Component where to route it.
    pub fn set_timer(&mut self, delay: u64, owner: TimerOwner, code: u8, nonce: u32) {
        let token = TimerToken { owner, code, epoch: self.core.epoch, nonce }.pack();
        self.net.set_timer(delay, token);
    }

    pub fn emit(&mut self, kind: EventKind, subject: NodeId, cluster: ClusterId) {
        let round = self.net.round();
        self.core.emit(round, kind, subject, cluster);
    }

    /// Records a membership change, restarting the idle-completion clock.
    pub fn touch(&mut self) {
        self.core.touch(self.net);
    }

    /// Next hop toward `head` learnt this epoch.
    pub fn next_hop(&self, head: ClusterId) -> Option<NodeId> {
        self.core.next_hop.get(&head).map(|r| r.0)
    }

    pub fn learn_route(&mut self, head: ClusterId, via: NodeId, hops: u8) {
        self.core.next_hop.insert(head, (via, hops));
    }

    pub fn routes(&self) -> &BTreeMap<ClusterId, (NodeId, u8)> {
        &self.core.next_hop
    }

    /// True while the node may still accept an invitation: unclustered, or a
    /// self-promoted orphan with no members.
    pub fn joinable(&self) -> bool {
        self.core.state.role == Role::Unclustered || self.core.orphan
    }

    pub fn become_head(&mut self) {
        let id = self.id();
        self.core.state = ClusterState::head(id);
        self.core.covered = true;
        self.core.elected_head = true;
        self.it.table_mut().parent = id;
        self.reclassify();
        self.emit(EventKind::ClusterFormed, id, id);
        self.touch();
    }

    /// Joins `head` through `parent`. Emits JOINED_CLUSTER (and
    /// CLUSTER_HEAD_CHANGED when leaving an earlier cluster).
    pub fn join(&mut self, head: ClusterId, parent: NodeId, hops: u8) {
        let id = self.id();
        let previous = self.core.state;
        self.core.state = ClusterState::member(head, parent, hops);
        self.core.covered = true;
        self.core.orphan = false;
        self.learn_route(head, parent, hops);
        self.it.table_mut().parent = parent;
        if previous.role.is_clustered() && previous.cluster_id != head {
            self.emit(EventKind::ClusterHeadChanged, id, head);
        }
        self.reclassify();
        self.emit(EventKind::JoinedCluster, id, head);
        self.touch();
    }

    /// Moves to a shorter path toward the current head. Emits nothing: the
    /// node's cluster is unchanged.
    pub fn reparent(&mut self, parent: NodeId, hops: u8) {
        let head = self.core.state.cluster_id;
        let role = self.core.state.role;
        self.core.state = ClusterState { role, ..ClusterState::member(head, parent, hops) };
        self.learn_route(head, parent, hops);
        self.it.table_mut().parent = parent;
        self.reclassify();
        self.touch();
    }

    /// Announces the node's final cluster to its neighbours.
    pub fn announce(&mut self) {
        let s = self.core.state;
        let role = if self.core.orphan { Role::ORPHAN_CODE } else { s.role.code() };
        let msg = self
            .message(MsgType::NeighborHello, s.cluster_id, s.hops_to_head)
            .with_payload(HelloPayload { epoch: self.epoch(), role }.encode());
        self.broadcast(&msg);
    }

    /// Declares this node's part of the formation finished.
    pub fn complete(&mut self) {
        let round = self.net.round();
        self.core.complete(round);
    }

    /// Re-sorts known neighbour clusters against this node's current cluster,
    /// refreshes the gateway links and the MEMBER/GATEWAY role.
    pub fn reclassify(&mut self) {
        let own = self.core.state;
        let round = self.net.round();
        let newly_foreign = self.it.table_mut().reclassify(&own);
        let links = self.it.table().foreign_links(&own);
        self.it.gateway_mut().foreign_links = links;
        let has_links = !self.it.gateway().foreign_links.is_empty();
        match self.core.state.role {
            Role::Member if has_links => self.core.state.role = Role::Gateway,
            Role::Gateway if !has_links => self.core.state.role = Role::Member,
            _ => {}
        }
        for (n, c) in newly_foreign {
            self.core.emit(round, EventKind::NeighborOtherCluster, n, c);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum TimerOwner {
    Core = 0,
    Chd = 1,
    Jd = 2,
    It = 3,
}

/// Packs timer ownership, epoch and a module nonce into the opaque kernel token.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TimerToken {
    pub owner: TimerOwner,
    pub code: u8,
    pub epoch: u8,
    pub nonce: u32,
}

impl TimerToken {
    pub fn pack(self) -> u64 {
        (self.owner as u64) | (u64::from(self.code) << 8) | (u64::from(self.epoch) << 16) | (u64::from(self.nonce) << 24)
    }

    pub fn unpack(token: u64) -> TimerToken {
        let owner = match token & 0xff {
            1 => TimerOwner::Chd,
            2 => TimerOwner::Jd,
            3 => TimerOwner::It,
            _ => TimerOwner::Core,
        };
        TimerToken { owner, code: (token >> 8) as u8, epoch: (token >> 16) as u8, nonce: (token >> 24) as u32 }
    }
}
