//! The Core Component: drives the CHD → JD → IT life-cycle on one node.

use std::collections::BTreeMap;
use std::fmt;

use super::composition::AlgorithmComposition;
use super::contracts::{Cx, Election, HeadDecision, JoinDecision, NeighborIterator, TimerOwner, TimerToken};
use super::state::{ClusterEvent, ClusterState, EventKind, LoggedEvent, NodeInfo, Parameters, Role};
use crate::it::{GatewayTable, MembershipTable, MocaTables};
use crate::sim::rng::{self, NodeRng, Stream};
use crate::sim::{Context, Delivery, Destination, Process};
use crate::wire::{decode_message, DecodeError, HelloPayload, MsgType, WireMessage};
use crate::{ClusterId, NodeId};

const WATCHDOG: u8 = 1;
const RECLUSTER: u8 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CallbackId(pub u32);

type Callback = Box<dyn FnMut(&ClusterEvent)>;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct NodeCounters {
    pub decode_errors: u64,
    pub unknown_type: u64,
    pub malformed_payload: u64,
    pub stale_epoch: u64,
}

/// Node state visible to every module.
pub struct Shared {
    pub info: NodeInfo,
    pub params: Parameters,
    pub state: ClusterState,
    pub epoch: u8,
    pub epoch_start: u64,
    pub rng: NodeRng,
    /// Reached by a head (or elected one) before any orphan promotion.
    pub covered: bool,
    /// Self-promoted singleton.
    pub orphan: bool,
    /// Head by election rather than by orphan promotion.
    pub elected_head: bool,
    pub chd_done: Option<u64>,
    /// Formations started so far, counting the current one.
    pub formations: u32,
    /// Formation indices (zero-based) in which this node was elected head.
    pub head_terms: Vec<u32>,
    pub complete_round: Option<u64>,
    /// Next hop and hop count toward each head learnt this epoch.
    pub next_hop: BTreeMap<ClusterId, (NodeId, u8)>,
    pub counters: NodeCounters,
    last_change: u64,
    watchdog_armed: bool,
    idle_timeout: u64,
    timeout_completion: bool,
    events: Vec<LoggedEvent>,
    callbacks: Vec<(CallbackId, Callback)>,
    next_callback: u32,
}

impl fmt::Debug for Shared {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Shared")
            .field("info", &self.info)
            .field("state", &self.state)
            .field("epoch", &self.epoch)
            .field("orphan", &self.orphan)
            .field("complete_round", &self.complete_round)
            .finish_non_exhaustive()
    }
}

impl Shared {
    pub fn send(&mut self, net: &mut Context<'_>, dest: Destination, msg: &WireMessage) {
        match msg.encode() {
            Ok(frame) => net.send(dest, frame),
            Err(e) => panic!("node {} built an unencodable {}: {e}", self.info.id, msg.msg_type),
        }
    }

    pub fn emit(&mut self, round: u64, kind: EventKind, subject: NodeId, cluster: ClusterId) {
        let event = ClusterEvent { kind, subject, cluster };
        self.events.push(LoggedEvent { round, node: self.info.id, event });
        for (_, cb) in self.callbacks.iter_mut() {
            cb(&event);
        }
    }

    pub fn touch(&mut self, net: &mut Context<'_>) {
        self.last_change = net.round();
        if self.timeout_completion || !self.state.role.is_clustered() {
            self.complete_round = None;
        }
        if !self.watchdog_armed && self.chd_done.is_some() {
            self.arm_watchdog(net, self.idle_timeout);
        }
    }

    fn arm_watchdog(&mut self, net: &mut Context<'_>, delay: u64) {
        self.watchdog_armed = true;
        let token = TimerToken { owner: TimerOwner::Core, code: WATCHDOG, epoch: self.epoch, nonce: 0 };
        net.set_timer(delay.max(1), token.pack());
    }

    pub fn complete(&mut self, round: u64) {
        if self.complete_round.is_none() {
            self.complete_round = Some(round);
            let (id, cluster) = (self.info.id, self.state.cluster_id);
            self.emit(round, EventKind::FormationComplete, id, cluster);
        }
    }

    pub fn idle_timeout(&self) -> u64 {
        self.idle_timeout
    }
}

pub struct ClusterNode {
    core: Shared,
    chd: Box<dyn HeadDecision>,
    jd: Box<dyn JoinDecision>,
    it: Box<dyn NeighborIterator>,
    enabled: bool,
    deciding: bool,
    neighbors: Vec<NodeId>,
}

impl fmt::Debug for ClusterNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ClusterNode")
            .field("chd", &self.chd.name())
            .field("jd", &self.jd.name())
            .field("it", &self.it.name())
            .field("core", &self.core)
            .finish()
    }
}

impl ClusterNode {
    pub fn new(info: NodeInfo, composition: &AlgorithmComposition, seed: u64) -> ClusterNode {
        let (mut chd, mut jd, mut it) = composition.instantiate();
        let params = composition.params;
        chd.set_parameters(&params);
        jd.set_parameters(&params);
        it.reset(info.id, &[]);
        let idle_timeout = 2 * u64::from(jd.radius()) + 2;
        let timeout_completion = jd.completes_by_timeout();
        ClusterNode {
            core: Shared {
                info,
                params,
                state: ClusterState::unclustered(info.id),
                epoch: 0,
                epoch_start: 0,
                rng: rng::stream(seed, Stream::Election, info.id),
                covered: false,
                orphan: false,
                elected_head: false,
                chd_done: None,
                formations: 0,
                head_terms: Vec::new(),
                complete_round: None,
                next_hop: BTreeMap::new(),
                counters: NodeCounters::default(),
                last_change: 0,
                watchdog_armed: false,
                idle_timeout,
                timeout_completion,
                events: Vec::new(),
                callbacks: Vec::new(),
                next_callback: 0,
            },
            chd,
            jd,
            it,
            enabled: false,
            deciding: false,
            neighbors: Vec::new(),
        }
    }

    pub fn id(&self) -> NodeId {
        self.core.info.id
    }

    pub fn info(&self) -> &NodeInfo {
        &self.core.info
    }

    /// Starts cluster formation. A second call is a no-op.
    pub fn enable(&mut self, net: &mut Context<'_>) {
        if self.enabled {
            return;
        }
        self.enabled = true;
        self.neighbors = net.neighbors().to_vec();
        self.start_epoch(net);
        if self.core.params.t > 0 {
            let token = TimerToken { owner: TimerOwner::Core, code: RECLUSTER, epoch: 0, nonce: 0 };
            net.set_timer(self.core.params.t, token.pack());
        }
    }

    pub fn is_enabled(&self) -> bool {
        self.enabled
    }

    pub fn register_changed_callback(&mut self, cb: impl FnMut(&ClusterEvent) + 'static) -> CallbackId {
        let id = CallbackId(self.core.next_callback);
        self.core.next_callback += 1;
        self.core.callbacks.push((id, Box::new(cb)));
        id
    }

    pub fn unregister_callback(&mut self, id: CallbackId) -> bool {
        let before = self.core.callbacks.len();
        self.core.callbacks.retain(|(c, _)| *c != id);
        before != self.core.callbacks.len()
    }

    pub fn state(&self) -> &ClusterState {
        &self.core.state
    }

    pub fn epoch(&self) -> u8 {
        self.core.epoch
    }

    pub fn params(&self) -> &Parameters {
        &self.core.params
    }

    pub fn events(&self) -> &[LoggedEvent] {
        &self.core.events
    }

    pub fn table(&self) -> &MembershipTable {
        self.it.table()
    }

    pub fn moca(&self) -> Option<&MocaTables> {
        self.it.moca()
    }

    pub fn gateway(&self) -> &GatewayTable {
        self.it.gateway()
    }

    pub fn is_orphan(&self) -> bool {
        self.core.orphan
    }

    pub fn is_covered(&self) -> bool {
        self.core.covered
    }

    pub fn is_elected_head(&self) -> bool {
        self.core.elected_head
    }

    pub fn chd_done_round(&self) -> Option<u64> {
        self.core.chd_done
    }

    /// Zero-based formation indices in which the CHD elected this node.
    pub fn head_terms(&self) -> &[u32] {
        &self.core.head_terms
    }

    /// Rounds from the start of the current formation to the CHD verdict.
    pub fn chd_rounds(&self) -> Option<u64> {
        self.core.chd_done.map(|r| r - self.core.epoch_start)
    }

    /// Round this node last declared FORMATION_COMPLETE, if it has.
    pub fn formation_complete(&self) -> Option<u64> {
        self.core.complete_round
    }

    pub fn counters(&self) -> &NodeCounters {
        &self.core.counters
    }

    pub fn routes(&self) -> &BTreeMap<ClusterId, (NodeId, u8)> {
        &self.core.next_hop
    }

    pub fn module_names(&self) -> (&'static str, &'static str, &'static str) {
        (self.chd.name(), self.jd.name(), self.it.name())
    }

    fn start_epoch(&mut self, net: &mut Context<'_>) {
        let c = &mut self.core;
        c.epoch = c.epoch.wrapping_add(1);
        c.formations += 1;
        c.epoch_start = net.round();
        c.state = ClusterState::unclustered(c.info.id);
        c.covered = false;
        c.orphan = false;
        c.elected_head = false;
        c.chd_done = None;
        c.complete_round = None;
        c.next_hop.clear();
        c.last_change = net.round();
        c.watchdog_armed = false;
        self.it.reset(c.info.id, &self.neighbors);
        self.jd.reset();
        self.deciding = true;
        let verdict = {
            let mut cx = Cx { net, core: &mut self.core, it: self.it.as_mut() };
            self.chd.begin(&mut cx)
        };
        if let Some(e) = verdict {
            self.on_election(net, e);
        }
    }

    fn on_election(&mut self, net: &mut Context<'_>, election: Election) {
        self.deciding = false;
        self.core.chd_done = Some(net.round());
        let elected = match election {
            Election::Head => true,
            Election::NotHead => false,
            Election::Elected { head, .. } => head == self.core.info.id,
        };
        if elected {
            let term = self.core.formations - 1;
            self.core.head_terms.push(term);
        }
        let mut cx = Cx { net, core: &mut self.core, it: self.it.as_mut() };
        self.jd.on_election(&mut cx, election);
        cx.touch();
    }

    fn on_watchdog(&mut self, net: &mut Context<'_>) {
        self.core.watchdog_armed = false;
        let now = net.round();
        let due = self.core.last_change + self.core.idle_timeout;
        if now < due {
            self.core.arm_watchdog(net, due - now);
            return;
        }
        let mut cx = Cx { net, core: &mut self.core, it: self.it.as_mut() };
        if cx.core.state.role == Role::Unclustered {
            let id = cx.id();
            cx.core.state = ClusterState::head(id);
            cx.core.orphan = true;
            cx.it.table_mut().parent = id;
            cx.reclassify();
            cx.emit(EventKind::ClusterFormed, id, id);
            cx.announce();
        }
        if cx.core.timeout_completion || cx.core.orphan {
            cx.complete();
        }
    }

    fn handle_hello(&mut self, net: &mut Context<'_>, msg: &WireMessage) {
        let hello = match HelloPayload::decode(&msg.payload) {
            Ok(h) => h,
            Err(_) => {
                self.core.counters.malformed_payload += 1;
                return;
            }
        };
        if hello.epoch != self.core.epoch {
            self.core.counters.stale_epoch += 1;
            return;
        }
        self.it.table_mut().observe(msg.sender, msg.cluster_id, msg.hops, hello.role == Role::ORPHAN_CODE);
        let mut cx = Cx { net, core: &mut self.core, it: self.it.as_mut() };
        cx.reclassify();
    }
}

impl Process for ClusterNode {
    fn on_message(&mut self, net: &mut Context<'_>, d: &Delivery<'_>) {
        if !self.enabled {
            return;
        }
        let msg = match decode_message(d.frame) {
            Ok(m) => m,
            Err(e) => {
                self.core.counters.decode_errors += 1;
                if matches!(e, DecodeError::UnknownType(_)) {
                    self.core.counters.unknown_type += 1;
                }
                return;
            }
        };
        match msg.msg_type {
            MsgType::Attribute => {
                if !self.deciding {
                    return;
                }
                let verdict = {
                    let mut cx = Cx { net, core: &mut self.core, it: self.it.as_mut() };
                    self.chd.on_message(&mut cx, &msg)
                };
                if let Some(e) = verdict {
                    self.on_election(net, e);
                }
            }
            MsgType::JoinRequest | MsgType::JoinAccept | MsgType::JoinDeny | MsgType::Resume => {
                let mut cx = Cx { net, core: &mut self.core, it: self.it.as_mut() };
                self.jd.on_message(&mut cx, &msg, d.rssi);
            }
            MsgType::NeighborHello => self.handle_hello(net, &msg),
            MsgType::Convergecast => self.it.on_message(net, &mut self.core, &msg),
            MsgType::Route => {}
        }
    }

    fn on_timer(&mut self, net: &mut Context<'_>, token: u64) {
        let t = TimerToken::unpack(token);
        if t.owner == TimerOwner::Core && t.code == RECLUSTER {
            self.start_epoch(net);
            net.set_timer(self.core.params.t, token);
            return;
        }
        if t.epoch != self.core.epoch {
            return;
        }
        match t.owner {
            TimerOwner::Core if t.code == WATCHDOG => self.on_watchdog(net),
            TimerOwner::Core => {}
            TimerOwner::Chd => {
                if !self.deciding {
                    return;
                }
                let verdict = {
                    let mut cx = Cx { net, core: &mut self.core, it: self.it.as_mut() };
                    self.chd.on_timer(&mut cx, t.code)
                };
                if let Some(e) = verdict {
                    self.on_election(net, e);
                }
            }
            TimerOwner::Jd => {
                let mut cx = Cx { net, core: &mut self.core, it: self.it.as_mut() };
                self.jd.on_timer(&mut cx, t.code, t.nonce);
            }
            TimerOwner::It => {}
        }
    }

    fn on_round_end(&mut self, net: &mut Context<'_>) {
        if !self.enabled {
            return;
        }
        if self.deciding {
            let verdict = {
                let mut cx = Cx { net, core: &mut self.core, it: self.it.as_mut() };
                self.chd.on_round_end(&mut cx)
            };
            if let Some(e) = verdict {
                self.on_election(net, e);
            }
        }
        {
            let mut cx = Cx { net, core: &mut self.core, it: self.it.as_mut() };
            self.jd.on_round_end(&mut cx);
        }
        self.it.on_round_end(net, &mut self.core);
    }
}
