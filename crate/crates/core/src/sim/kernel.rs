//! Round-based radio simulation.
//!
//! Each call to [`Simulator::step_round`] advances the clock by one round and
//! then, in order: delivers every frame sent during the previous round (sorted
//! by sender id, then enqueue order), fires the timers due this round in
//! registration order, and finally gives every node touched by either step a
//! chance to act through [`Process::on_round_end`]. Anything sent during round
//! `r` is delivered in round `r + 1`.

use std::collections::BTreeMap;
use std::hash::Hasher;
use std::io::Write;
use std::rc::Rc;

use fnv::FnvHasher;
use rand::Rng;

use super::rng::{self, NodeRng, Stream};
use super::topology::Topology;
use crate::wire::MsgType;
use crate::NodeId;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadioModel {
    pub loss_probability: f64,
}

impl RadioModel {
    pub fn lossless() -> Self {
        RadioModel { loss_probability: 0.0 }
    }

    pub fn lossy(p: f64) -> Self {
        assert!((0.0..=1.0).contains(&p), "loss probability {p} outside [0, 1]");
        RadioModel { loss_probability: p }
    }
}

impl Default for RadioModel {
    fn default() -> Self {
        RadioModel::lossless()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Destination {
    Broadcast,
    Node(NodeId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RoundReport {
    pub round_index: u64,
    pub messages_delivered: u64,
    pub messages_dropped: u64,
    pub timers_fired: u64,
    pub quiescent: bool,
}

/// Cumulative radio counters.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SimStats {
    /// Transmissions per message-type tag, counted once per send call.
    pub sent_by_type: BTreeMap<u8, u64>,
    /// Copies scheduled for delivery (one per receiving neighbour).
    pub enqueued: u64,
    pub delivered: u64,
    pub dropped: u64,
    /// Unicasts addressed to a node that is not a neighbour of the sender.
    pub unreachable_unicasts: u64,
    pub timers_fired: u64,
}

impl SimStats {
    pub fn sent(&self, t: MsgType) -> u64 {
        self.sent_by_type.get(&t.tag()).copied().unwrap_or(0)
    }

    pub fn total_sent(&self) -> u64 {
        self.sent_by_type.values().sum()
    }
}

pub struct Delivery<'a> {
    pub from: NodeId,
    /// Received-signal proxy: the negated sender-receiver distance.
    pub rssi: f64,
    pub frame: &'a [u8],
}

/// Per-node protocol logic driven by the simulator.
pub trait Process {
    fn on_message(&mut self, cx: &mut Context<'_>, delivery: &Delivery<'_>);
    fn on_timer(&mut self, cx: &mut Context<'_>, token: u64);
    fn on_round_end(&mut self, _cx: &mut Context<'_>) {}
}

struct Outgoing {
    dest: Destination,
    frame: Vec<u8>,
}

/// A node's handle on the radio and timer service while it runs a handler.
pub struct Context<'a> {
    node: NodeId,
    round: u64,
    neighbors: &'a [NodeId],
    outbox: &'a mut Vec<Outgoing>,
    timers: &'a mut Vec<(u64, u64)>,
}

impl<'a> Context<'a> {
    pub fn id(&self) -> NodeId {
        self.node
    }

    pub fn round(&self) -> u64 {
        self.round
    }

    pub fn neighbors(&self) -> &[NodeId] {
        self.neighbors
    }

    pub fn send(&mut self, dest: Destination, frame: Vec<u8>) {
        self.outbox.push(Outgoing { dest, frame });
    }

    pub fn broadcast(&mut self, frame: Vec<u8>) {
        self.send(Destination::Broadcast, frame);
    }

    pub fn unicast(&mut self, to: NodeId, frame: Vec<u8>) {
        self.send(Destination::Node(to), frame);
    }

    /// Fires `token` back at this node `delay` rounds from now (delay >= 1).
    pub fn set_timer(&mut self, delay: u64, token: u64) {
        assert!(delay >= 1, "timer delay must be at least one round");
        self.timers.push((delay, token));
    }
}

struct Envelope {
    sender: NodeId,
    seq: u64,
    to: usize,
    rssi: f64,
    dropped: bool,
    frame: Rc<[u8]>,
}

pub struct Simulator<P> {
    topology: Topology,
    radio: RadioModel,
    nodes: Vec<P>,
    round: u64,
    pending: Vec<Envelope>,
    timers: BTreeMap<u64, Vec<(usize, u64)>>,
    loss_rngs: Vec<NodeRng>,
    stats: SimStats,
    seq: u64,
    outbox: Vec<Outgoing>,
    new_timers: Vec<(u64, u64)>,
    trace_hash: FnvHasher,
    trace_sink: Option<Box<dyn Write>>,
    touched: Vec<bool>,
}

impl<P: Process> Simulator<P> {
    /// `make` builds the process for each node, in ascending id order.
    pub fn new(topology: Topology, radio: RadioModel, seed: u64, mut make: impl FnMut(NodeId) -> P) -> Self {
        let nodes: Vec<P> = topology.ids().map(&mut make).collect();
        let loss_rngs = topology.ids().map(|id| rng::stream(seed, Stream::Radio, id)).collect();
        let n = nodes.len();
        Simulator {
            topology,
            radio,
            nodes,
            round: 0,
            pending: Vec::new(),
            timers: BTreeMap::new(),
            loss_rngs,
            stats: SimStats::default(),
            seq: 0,
            outbox: Vec::new(),
            new_timers: Vec::new(),
            trace_hash: FnvHasher::default(),
            trace_sink: None,
            touched: vec![false; n],
        }
    }

    /// Writes one `round=.. type=.. from=.. to=.. dropped=..` line per send.
    pub fn set_trace_sink(&mut self, sink: Box<dyn Write>) {
        self.trace_sink = Some(sink);
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn radio(&self) -> RadioModel {
        self.radio
    }

    pub fn round(&self) -> u64 {
        self.round
    }

    pub fn stats(&self) -> &SimStats {
        &self.stats
    }

    /// FNV-1a digest of every trace line produced so far.
    pub fn trace_hash(&self) -> u64 {
        self.trace_hash.finish()
    }

    pub fn node(&self, id: NodeId) -> Option<&P> {
        self.topology.index_of(id).map(|i| &self.nodes[i])
    }

    pub fn node_mut(&mut self, id: NodeId) -> Option<&mut P> {
        self.topology.index_of(id).map(move |i| &mut self.nodes[i])
    }

    /// Processes in ascending id order.
    pub fn processes(&self) -> impl Iterator<Item = (NodeId, &P)> + '_ {
        self.topology.ids().zip(self.nodes.iter())
    }

    pub fn is_quiescent(&self) -> bool {
        self.pending.is_empty() && self.timers.is_empty()
    }

    /// Runs `f` against node `id` with a live context, as if it were a handler
    /// executing in the current round. Panics on an unknown id.
    pub fn with_node<R>(&mut self, id: NodeId, f: impl FnOnce(&mut P, &mut Context<'_>) -> R) -> R {
        let idx = self.topology.index_of(id).unwrap_or_else(|| panic!("unknown node {id}"));
        self.run_handler(idx, f)
    }

    /// Sends a frame from `sender` outside any handler.
    pub fn send(&mut self, sender: NodeId, dest: Destination, frame: Vec<u8>) {
        self.with_node(sender, |_, cx| cx.send(dest, frame));
    }

    pub fn set_timer(&mut self, node: NodeId, delay: u64, token: u64) {
        self.with_node(node, |_, cx| cx.set_timer(delay, token));
    }

    fn run_handler<R>(&mut self, idx: usize, f: impl FnOnce(&mut P, &mut Context<'_>) -> R) -> R {
        let id = self.topology.nodes()[idx].id;
        let mut cx = Context {
            node: id,
            round: self.round,
            neighbors: self.topology.neighbors_at(idx),
            outbox: &mut self.outbox,
            timers: &mut self.new_timers,
        };
        let r = f(&mut self.nodes[idx], &mut cx);
        self.flush(idx);
        r
    }

    fn flush(&mut self, idx: usize) {
        let sender = self.topology.nodes()[idx].id;
        for (delay, token) in self.new_timers.drain(..) {
            self.timers.entry(self.round + delay).or_default().push((idx, token));
        }
        let outgoing = std::mem::take(&mut self.outbox);
        for out in outgoing {
            let tag = out.frame.first().copied().unwrap_or(0);
            *self.stats.sent_by_type.entry(tag).or_default() += 1;
            let frame: Rc<[u8]> = out.frame.into();
            let (targets, label): (Vec<NodeId>, String) = match out.dest {
                Destination::Broadcast => (self.topology.neighbors_at(idx).to_vec(), "*".to_string()),
                Destination::Node(to) => {
                    if self.topology.are_adjacent(sender, to) {
                        (vec![to], to.to_string())
                    } else {
                        self.stats.unreachable_unicasts += 1;
                        (Vec::new(), to.to_string())
                    }
                }
            };
            let mut all_dropped = true;
            for to in targets {
                let dropped = self.radio.loss_probability > 0.0
                    && self.loss_rngs[idx].gen::<f64>() < self.radio.loss_probability;
                all_dropped &= dropped;
                let rssi = -self.topology.distance(sender, to).unwrap_or(f64::INFINITY);
                self.seq += 1;
                self.stats.enqueued += 1;
                self.pending.push(Envelope {
                    sender,
                    seq: self.seq,
                    to: self.topology.index_of(to).expect("neighbour is a known node"),
                    rssi,
                    dropped,
                    frame: frame.clone(),
                });
            }
            let kind = MsgType::from_tag(tag).map(|t| t.name().to_string()).unwrap_or_else(|| format!("0x{tag:02x}"));
            let line = format!(
                "round={} type={} from={} to={} dropped={}",
                self.round,
                kind,
                sender,
                label,
                u8::from(all_dropped)
            );
            self.record_trace(&line);
        }
    }

    /// Feeds an externally produced line (e.g. cluster events) into the trace.
    pub fn record_trace(&mut self, line: &str) {
        self.trace_hash.write(line.as_bytes());
        self.trace_hash.write_u8(b'\n');
        if let Some(sink) = self.trace_sink.as_mut() {
            let _ = writeln!(sink, "{line}");
        }
    }

    pub fn step_round(&mut self) -> RoundReport {
        self.round += 1;
        let mut report = RoundReport { round_index: self.round, ..RoundReport::default() };
        let mut due = std::mem::take(&mut self.pending);
        due.sort_by_key(|e| (e.sender, e.seq));
        let mut touched = Vec::new();
        for env in due {
            if env.dropped {
                report.messages_dropped += 1;
                continue;
            }
            report.messages_delivered += 1;
            if !self.touched[env.to] {
                self.touched[env.to] = true;
                touched.push(env.to);
            }
            let delivery = Delivery { from: env.sender, rssi: env.rssi, frame: &env.frame };
            self.run_handler(env.to, |p, cx| p.on_message(cx, &delivery));
        }
        if let Some(fired) = self.timers.remove(&self.round) {
            for (idx, token) in fired {
                report.timers_fired += 1;
                if !self.touched[idx] {
                    self.touched[idx] = true;
                    touched.push(idx);
                }
                self.run_handler(idx, |p, cx| p.on_timer(cx, token));
            }
        }
        touched.sort_unstable();
        for idx in touched {
            self.touched[idx] = false;
            self.run_handler(idx, |p, cx| p.on_round_end(cx));
        }
        self.stats.delivered += report.messages_delivered;
        self.stats.dropped += report.messages_dropped;
        self.stats.timers_fired += report.timers_fired;
        report.quiescent = self.is_quiescent();
        report
    }

    /// Steps until quiescent; `None` if `max_rounds` elapse first.
    pub fn run_until_quiescent(&mut self, max_rounds: u64) -> Option<Vec<RoundReport>> {
        let mut reports = Vec::new();
        if self.is_quiescent() {
            return Some(reports);
        }
        for _ in 0..max_rounds {
            let r = self.step_round();
            reports.push(r);
            if r.quiescent {
                return Some(reports);
            }
        }
        None
    }

    pub fn into_parts(self) -> (Topology, Vec<P>) {
        (self.topology, self.nodes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::topology::PlacedNode;

    /// Records what it hears; echoes nothing.
    #[derive(Default)]
    struct Recorder {
        heard: Vec<(u64, NodeId, Vec<u8>)>,
        fired: Vec<(u64, u64)>,
        period: Option<u64>,
    }

    impl Process for Recorder {
        fn on_message(&mut self, cx: &mut Context<'_>, d: &Delivery<'_>) {
            self.heard.push((cx.round(), d.from, d.frame.to_vec()));
        }
        fn on_timer(&mut self, cx: &mut Context<'_>, token: u64) {
            self.fired.push((cx.round(), token));
            if let Some(t) = self.period {
                cx.set_timer(t, token);
            }
        }
    }

    fn star(leaves: u32) -> Topology {
        let mut nodes = vec![PlacedNode { id: 0, x: 0.0, y: 0.0 }];
        for i in 0..leaves {
            let a = i as f64 * std::f64::consts::TAU / leaves as f64;
            nodes.push(PlacedNode { id: i + 1, x: 5.0 * a.cos(), y: 5.0 * a.sin() });
        }
        Topology::new(nodes, 6.0).unwrap()
    }

    #[test]
    fn empty_network_is_quiescent() {
        let t = Topology::new(vec![], 1.0).unwrap();
        let mut sim = Simulator::new(t, RadioModel::lossless(), 0, |_| Recorder::default());
        let r = sim.step_round();
        assert_eq!(r, RoundReport { round_index: 1, quiescent: true, ..RoundReport::default() });
    }

    #[test]
    fn lossless_broadcast_reaches_each_neighbor_next_round() {
        let mut sim = Simulator::new(star(3), RadioModel::lossless(), 0, |_| Recorder::default());
        sim.send(0, Destination::Broadcast, vec![1, 2]);
        let r = sim.step_round();
        assert_eq!(r.messages_delivered, 3);
        assert!(r.quiescent);
        for leaf in 1..=3 {
            assert_eq!(sim.node(leaf).unwrap().heard, vec![(1, 0, vec![1, 2])]);
        }
    }

    #[test]
    fn unicast_to_neighbor_delivers_once_and_to_stranger_never() {
        let mut sim = Simulator::new(star(4), RadioModel::lossless(), 0, |_| Recorder::default());
        sim.send(0, Destination::Node(2), vec![9]);
        sim.send(1, Destination::Node(3), vec![9]);
        let r = sim.step_round();
        assert_eq!(r.messages_delivered, 1);
        assert_eq!(sim.stats().unreachable_unicasts, 1);
        assert_eq!(sim.stats().total_sent(), 2);
    }

    #[test]
    fn timers_fire_on_schedule_in_registration_order() {
        let mut sim = Simulator::new(star(1), RadioModel::lossless(), 0, |_| Recorder::default());
        for _ in 0..5 {
            sim.step_round();
        }
        sim.set_timer(1, 3, 10);
        sim.set_timer(1, 3, 11);
        for _ in 0..3 {
            sim.step_round();
        }
        assert_eq!(sim.node(1).unwrap().fired, vec![(8, 10), (8, 11)]);
    }

    #[test]
    fn periodic_timer_matches_closed_form() {
        let mut sim = Simulator::new(star(1), RadioModel::lossless(), 0, |_| Recorder { period: Some(4), ..Default::default() });
        sim.set_timer(0, 4, 1);
        for _ in 0..20 {
            sim.step_round();
        }
        let rounds: Vec<u64> = sim.node(0).unwrap().fired.iter().map(|f| f.0).collect();
        assert_eq!(rounds, (1..=5).map(|i| 4 * i).collect::<Vec<_>>());
    }

    #[test]
    fn delivery_order_is_sender_then_enqueue() {
        let mut sim = Simulator::new(star(3), RadioModel::lossless(), 0, |_| Recorder::default());
        sim.send(3, Destination::Node(0), vec![3, 0]);
        sim.send(1, Destination::Node(0), vec![1, 0]);
        sim.send(3, Destination::Node(0), vec![3, 1]);
        sim.send(2, Destination::Node(0), vec![2, 0]);
        sim.step_round();
        let order: Vec<Vec<u8>> = sim.node(0).unwrap().heard.iter().map(|h| h.2.clone()).collect();
        assert_eq!(order, vec![vec![1, 0], vec![2, 0], vec![3, 0], vec![3, 1]]);
    }

    #[test]
    fn loss_conserves_copies() {
        let mut sim = Simulator::new(star(100), RadioModel::lossy(0.5), 7, |_| Recorder::default());
        let mut delivered = 0;
        let mut dropped = 0;
        for _ in 0..50 {
            sim.send(0, Destination::Broadcast, vec![0]);
            let r = sim.step_round();
            assert_eq!(r.messages_delivered + r.messages_dropped, 100);
            delivered += r.messages_delivered;
            dropped += r.messages_dropped;
        }
        assert_eq!(sim.stats().enqueued, delivered + dropped);
    }
}
