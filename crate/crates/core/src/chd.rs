//! Cluster-head decision modules: PROB, ATTR, LEACH, TCCA and max-min.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;

use crate::cluster::{Cx, Election, HeadDecision, Parameters, TimerOwner};
use crate::wire::{decode_flood_id, encode_flood_id, AttributePayload, MsgType, WireMessage};
use crate::NodeId;

const ROUND: u8 = 1;

/// True with probability `p`.
pub fn prob_calculate_head<R: Rng + ?Sized>(p: f64, rng: &mut R) -> bool {
    rng.gen::<f64>() < p
}

/// Formation rounds in one LEACH rotation epoch: ⌈1/P⌉.
pub fn leach_cycle(p_desired: f64) -> u64 {
    ((1.0 / p_desired) - 1e-9).ceil().max(1.0) as u64
}

/// LEACH election threshold for formation round `round`.
pub fn leach_threshold(p_desired: f64, round: u64, was_head_this_epoch: bool) -> f64 {
    if was_head_this_epoch {
        return 0.0;
    }
    let r = (round % leach_cycle(p_desired)) as f64;
    let denom = 1.0 - p_desired * r;
    if denom <= 0.0 {
        1.0
    } else {
        (p_desired / denom).min(1.0)
    }
}

/// True with probability `p · energy / e_max`.
pub fn tcca_calculate_head<R: Rng + ?Sized>(p: f64, energy: f64, e_max: f64, rng: &mut R) -> bool {
    let scale = (energy / e_max).clamp(0.0, 1.0);
    rng.gen::<f64>() < p * scale
}

/// Applies the max-min selection rules to one node's WINNER logs.
pub fn maxmind_elect(own: NodeId, floodmax: &[NodeId], floodmin: &[NodeId]) -> NodeId {
    if floodmin.contains(&own) {
        return own;
    }
    let max_set: BTreeSet<NodeId> = floodmax.iter().copied().collect();
    if let Some(&pair) = floodmin.iter().filter(|v| max_set.contains(v)).min() {
        return pair;
    }
    floodmax.iter().copied().max().unwrap_or(own)
}

#[derive(Debug, Default)]
pub struct ProbChd {
    p: f64,
}

impl HeadDecision for ProbChd {
    fn name(&self) -> &'static str {
        "prob"
    }

    fn set_parameters(&mut self, params: &Parameters) {
        self.p = params.p;
    }

    fn begin(&mut self, cx: &mut Cx<'_, '_>) -> Option<Election> {
        Some(if prob_calculate_head(self.p, &mut cx.core.rng) { Election::Head } else { Election::NotHead })
    }

    fn decision_rounds(&self) -> u64 {
        0
    }
}

#[derive(Debug, Default)]
pub struct LeachChd {
    p_desired: f64,
    formations: u64,
    was_head: bool,
}

impl HeadDecision for LeachChd {
    fn name(&self) -> &'static str {
        "leach_chd"
    }

    fn set_parameters(&mut self, params: &Parameters) {
        self.p_desired = params.desired_fraction;
    }

    fn begin(&mut self, cx: &mut Cx<'_, '_>) -> Option<Election> {
        let r = self.formations;
        self.formations += 1;
        if r.is_multiple_of(leach_cycle(self.p_desired)) {
            self.was_head = false;
        }
        let threshold = leach_threshold(self.p_desired, r, self.was_head);
        if cx.core.rng.gen::<f64>() < threshold {
            self.was_head = true;
            Some(Election::Head)
        } else {
            Some(Election::NotHead)
        }
    }

    fn decision_rounds(&self) -> u64 {
        0
    }
}

#[derive(Debug, Default)]
pub struct TccaChd {
    p: f64,
    e_max: f64,
}

impl HeadDecision for TccaChd {
    fn name(&self) -> &'static str {
        "tcca_chd"
    }

    fn set_parameters(&mut self, params: &Parameters) {
        self.p = params.p;
        self.e_max = params.e_max;
    }

    fn begin(&mut self, cx: &mut Cx<'_, '_>) -> Option<Election> {
        let energy = cx.core.info.energy;
        Some(if tcca_calculate_head(self.p, energy, self.e_max, &mut cx.core.rng) {
            Election::Head
        } else {
            Election::NotHead
        })
    }

    fn decision_rounds(&self) -> u64 {
        0
    }
}

#[derive(Debug, Default)]
pub struct DesignatedChd {
    heads: BTreeSet<NodeId>,
}

impl DesignatedChd {
    pub fn new(heads: BTreeSet<NodeId>) -> Self {
        DesignatedChd { heads }
    }
}

impl HeadDecision for DesignatedChd {
    fn name(&self) -> &'static str {
        "designated"
    }

    fn set_parameters(&mut self, _params: &Parameters) {}

    fn begin(&mut self, cx: &mut Cx<'_, '_>) -> Option<Election> {
        Some(if self.heads.contains(&cx.id()) { Election::Head } else { Election::NotHead })
    }

    fn decision_rounds(&self) -> u64 {
        0
    }
}

/// Minimum-attribute election over the k-hop neighbourhood. Each round a node
/// rebroadcasts the smallest (value, id) it knows, so after k rounds it has
/// heard the minimum of its k-hop neighbourhood.
#[derive(Debug, Default)]
pub struct AttrChd {
    k: u8,
    own: (u32, NodeId),
    best_other: Option<(u32, NodeId)>,
    rounds_done: u8,
}

impl AttrChd {
    fn current_min(&self) -> (u32, NodeId) {
        self.best_other.map_or(self.own, |b| b.min(self.own))
    }

    fn broadcast(&self, cx: &mut Cx<'_, '_>) {
        let (value, candidate) = self.current_min();
        let ttl = self.k - 1 - self.rounds_done;
        let msg = cx
            .message(MsgType::Attribute, candidate, self.rounds_done + 1)
            .with_payload(AttributePayload { value, ttl }.encode());
        cx.broadcast(&msg);
    }
}

impl HeadDecision for AttrChd {
    fn name(&self) -> &'static str {
        "attr"
    }

    fn set_parameters(&mut self, params: &Parameters) {
        self.k = params.k;
    }

    fn begin(&mut self, cx: &mut Cx<'_, '_>) -> Option<Election> {
        self.own = (cx.core.info.attribute, cx.id());
        self.best_other = None;
        self.rounds_done = 0;
        self.broadcast(cx);
        cx.set_timer(1, TimerOwner::Chd, ROUND, 0);
        None
    }

    fn on_message(&mut self, cx: &mut Cx<'_, '_>, msg: &WireMessage) -> Option<Election> {
        match AttributePayload::decode(&msg.payload) {
            Ok(a) if msg.cluster_id != self.own.1 => {
                let heard = (a.value, msg.cluster_id);
                self.best_other = Some(self.best_other.map_or(heard, |b| b.min(heard)));
            }
            Ok(_) => {}
            Err(_) => cx.core.counters.malformed_payload += 1,
        }
        None
    }

    fn on_timer(&mut self, cx: &mut Cx<'_, '_>, code: u8) -> Option<Election> {
        if code != ROUND {
            return None;
        }
        self.rounds_done += 1;
        if self.rounds_done < self.k {
            self.broadcast(cx);
            cx.set_timer(1, TimerOwner::Chd, ROUND, 0);
            return None;
        }
        let head = self.best_other.is_none_or(|b| self.own < b);
        Some(if head { Election::Head } else { Election::NotHead })
    }

    fn decision_rounds(&self) -> u64 {
        u64::from(self.k)
    }
}

/// Max-min d-hop election: d rounds of floodmax, d rounds of floodmin, then
/// the selection rules. Every received value also leaves a pointer to the
/// neighbour it came from, which later serves as the route toward that head.
#[derive(Debug, Default)]
pub struct MaxMindChd {
    d: u8,
    id: NodeId,
    winner: NodeId,
    rounds_done: u8,
    heard: Vec<NodeId>,
    floodmax: Vec<NodeId>,
    floodmin: Vec<NodeId>,
    pointers: BTreeMap<NodeId, (NodeId, u8)>,
}

impl MaxMindChd {
    /// WINNER values logged after each floodmax round.
    pub fn floodmax_log(&self) -> &[NodeId] {
        &self.floodmax
    }

    pub fn floodmin_log(&self) -> &[NodeId] {
        &self.floodmin
    }

    fn hops_to(&self, value: NodeId) -> u8 {
        if value == self.id {
            0
        } else {
            self.pointers.get(&value).map_or(0, |p| p.1)
        }
    }

    fn broadcast(&self, cx: &mut Cx<'_, '_>) {
        let msg = cx
            .message(MsgType::Attribute, self.winner, self.hops_to(self.winner))
            .with_payload(encode_flood_id(self.winner));
        cx.broadcast(&msg);
    }
}

impl HeadDecision for MaxMindChd {
    fn name(&self) -> &'static str {
        "maxmind_chd"
    }

    fn set_parameters(&mut self, params: &Parameters) {
        self.d = params.d;
    }

    fn begin(&mut self, cx: &mut Cx<'_, '_>) -> Option<Election> {
        self.id = cx.id();
        self.winner = self.id;
        self.rounds_done = 0;
        self.heard.clear();
        self.floodmax.clear();
        self.floodmin.clear();
        self.pointers.clear();
        self.broadcast(cx);
        cx.set_timer(1, TimerOwner::Chd, ROUND, 0);
        None
    }

    fn on_message(&mut self, cx: &mut Cx<'_, '_>, msg: &WireMessage) -> Option<Election> {
        let value = match decode_flood_id(&msg.payload) {
            Ok(v) => v,
            Err(_) => {
                cx.core.counters.malformed_payload += 1;
                return None;
            }
        };
        self.heard.push(value);
        if value != self.id {
            let offer = (msg.sender, msg.hops.saturating_add(1));
            let entry = self.pointers.entry(value).or_insert(offer);
            if (offer.1, offer.0) < (entry.1, entry.0) {
                *entry = offer;
            }
        }
        None
    }

    fn on_timer(&mut self, cx: &mut Cx<'_, '_>, code: u8) -> Option<Election> {
        if code != ROUND {
            return None;
        }
        self.rounds_done += 1;
        let heard = std::mem::take(&mut self.heard);
        if self.rounds_done <= self.d {
            self.winner = heard.into_iter().fold(self.winner, NodeId::max);
            self.floodmax.push(self.winner);
        } else {
            self.winner = heard.into_iter().fold(self.winner, NodeId::min);
            self.floodmin.push(self.winner);
        }
        if self.rounds_done < 2 * self.d {
            self.broadcast(cx);
            cx.set_timer(1, TimerOwner::Chd, ROUND, 0);
            return None;
        }
        for (&value, &(via, hops)) in &self.pointers {
            cx.learn_route(value, via, hops);
        }
        let head = maxmind_elect(self.id, &self.floodmax, &self.floodmin);
        match self.pointers.get(&head) {
            Some(&(parent, hops)) if head != self.id => Some(Election::Elected { head, parent, hops }),
            _ => Some(Election::Head),
        }
    }

    fn decision_rounds(&self) -> u64 {
        2 * u64::from(self.d)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn prob_extremes() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!((0..1000).all(|_| prob_calculate_head(1.0, &mut rng)));
        assert!((0..1000).all(|_| !prob_calculate_head(0.0, &mut rng)));
    }

    #[test]
    fn prob_fraction_within_binomial_interval() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let heads = (0..10_000).filter(|_| prob_calculate_head(0.15, &mut rng)).count();
        assert!((1400..=1600).contains(&heads), "{heads}");
    }

    #[test]
    fn leach_threshold_examples() {
        assert_eq!(leach_threshold(0.2, 3, true), 0.0);
        assert!((leach_threshold(0.2, 4, false) - 1.0).abs() < 1e-12);
        assert!((leach_threshold(0.2, 0, false) - 0.2).abs() < 1e-12);
        assert!((leach_threshold(0.2, 5, false) - 0.2).abs() < 1e-12);
        assert_eq!(leach_cycle(0.2), 5);
        assert_eq!(leach_cycle(0.05), 20);
        assert_eq!(leach_cycle(0.3), 4);
    }

    #[test]
    fn tcca_scaling() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert!((0..1000).all(|_| !tcca_calculate_head(0.9, 0.0, 1.0, &mut rng)));
        let heads = (0..10_000).filter(|_| tcca_calculate_head(0.4, 0.5, 1.0, &mut rng)).count();
        assert!((1800..=2200).contains(&heads), "{heads}");
        let mut a = ChaCha8Rng::seed_from_u64(11);
        let mut b = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            assert_eq!(tcca_calculate_head(0.3, 2.0, 2.0, &mut a), prob_calculate_head(0.3, &mut b));
        }
    }

    #[test]
    fn maxmind_rules() {
        assert_eq!(maxmind_elect(4, &[4, 4], &[4, 4]), 4);
        // star: centre 5, leaf 1, d = 1
        assert_eq!(maxmind_elect(5, &[5], &[5]), 5);
        assert_eq!(maxmind_elect(1, &[5], &[5]), 5);
        // pair rule picks the smallest id seen in both halves
        assert_eq!(maxmind_elect(2, &[7, 9], &[9, 7]), 7);
        // no pair: largest floodmax winner
        assert_eq!(maxmind_elect(2, &[7, 9], &[3, 3]), 9);
    }
}
