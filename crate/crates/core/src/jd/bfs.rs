use std::collections::{BTreeMap, BTreeSet};

use super::rules::{choose, JoinRule, Offer};
use super::{absorb_or_forward_accept, send_accept, send_deny, send_request};
use crate::cluster::{Cx, Election, EventKind, JoinDecision, Parameters, TimerOwner};
use crate::wire::{decode_epoch, AcceptPayload, JoinRequestPayload, MsgType, WireMessage, MAX_LISTED_IDS};
use crate::ClusterId;

const DEADLINE: u8 = 1;
/// Rounds a joiner waits after its first request before deciding.
const DECISION_DELAY: u64 = 2;

/// Breadth-first cluster formation: heads flood a hop-limited request and
/// joiners pick among the heads they heard by a [`JoinRule`].
#[derive(Debug)]
pub struct BfsJoin<R: JoinRule> {
    rule: R,
    k: u8,
    params: Parameters,
    is_head: bool,
    offers: BTreeMap<ClusterId, Offer>,
    finalized: bool,
    fresh: bool,
    relayed: BTreeSet<ClusterId>,
    accepted: BTreeSet<ClusterId>,
}

impl<R: JoinRule> BfsJoin<R> {
    pub fn new(rule: R) -> Self {
        BfsJoin {
            rule,
            k: 1,
            params: Parameters::default(),
            is_head: false,
            offers: BTreeMap::new(),
            finalized: false,
            fresh: false,
            relayed: BTreeSet::new(),
            accepted: BTreeSet::new(),
        }
    }

    /// Heads this node joined in the current epoch.
    pub fn accepted(&self) -> &BTreeSet<ClusterId> {
        &self.accepted
    }

    fn offers(&self) -> Vec<Offer> {
        self.offers.values().copied().collect()
    }

    fn relay(&mut self, cx: &mut Cx<'_, '_>, offer: Offer) {
        let radius = self.radius();
        if offer.hops < radius && self.relayed.insert(offer.head) {
            send_request(cx, None, offer.head, offer.hops + 1, radius, offer.metric);
        }
    }

    fn on_request(&mut self, cx: &mut Cx<'_, '_>, msg: &WireMessage, rssi: f64) {
        let p = match JoinRequestPayload::decode(&msg.payload) {
            Ok(p) => p,
            Err(_) => {
                cx.core.counters.malformed_payload += 1;
                return;
            }
        };
        if p.epoch != cx.epoch() {
            cx.core.counters.stale_epoch += 1;
            return;
        }
        let head = msg.cluster_id;
        if self.is_head || self.finalized || !cx.joinable() || cx.state().is_head() {
            let mine = cx.state().cluster_id == head || self.accepted.contains(&head);
            if !mine {
                // Overlapping clusters reach every node within k hops, so
                // heads pass other heads' requests on.
                if self.is_head && self.rule.accepts_all() && !self.relayed.contains(&head) {
                    cx.learn_route(head, msg.sender, msg.hops);
                    let offer = Offer { head, hops: msg.hops, via: msg.sender, metric: p.metric, rssi, round: cx.round() };
                    self.relay(cx, offer);
                }
                send_deny(cx, msg.sender, head);
            }
            return;
        }
        let offer = Offer { head, hops: msg.hops, via: msg.sender, metric: p.metric, rssi, round: cx.round() };
        let first = self.offers.is_empty();
        let entry = self.offers.entry(head).or_insert(offer);
        if (offer.hops, offer.via) < (entry.hops, entry.via) {
            *entry = offer;
        }
        let best = *entry;
        cx.learn_route(head, best.via, best.hops);
        if first {
            let delay = if self.rule.accepts_all() {
                u64::from(self.radius().saturating_sub(offer.hops)) + 1
            } else {
                DECISION_DELAY
            };
            cx.set_timer(delay, TimerOwner::Jd, DEADLINE, 0);
            cx.touch();
        }
        self.fresh = true;
    }

    fn finalize(&mut self, cx: &mut Cx<'_, '_>) {
        if self.finalized || self.is_head || !cx.joinable() {
            return;
        }
        let offers = self.offers();
        let Some(choice) = choose(&self.rule, &offers) else {
            return;
        };
        self.finalized = true;
        let primary = self.offers[&choice.chosen_head];
        let chosen: Vec<Offer> = if self.rule.accepts_all() { offers.clone() } else { vec![primary] };
        self.accepted = chosen.iter().map(|o| o.head).collect();
        cx.join(primary.head, primary.via, primary.hops);
        if let Some(m) = cx.it.moca_mut() {
            m.my_heads = self.accepted.clone();
        }
        let id = cx.id();
        for &h in self.accepted.iter().filter(|&&h| h != primary.head) {
            cx.emit(EventKind::JoinedCluster, id, h);
        }
        let epoch = cx.epoch();
        for o in &chosen {
            let other_heads: Vec<ClusterId> =
                self.accepted.iter().copied().filter(|&h| h != o.head).take(MAX_LISTED_IDS).collect();
            send_accept(cx, o.via, o.head, o.hops, &AcceptPayload { joiner: id, epoch, other_heads });
        }
        for o in offers.iter().filter(|o| !self.accepted.contains(&o.head)) {
            send_deny(cx, o.via, o.head);
        }
        if self.rule.relay_on_decision() {
            self.relay(cx, primary);
        }
        cx.announce();
    }
}

impl<R: JoinRule> JoinDecision for BfsJoin<R> {
    fn name(&self) -> &'static str {
        self.rule.name()
    }

    fn set_parameters(&mut self, params: &Parameters) {
        self.k = params.k;
        self.params = *params;
    }

    fn reset(&mut self) {
        self.is_head = false;
        self.offers.clear();
        self.finalized = false;
        self.fresh = false;
        self.relayed.clear();
        self.accepted.clear();
    }

    fn radius(&self) -> u8 {
        self.rule.fixed_radius().unwrap_or(self.k)
    }

    fn on_election(&mut self, cx: &mut Cx<'_, '_>, election: Election) {
        let head = match election {
            Election::Head => true,
            Election::NotHead => false,
            Election::Elected { head, .. } => head == cx.id(),
        };
        if !head {
            return;
        }
        self.is_head = true;
        cx.become_head();
        cx.announce();
        let id = cx.id();
        let metric = self.rule.head_metric(&cx.core.info, &self.params);
        send_request(cx, None, id, 1, self.radius(), metric);
    }

    fn on_message(&mut self, cx: &mut Cx<'_, '_>, msg: &WireMessage, rssi: f64) {
        match msg.msg_type {
            MsgType::JoinRequest => self.on_request(cx, msg, rssi),
            MsgType::JoinAccept => {
                let p = match AcceptPayload::decode(&msg.payload) {
                    Ok(p) => p,
                    Err(_) => {
                        cx.core.counters.malformed_payload += 1;
                        return;
                    }
                };
                if p.epoch != cx.epoch() {
                    cx.core.counters.stale_epoch += 1;
                    return;
                }
                if let Some(p) = absorb_or_forward_accept(cx, msg.sender, msg.cluster_id, msg.hops, p) {
                    if let Some(m) = cx.it.moca_mut() {
                        m.adjacent_clusters.extend(p.other_heads);
                    }
                }
            }
            MsgType::JoinDeny => match decode_epoch("deny", &msg.payload) {
                Ok(e) if e == cx.epoch() => {
                    if cx.state().role.is_clustered() && cx.state().cluster_id == msg.cluster_id {
                        cx.it.table_mut().mark_other(msg.sender);
                    }
                }
                Ok(_) => cx.core.counters.stale_epoch += 1,
                Err(_) => cx.core.counters.malformed_payload += 1,
            },
            _ => {}
        }
    }

    fn on_timer(&mut self, cx: &mut Cx<'_, '_>, code: u8, _nonce: u32) {
        if code == DEADLINE {
            self.finalize(cx);
        }
    }

    fn on_round_end(&mut self, cx: &mut Cx<'_, '_>) {
        if !std::mem::take(&mut self.fresh) || self.finalized || self.is_head || self.rule.relay_on_decision() {
            return;
        }
        if self.rule.accepts_all() {
            for offer in self.offers() {
                self.relay(cx, offer);
            }
        } else if let Some(choice) = choose(&self.rule, &self.offers()) {
            let best = self.offers[&choice.chosen_head];
            self.relay(cx, best);
        }
    }
}
