use std::collections::BTreeMap;

use super::{absorb_or_forward_accept, send_accept, send_deny, send_request};
use crate::cluster::{Cx, Election, JoinDecision, Parameters, TimerOwner};
use crate::wire::{decode_epoch, encode_epoch, AcceptPayload, JoinRequestPayload, MsgType, WireMessage};
use crate::{ClusterId, NodeId};

const REPLY_TIMEOUT: u8 = 1;
/// Rounds an inviter waits for an accept or deny before moving on.
const REPLY_WAIT: u64 = 3;

/// Depth-first cluster formation. One node at a time holds the traversal:
/// it invites its next unexamined neighbour and waits; an accepting neighbour
/// takes over and hands control back with RESUME once its branch is done.
///
/// A member first reached along a long branch may later be offered a shorter
/// path by a same-cluster neighbour; it re-parents and explores again, so the
/// cluster ends up with every node within k hops of the head.
#[derive(Debug, Default)]
pub struct DfsJoin {
    k: u8,
    is_head: bool,
    head: ClusterId,
    hops: u8,
    inviter: Option<NodeId>,
    current: Option<NodeId>,
    nonce: u32,
    /// Same-cluster neighbours already offered a shorter path, with the hop
    /// count offered.
    shortcuts: BTreeMap<NodeId, u8>,
}

impl DfsJoin {
    fn advance(&mut self, cx: &mut Cx<'_, '_>) {
        self.current = None;
        if self.hops < self.k {
            if let Some(next) = cx.it.next_neighbor().or_else(|| self.next_shortcut(cx)) {
                send_request(cx, Some(next), self.head, self.hops + 1, self.k, 0);
                self.current = Some(next);
                self.nonce = self.nonce.wrapping_add(1);
                cx.set_timer(REPLY_WAIT, TimerOwner::Jd, REPLY_TIMEOUT, self.nonce);
                return;
            }
        }
        if self.is_head {
            cx.complete();
        } else if let Some(parent) = self.inviter {
            let msg = cx.message(MsgType::Resume, self.head, self.hops).with_payload(encode_epoch(cx.epoch()));
            cx.unicast(parent, &msg);
        }
    }

    /// Lowest-id same-cluster neighbour whose announced hop count exceeds what
    /// a path through this node would give it.
    fn next_shortcut(&mut self, cx: &Cx<'_, '_>) -> Option<NodeId> {
        let offer = self.hops + 1;
        let table = cx.it.table();
        let next = table.cluster_neighbors.iter().copied().find(|&n| {
            n != self.head
                && table.cluster_of(n) == Some(self.head)
                && table.announced_hops(n).is_some_and(|h| h > offer)
                && self.shortcuts.get(&n).is_none_or(|&o| o > offer)
        })?;
        self.shortcuts.insert(next, offer);
        Some(next)
    }

    fn accept(&mut self, cx: &mut Cx<'_, '_>, msg: &WireMessage) {
        let accept = AcceptPayload { joiner: cx.id(), epoch: cx.epoch(), other_heads: Vec::new() };
        send_accept(cx, msg.sender, msg.cluster_id, msg.hops, &accept);
        cx.announce();
        self.advance(cx);
    }

    fn on_invite(&mut self, cx: &mut Cx<'_, '_>, msg: &WireMessage) {
        match JoinRequestPayload::decode(&msg.payload) {
            Ok(p) if p.epoch == cx.epoch() => {}
            Ok(_) => {
                cx.core.counters.stale_epoch += 1;
                return;
            }
            Err(_) => {
                cx.core.counters.malformed_payload += 1;
                return;
            }
        }
        let state = *cx.state();
        if cx.joinable() && !self.is_head {
            self.head = msg.cluster_id;
            self.hops = msg.hops;
            self.inviter = Some(msg.sender);
            cx.core.complete_round = None;
            cx.join(msg.cluster_id, msg.sender, msg.hops);
            self.accept(cx, msg);
        } else if !self.is_head && state.cluster_id == msg.cluster_id && msg.hops < self.hops && self.current.is_none() {
            self.hops = msg.hops;
            self.inviter = Some(msg.sender);
            cx.reparent(msg.sender, msg.hops);
            self.accept(cx, msg);
        } else {
            send_deny(cx, msg.sender, msg.cluster_id);
        }
    }

    fn is_reply_from(&self, sender: NodeId) -> bool {
        self.current == Some(sender)
    }
}

impl JoinDecision for DfsJoin {
    fn name(&self) -> &'static str {
        "dfs"
    }

    fn set_parameters(&mut self, params: &Parameters) {
        self.k = params.k;
    }

    fn reset(&mut self) {
        *self = DfsJoin { k: self.k, nonce: self.nonce, ..DfsJoin::default() };
    }

    fn radius(&self) -> u8 {
        self.k
    }

    fn completes_by_timeout(&self) -> bool {
        false
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
        self.head = cx.id();
        self.hops = 0;
        cx.become_head();
        cx.announce();
        self.advance(cx);
    }

    fn on_message(&mut self, cx: &mut Cx<'_, '_>, msg: &WireMessage, _rssi: f64) {
        match msg.msg_type {
            MsgType::JoinRequest => self.on_invite(cx, msg),
            MsgType::JoinAccept => {
                let p = match AcceptPayload::decode(&msg.payload) {
                    Ok(p) if p.epoch == cx.epoch() => p,
                    Ok(_) => {
                        cx.core.counters.stale_epoch += 1;
                        return;
                    }
                    Err(_) => {
                        cx.core.counters.malformed_payload += 1;
                        return;
                    }
                };
                if self.is_reply_from(msg.sender) && p.joiner == msg.sender {
                    // the invitee now holds the traversal; wait for its RESUME
                    self.nonce = self.nonce.wrapping_add(1);
                }
                absorb_or_forward_accept(cx, msg.sender, msg.cluster_id, msg.hops, p);
            }
            MsgType::JoinDeny | MsgType::Resume => {
                match decode_epoch("reply", &msg.payload) {
                    Ok(e) if e == cx.epoch() => {}
                    Ok(_) => {
                        cx.core.counters.stale_epoch += 1;
                        return;
                    }
                    Err(_) => {
                        cx.core.counters.malformed_payload += 1;
                        return;
                    }
                }
                if !self.is_reply_from(msg.sender) {
                    return;
                }
                if msg.msg_type == MsgType::JoinDeny {
                    cx.it.table_mut().mark_other(msg.sender);
                }
                self.nonce = self.nonce.wrapping_add(1);
                self.advance(cx);
            }
            _ => {}
        }
    }

    fn on_timer(&mut self, cx: &mut Cx<'_, '_>, code: u8, nonce: u32) {
        if code != REPLY_TIMEOUT || nonce != self.nonce {
            return;
        }
        if let Some(silent) = self.current {
            cx.it.table_mut().mark_other(silent);
            self.advance(cx);
        }
    }
}
