//! Join-decision modules: the BFS and DFS traversals, the per-algorithm join
//! rules layered on BFS, and the message-free max-min join.

mod bfs;
mod dfs;
mod maxmind;
mod rules;

pub use bfs::BfsJoin;
pub use dfs::DfsJoin;
pub use maxmind::MaxMindJoin;
pub use rules::{choose, FirstCome, JoinChoice, JoinRule, LcaRule, LeachRule, MocaRule, Offer, TccaRule, Verdict};

use crate::cluster::Cx;
use crate::wire::{encode_epoch, AcceptPayload, JoinRequestPayload, MsgType};
use crate::{ClusterId, NodeId};

pub(crate) fn send_request(cx: &mut Cx<'_, '_>, to: Option<NodeId>, head: ClusterId, hops: u8, radius: u8, metric: u32) {
    let payload = JoinRequestPayload { origin_head: head, ttl: radius.saturating_sub(hops), metric, epoch: cx.epoch() };
    let msg = cx.message(MsgType::JoinRequest, head, hops).with_payload(payload.encode());
    match to {
        Some(n) => cx.unicast(n, &msg),
        None => cx.broadcast(&msg),
    }
}

pub(crate) fn send_accept(cx: &mut Cx<'_, '_>, to: NodeId, head: ClusterId, hops: u8, payload: &AcceptPayload) {
    let msg = cx.message(MsgType::JoinAccept, head, hops).with_payload(payload.encode());
    cx.unicast(to, &msg);
}

pub(crate) fn send_deny(cx: &mut Cx<'_, '_>, to: NodeId, head: ClusterId) {
    let msg = cx.message(MsgType::JoinDeny, head, 0).with_payload(encode_epoch(cx.epoch()));
    cx.unicast(to, &msg);
}

/// Handles an accept at a head of the named cluster or forwards it one hop
/// toward that head. Returns the decoded payload when this node is the head.
pub(crate) fn absorb_or_forward_accept(cx: &mut Cx<'_, '_>, from: NodeId, head: ClusterId, hops: u8, p: AcceptPayload) -> Option<AcceptPayload> {
    let own = *cx.state();
    if from == p.joiner && own.role.is_clustered() && own.cluster_id == head {
        cx.it.table_mut().add_child(from);
    }
    if own.is_head() && own.cluster_id == head {
        if cx.it.table_mut().add_member(p.joiner) {
            cx.emit(crate::cluster::EventKind::NodeJoined, p.joiner, head);
            cx.touch();
        }
        return Some(p);
    }
    if let Some(next) = cx.next_hop(head) {
        send_accept(cx, next, head, hops, &p);
    }
    None
}
