use crate::cluster::{Cx, Election, JoinDecision, Parameters};
use crate::wire::WireMessage;

/// Max-min join: the election already names the head and the next hop, so
/// joining needs no messages beyond the neighbourhood hello.
#[derive(Debug, Default)]
pub struct MaxMindJoin {
    d: u8,
}

impl JoinDecision for MaxMindJoin {
    fn name(&self) -> &'static str {
        "maxmind_jd"
    }

    fn set_parameters(&mut self, params: &Parameters) {
        self.d = params.d;
    }

    fn reset(&mut self) {}

    fn radius(&self) -> u8 {
        self.d
    }

    fn on_election(&mut self, cx: &mut Cx<'_, '_>, election: Election) {
        match election {
            Election::Elected { head, parent, hops } if head != cx.id() => cx.join(head, parent, hops),
            _ => cx.become_head(),
        }
        cx.announce();
    }

    fn on_message(&mut self, _cx: &mut Cx<'_, '_>, _msg: &WireMessage, _rssi: f64) {}
}
