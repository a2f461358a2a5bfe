use std::cmp::Ordering;
use std::fmt;

use crate::cluster::{NodeInfo, Parameters};
use crate::{ClusterId, NodeId};

/// The best request heard from one head.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Offer {
    pub head: ClusterId,
    pub hops: u8,
    /// Neighbour the request arrived from.
    pub via: NodeId,
    /// Head-supplied metric carried in the request payload.
    pub metric: u32,
    /// Received-signal proxy of the arriving frame.
    pub rssi: f64,
    /// Round the request arrived in.
    pub round: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Accept,
    Deny,
    Defer,
}

/// A join decision over the offers heard so far.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JoinChoice {
    pub verdict: Verdict,
    pub chosen_head: ClusterId,
    pub score: f64,
}

/// How a BFS joiner ranks the heads it heard from.
pub trait JoinRule: fmt::Debug {
    fn name(&self) -> &'static str;
    /// Higher is better; ties go to the lower head id.
    fn score(&self, offer: &Offer) -> f64;
    /// Join every head heard instead of only the best one.
    fn accepts_all(&self) -> bool {
        false
    }
    /// Relay a head's request only once the choice is final, rather than as
    /// soon as that head becomes the current favourite.
    fn relay_on_decision(&self) -> bool {
        false
    }
    fn fixed_radius(&self) -> Option<u8> {
        None
    }
    /// Metric a head puts into its own requests.
    fn head_metric(&self, _info: &NodeInfo, _params: &Parameters) -> u32 {
        0
    }
}

fn rank(rule: &dyn JoinRule, a: &Offer, b: &Offer) -> Ordering {
    rule.score(b).total_cmp(&rule.score(a)).then(a.head.cmp(&b.head))
}

/// Picks the preferred offer. `None` while no offer has been heard.
pub fn choose(rule: &dyn JoinRule, offers: &[Offer]) -> Option<JoinChoice> {
    offers.iter().min_by(|a, b| rank(rule, a, b)).map(|o| JoinChoice {
        verdict: Verdict::Accept,
        chosen_head: o.head,
        score: rule.score(o),
    })
}

/// Base BFS rule: the first request heard wins.
#[derive(Debug, Clone, Copy, Default)]
pub struct FirstCome;

impl JoinRule for FirstCome {
    fn name(&self) -> &'static str {
        "bfs"
    }

    fn score(&self, offer: &Offer) -> f64 {
        -(offer.round as f64)
    }
}

/// Join the closest head in hops.
#[derive(Debug, Clone, Copy, Default)]
pub struct LcaRule;

impl JoinRule for LcaRule {
    fn name(&self) -> &'static str {
        "lca_jd"
    }

    fn score(&self, offer: &Offer) -> f64 {
        -f64::from(offer.hops)
    }
}

/// Join the one-hop head with the strongest signal.
#[derive(Debug, Clone, Copy, Default)]
pub struct LeachRule;

impl JoinRule for LeachRule {
    fn name(&self) -> &'static str {
        "leach_jd"
    }

    fn score(&self, offer: &Offer) -> f64 {
        offer.rssi
    }

    fn fixed_radius(&self) -> Option<u8> {
        Some(1)
    }
}

/// Fixed-point scale of the energy metric in TCCA requests.
pub const ENERGY_SCALE: f64 = 1e6;

/// Join the head maximising residual energy per hop.
#[derive(Debug, Clone, Copy, Default)]
pub struct TccaRule;

impl JoinRule for TccaRule {
    fn name(&self) -> &'static str {
        "tcca_jd"
    }

    fn score(&self, offer: &Offer) -> f64 {
        f64::from(offer.metric) / ENERGY_SCALE / f64::from(offer.hops.max(1))
    }

    fn relay_on_decision(&self) -> bool {
        true
    }

    fn head_metric(&self, info: &NodeInfo, _params: &Parameters) -> u32 {
        (info.energy.max(0.0) * ENERGY_SCALE).round().min(f64::from(u32::MAX)) as u32
    }
}

/// Join every head within range; the lowest head id becomes primary.
#[derive(Debug, Clone, Copy, Default)]
pub struct MocaRule;

impl JoinRule for MocaRule {
    fn name(&self) -> &'static str {
        "moca_jd"
    }

    fn score(&self, _offer: &Offer) -> f64 {
        0.0
    }

    fn accepts_all(&self) -> bool {
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn offer(head: ClusterId, hops: u8) -> Offer {
        Offer { head, hops, via: head, metric: 0, rssi: 0.0, round: u64::from(hops) }
    }

    #[test]
    fn lca_prefers_fewer_hops_then_lower_id() {
        let c = choose(&LcaRule, &[offer(9, 2), offer(4, 1)]).unwrap();
        assert_eq!(c.chosen_head, 4);
        let c = choose(&LcaRule, &[offer(9, 1), offer(4, 1)]).unwrap();
        assert_eq!(c.chosen_head, 4);
        assert_eq!(choose(&LcaRule, &[offer(3, 1)]).unwrap().verdict, Verdict::Accept);
        assert!(choose(&LcaRule, &[]).is_none());
    }

    #[test]
    fn leach_prefers_strongest_signal() {
        let near = Offer { rssi: -5.0, ..offer(8, 1) };
        let far = Offer { rssi: -12.0, ..offer(2, 1) };
        assert_eq!(choose(&LeachRule, &[far, near]).unwrap().chosen_head, 8);
    }

    #[test]
    fn tcca_scores_energy_per_hop() {
        let a = Offer { metric: 900_000, ..offer(1, 3) };
        let b = Offer { metric: 500_000, ..offer(2, 1) };
        let c = choose(&TccaRule, &[a, b]).unwrap();
        assert_eq!(c.chosen_head, 2);
        assert!((c.score - 0.5).abs() < 1e-9);
        assert!((TccaRule.score(&a) - 0.3).abs() < 1e-9);
        let near = Offer { metric: 500_000, ..offer(7, 1) };
        let far = Offer { metric: 500_000, ..offer(3, 2) };
        assert_eq!(choose(&TccaRule, &[far, near]).unwrap().chosen_head, 7);
        let x = Offer { metric: 400_000, ..offer(6, 2) };
        let y = Offer { metric: 200_000, ..offer(5, 1) };
        assert_eq!(choose(&TccaRule, &[x, y]).unwrap().chosen_head, 5);
    }

    #[test]
    fn first_come_prefers_earliest_round() {
        let early = Offer { round: 3, ..offer(9, 2) };
        let late = Offer { round: 4, ..offer(1, 1) };
        assert_eq!(choose(&FirstCome, &[late, early]).unwrap().chosen_head, 9);
    }

    #[test]
    fn moca_primary_is_lowest_head() {
        assert_eq!(choose(&MocaRule, &[offer(9, 1), offer(4, 2), offer(6, 1)]).unwrap().chosen_head, 4);
    }
}
