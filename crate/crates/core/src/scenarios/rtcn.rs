//! Real-time communication groups.
//!
//! Servers are nodes `1..=servers`, participants the ids above. In a slot
//! every member of a group sends its stream to all other members of the
//! group. Participants only talk to servers, never to each other.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::lvdn::{LvdnInstance, LvdnProducer, LvdnSlot, LVDN_SCHEMA};
use crate::error::{input, Result};
use crate::gen::{count, int, GenSpec, Prng};
use crate::io::{check_schema, to_pretty, BillingFile};
use crate::model::{BillingConfig, NodeId};
use crate::rational::Rational;

pub const RTCN_SCHEMA: &str = "nba-rtcn/1";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RtcnInstance {
    pub schema: String,
    pub servers: usize,
    /// Participant ids are `servers + 1 ..= servers + participants`.
    pub participants: usize,
    pub prices: Vec<Rational>,
    pub caps: Vec<Rational>,
    pub billing: BillingFile,
    pub slots: Vec<RtcnSlot>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RtcnSlot {
    pub t: usize,
    pub edges: Vec<[NodeId; 2]>,
    pub participants: Vec<RtcnParticipant>,
    pub groups: Vec<Vec<NodeId>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RtcnParticipant {
    pub id: NodeId,
    pub w: Rational,
}

impl RtcnInstance {
    pub fn from_json(text: &str) -> Result<Self> {
        let inst: RtcnInstance = serde_json::from_str(text)?;
        inst.validate()?;
        Ok(inst)
    }

    pub fn to_json(&self) -> String {
        to_pretty(self)
    }

    pub fn node_count(&self) -> usize {
        self.servers + self.participants
    }

    pub fn is_server(&self, i: NodeId) -> bool {
        (1..=self.servers).contains(&i)
    }

    pub fn billing_config(&self) -> Result<BillingConfig> {
        self.billing.config()
    }

    pub fn validate(&self) -> Result<()> {
        check_schema(&self.schema, RTCN_SCHEMA)?;
        let n = self.servers;
        if n == 0 {
            return input("rtcn: need at least one server");
        }
        if self.prices.len() != n || self.caps.len() != n {
            return input(format!("rtcn: prices and caps must have {n} entries"));
        }
        if self.prices.iter().chain(&self.caps).any(|v| !v.is_positive()) {
            return input("rtcn: prices and caps must be positive");
        }
        let billing = self.billing_config()?;
        if self.slots.len() != billing.p() {
            return input(format!("rtcn: expected {} slots, got {}", billing.p(), self.slots.len()));
        }
        let total = self.node_count();
        for (idx, slot) in self.slots.iter().enumerate() {
            let t = slot.t;
            if t != idx + 1 {
                return input(format!("rtcn: slots[{idx}] has t = {t}, expected {}", idx + 1));
            }
            for &[i, j] in &slot.edges {
                if i == 0 || j == 0 || i > total || j > total || i == j {
                    return input(format!("rtcn: slot {t}: invalid edge [{i},{j}]"));
                }
                if !self.is_server(i) && !self.is_server(j) {
                    return input(format!("rtcn: slot {t}: edge [{i},{j}] joins two participants"));
                }
            }
            let mut active = BTreeSet::new();
            for p in &slot.participants {
                if p.id <= n || p.id > total || !active.insert(p.id) {
                    return input(format!("rtcn: slot {t}: invalid or duplicate participant {}", p.id));
                }
                if !p.w.is_positive() {
                    return input(format!("rtcn: slot {t}: participant {} has non-positive weight", p.id));
                }
            }
            for (g, group) in slot.groups.iter().enumerate() {
                let members: BTreeSet<NodeId> = group.iter().copied().collect();
                if members.is_empty() {
                    return input(format!("rtcn: slot {t}: group {g} is empty"));
                }
                if members.len() < 2 {
                    return input(format!("rtcn: slot {t}: group {g} has a single member, nothing to send"));
                }
                if members.len() != group.len() {
                    return input(format!("rtcn: slot {t}: group {g} repeats a member"));
                }
                if let Some(m) = members.iter().find(|m| !active.contains(m)) {
                    return input(format!("rtcn: slot {t}: group {g} member {m} is not a participant"));
                }
            }
        }
        Ok(())
    }

    /// Producer demands per slot, in group order then member order:
    /// `(participant, group index, viewers)`.
    pub fn demands(&self, t: usize) -> Vec<(NodeId, usize, Vec<NodeId>)> {
        let slot = &self.slots[t - 1];
        let mut out = Vec::new();
        for (g, group) in slot.groups.iter().enumerate() {
            for &s in group {
                let viewers = group.iter().copied().filter(|&v| v != s).collect();
                out.push((s, g, viewers));
            }
        }
        out
    }
}

/// Live-video form of a group instance.
///
/// Every (participant, group) pair becomes a producer with a fresh id above
/// all participant ids, sending to the other group members, who keep their
/// participant ids as viewers. The producer inherits the participant's
/// upload edges. A participant in two groups thus uploads each stream
/// separately, possibly to different servers.
pub fn rtcn_expand(rtcn: &RtcnInstance) -> Result<LvdnInstance> {
    rtcn.validate()?;
    let base = rtcn.node_count();
    let mut max_producers = 0;
    let mut slots = Vec::new();
    for slot in &rtcn.slots {
        let weights: BTreeMap<NodeId, Rational> = slot.participants.iter().map(|p| (p.id, p.w)).collect();
        let demands = rtcn.demands(slot.t);
        max_producers = max_producers.max(demands.len());
        let mut edges: BTreeSet<[NodeId; 2]> = BTreeSet::new();
        let mut producers = Vec::new();
        for &[i, j] in &slot.edges {
            if rtcn.is_server(i) {
                edges.insert([i, j]);
            }
        }
        for (x, (s, _, viewers)) in demands.into_iter().enumerate() {
            let id = base + x + 1;
            for &[i, j] in slot.edges.iter().filter(|e| e[0] == s) {
                debug_assert!(rtcn.is_server(j) && i == s);
                edges.insert([id, j]);
            }
            producers.push(LvdnProducer {
                id,
                w: weights[&s],
                viewers,
            });
        }
        slots.push(LvdnSlot {
            t: slot.t,
            edges: edges.into_iter().collect(),
            producers,
        });
    }
    let lvdn = LvdnInstance {
        schema: LVDN_SCHEMA.into(),
        servers: rtcn.servers,
        endpoints: rtcn.participants + max_producers,
        prices: rtcn.prices.clone(),
        caps: rtcn.caps.clone(),
        billing: rtcn.billing.clone(),
        slots,
    };
    lvdn.validate()?;
    Ok(lvdn)
}

/// Active participants are split into disjoint groups whose sizes are drawn
/// from `dests` (at least 2); leftovers that cannot form a group stay idle.
/// Feasible mode links every group to one server in both directions and
/// raises capacities so that relaying every stream through it fits.
pub fn generate(spec: &GenSpec) -> Result<RtcnInstance> {
    let mut rng = Prng::new(spec.seed);
    let n = spec.n;
    let total_participants = spec.endpoints[1].max(2);
    let ids: Vec<NodeId> = (n + 1..=n + total_participants).collect();
    let prices: Vec<Rational> = (0..n).map(|_| int(&mut rng, spec.price)).collect();
    let mut caps: Vec<Rational> = (0..n).map(|_| int(&mut rng, spec.capacity)).collect();
    let mult = spec.multipliers();
    let mut slots = Vec::new();
    for t in 1..=spec.p {
        let m = count(&mut rng, spec.endpoints).clamp(2, total_participants);
        let mut active = rng.sample(&ids, m);
        rng.shuffle(&mut active);
        let participants: Vec<RtcnParticipant> = {
            let mut sorted = active.clone();
            sorted.sort_unstable();
            sorted
                .into_iter()
                .map(|id| RtcnParticipant {
                    id,
                    w: int(&mut rng, spec.weight) * mult[t - 1],
                })
                .collect()
        };
        let mut groups = Vec::new();
        let mut rest = &active[..];
        while rest.len() >= 2 {
            let size = count(&mut rng, [spec.dests[0].max(2), spec.dests[1].max(2)]).min(rest.len());
            let mut g = rest[..size].to_vec();
            g.sort_unstable();
            groups.push(g);
            rest = &rest[size..];
        }
        let mut edges: BTreeSet<[NodeId; 2]> = BTreeSet::new();
        for i in 1..=n {
            for j in (1..=n).filter(|&j| j != i) {
                if rng.chance(spec.density) {
                    edges.insert([i, j]);
                }
            }
            for &a in &active {
                if rng.chance(spec.density) {
                    edges.insert([a, i]);
                }
                if rng.chance(spec.density) {
                    edges.insert([i, a]);
                }
            }
        }
        if spec.feasible {
            let w: BTreeMap<NodeId, Rational> = participants.iter().map(|p| (p.id, p.w)).collect();
            let mut load = vec![Rational::ZERO; n + 1];
            for g in &groups {
                let hub = 1 + rng.below(n as u64) as usize;
                for &a in g {
                    edges.insert([a, hub]);
                    edges.insert([hub, a]);
                    load[hub] += w[&a] * Rational::from(g.len() - 1);
                }
            }
            for i in 1..=n {
                caps[i - 1] = caps[i - 1].max(load[i]);
            }
        }
        slots.push(RtcnSlot {
            t,
            edges: edges.into_iter().collect(),
            participants,
            groups,
        });
    }
    let inst = RtcnInstance {
        schema: RTCN_SCHEMA.into(),
        servers: n,
        participants: total_participants,
        prices,
        caps,
        billing: BillingFile { p: spec.p, q: spec.q },
        slots,
    };
    inst.validate()?;
    Ok(inst)
}
