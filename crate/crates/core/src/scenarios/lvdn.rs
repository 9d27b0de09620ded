//! Live video distribution.
//!
//! Servers are nodes `1..=servers`; producers and viewers are endpoint ids
//! above that. Each producer uploads to exactly one server, servers relay to
//! each other and deliver to the producer's viewers. Only server egress is
//! billed and capacity-limited.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{input, Result};
use crate::gen::{count, int, GenSpec, Prng};
use crate::io::{check_schema, to_pretty, BillingFile};
use crate::model::{BillingConfig, Edge, Instance, Network, NodeId, ScenarioRules, SlotDemand};
use crate::rational::Rational;

pub const LVDN_SCHEMA: &str = "nba-lvdn/1";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LvdnInstance {
    pub schema: String,
    pub servers: usize,
    /// Endpoint ids are `servers + 1 ..= servers + endpoints`.
    pub endpoints: usize,
    pub prices: Vec<Rational>,
    pub caps: Vec<Rational>,
    pub billing: BillingFile,
    pub slots: Vec<LvdnSlot>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LvdnSlot {
    pub t: usize,
    pub edges: Vec<[NodeId; 2]>,
    pub producers: Vec<LvdnProducer>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LvdnProducer {
    pub id: NodeId,
    pub w: Rational,
    pub viewers: Vec<NodeId>,
}

impl LvdnInstance {
    pub fn from_json(text: &str) -> Result<Self> {
        let inst: LvdnInstance = serde_json::from_str(text)?;
        inst.validate()?;
        Ok(inst)
    }

    pub fn to_json(&self) -> String {
        to_pretty(self)
    }

    pub fn node_count(&self) -> usize {
        self.servers + self.endpoints
    }

    pub fn is_server(&self, i: NodeId) -> bool {
        (1..=self.servers).contains(&i)
    }

    pub fn billing_config(&self) -> Result<BillingConfig> {
        self.billing.config()
    }

    pub fn validate(&self) -> Result<()> {
        check_schema(&self.schema, LVDN_SCHEMA)?;
        let n = self.servers;
        if n == 0 {
            return input("lvdn: need at least one server");
        }
        if self.prices.len() != n || self.caps.len() != n {
            return input(format!("lvdn: prices and caps must have {n} entries"));
        }
        if self.prices.iter().chain(&self.caps).any(|v| !v.is_positive()) {
            return input("lvdn: prices and caps must be positive");
        }
        let billing = self.billing_config()?;
        if self.slots.len() != billing.p() {
            return input(format!("lvdn: expected {} slots, got {}", billing.p(), self.slots.len()));
        }
        let total = self.node_count();
        for (idx, slot) in self.slots.iter().enumerate() {
            let t = slot.t;
            if t != idx + 1 {
                return input(format!("lvdn: slots[{idx}] has t = {t}, expected {}", idx + 1));
            }
            for &[i, j] in &slot.edges {
                if i == 0 || j == 0 || i > total || j > total || i == j {
                    return input(format!("lvdn: slot {t}: invalid edge [{i},{j}]"));
                }
                if !self.is_server(i) && !self.is_server(j) {
                    return input(format!("lvdn: slot {t}: edge [{i},{j}] joins two endpoints"));
                }
            }
            let producers: BTreeSet<NodeId> = slot.producers.iter().map(|p| p.id).collect();
            if producers.len() != slot.producers.len() {
                return input(format!("lvdn: slot {t}: duplicate producer id"));
            }
            for p in &slot.producers {
                if p.id <= n || p.id > total {
                    return input(format!("lvdn: slot {t}: producer {} is not an endpoint id", p.id));
                }
                if !p.w.is_positive() {
                    return input(format!("lvdn: slot {t}: producer {} has non-positive weight", p.id));
                }
                for &v in &p.viewers {
                    if self.is_server(v) {
                        return input(format!("lvdn: slot {t}: viewer {v} of producer {} is a server", p.id));
                    }
                    if v > total || producers.contains(&v) {
                        return input(format!("lvdn: slot {t}: viewer {v} of producer {} is invalid", p.id));
                    }
                }
            }
        }
        Ok(())
    }

    /// The generic instance: producer sources with their viewers as
    /// destinations, exactly one upload edge per producer, server-only billing,
    /// capacities and relay rule. Only producer-to-server, server-to-server
    /// and server-to-viewer edges are kept. Endpoint prices and capacities in
    /// the lowered network are placeholders that the scenario rules ignore.
    pub fn lower(&self) -> Result<Instance> {
        self.validate()?;
        let total = self.node_count();
        let mut all = BTreeSet::new();
        let mut demands = Vec::new();
        for slot in &self.slots {
            let producers: BTreeSet<NodeId> = slot.producers.iter().map(|p| p.id).collect();
            let viewers: BTreeSet<NodeId> = slot.producers.iter().flat_map(|p| p.viewers.iter().copied()).collect();
            let edges: BTreeSet<Edge> = slot
                .edges
                .iter()
                .map(|&[i, j]| (i, j))
                .filter(|&(i, j)| match (self.is_server(i), self.is_server(j)) {
                    (true, true) => true,
                    (false, true) => producers.contains(&i),
                    (true, false) => viewers.contains(&j),
                    (false, false) => false,
                })
                .collect();
            all.extend(edges.iter().copied());
            let mut sd = SlotDemand::new(slot.t, edges);
            for p in &slot.producers {
                sd = sd.with_source(p.id, p.w, p.viewers.iter().copied());
            }
            demands.push(sd);
        }
        let mut prices = self.prices.clone();
        let mut caps = self.caps.clone();
        prices.resize(total, Rational::ONE);
        caps.resize(total, Rational::ONE);
        let network = Network::new(prices, caps.clone(), caps, all)?;
        let rules = ScenarioRules {
            servers: self.servers,
            single_ingest: true,
        };
        Instance::with_rules(network, self.billing_config()?, demands, Some(rules))
    }
}

pub fn lvdn_lower(lvdn: &LvdnInstance) -> Result<Instance> {
    lvdn.lower()
}

/// Producers use ids `servers + 1 ..`, viewers the ids after the largest
/// possible producer block. Edges of each allowed kind appear with
/// probability `density`. Feasible mode gives each producer a home server
/// linked to it and to all of its viewers, and raises capacities so that the
/// resulting star plan fits.
pub fn generate(spec: &GenSpec) -> Result<LvdnInstance> {
    let mut rng = Prng::new(spec.seed);
    let n = spec.n;
    let max_producers = spec.endpoints[1];
    let pool = spec.dests[1].max(1) + spec.endpoints[1];
    let viewer_ids: Vec<NodeId> = (n + max_producers + 1..=n + max_producers + pool).collect();
    let prices: Vec<Rational> = (0..n).map(|_| int(&mut rng, spec.price)).collect();
    let mut caps: Vec<Rational> = (0..n).map(|_| int(&mut rng, spec.capacity)).collect();
    let mult = spec.multipliers();
    let servers: Vec<NodeId> = (1..=n).collect();
    let mut slots = Vec::new();
    for t in 1..=spec.p {
        let m = count(&mut rng, spec.endpoints).min(max_producers);
        let mut edges: BTreeSet<Edge> = BTreeSet::new();
        for i in 1..=n {
            for j in (1..=n).filter(|&j| j != i) {
                if rng.chance(spec.density) {
                    edges.insert((i, j));
                }
            }
        }
        let mut producers = Vec::new();
        let mut load = vec![Rational::ZERO; n + 1];
        for x in 0..m {
            let id = n + x + 1;
            let w = int(&mut rng, spec.weight) * mult[t - 1];
            let d = count(&mut rng, spec.dests).min(viewer_ids.len());
            let viewers = rng.sample(&viewer_ids, d);
            for &s in &servers {
                if rng.chance(spec.density) {
                    edges.insert((id, s));
                }
                for &v in &viewers {
                    if rng.chance(spec.density) {
                        edges.insert((s, v));
                    }
                }
            }
            if spec.feasible {
                let home = servers[rng.below(n as u64) as usize];
                edges.insert((id, home));
                for &v in &viewers {
                    edges.insert((home, v));
                }
                load[home] += w * Rational::from(viewers.len());
            }
            producers.push(LvdnProducer { id, w, viewers });
        }
        if spec.feasible {
            for i in 1..=n {
                caps[i - 1] = caps[i - 1].max(load[i]);
            }
        }
        slots.push(LvdnSlot {
            t,
            edges: edges.into_iter().map(|(i, j)| [i, j]).collect(),
            producers,
        });
    }
    let inst = LvdnInstance {
        schema: LVDN_SCHEMA.into(),
        servers: n,
        endpoints: max_producers + pool,
        prices,
        caps,
        billing: BillingFile { p: spec.p, q: spec.q },
        slots,
    };
    inst.validate()?;
    Ok(inst)
}
