//! Core data model: network, billing cycle, per-slot demands and allocation
//! plans.
//!
//! Node ids and slot indices are 1-based throughout, matching the JSON
//! formats. All containers are ordered (`BTreeMap`/`BTreeSet`) so iteration
//! and serialization are deterministic.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{input, Error, Result};
use crate::rational::Rational;

pub type NodeId = usize;
pub type Edge = (NodeId, NodeId);

/// Sampling configuration of one billing cycle.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BillingConfig {
    p: usize,
    q: Rational,
    k: usize,
}

impl BillingConfig {
    pub fn new(p: usize, q: Rational) -> Result<Self> {
        if p == 0 {
            return input("billing.p must be positive");
        }
        if !q.is_positive() || q > Rational::ONE {
            return input(format!("billing.q must lie in (0, 1], got {q}"));
        }
        let k = ((Rational::ONE - q) * Rational::from(p)).floor() as usize;
        debug_assert!(k < p);
        Ok(BillingConfig { p, q, k })
    }

    /// 95th percentile billing.
    pub fn percentile95(p: usize) -> Result<Self> {
        Self::new(p, Rational::new(95, 100))
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn q(&self) -> Rational {
        self.q
    }

    /// Number of largest samples excluded from the bill.
    pub fn discard_count(&self) -> usize {
        self.k
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Network {
    n: usize,
    prices: Vec<Rational>,
    egress_caps: Vec<Rational>,
    ingress_caps: Vec<Rational>,
    edges: BTreeSet<Edge>,
}

impl Network {
    pub fn new(
        prices: Vec<Rational>,
        egress_caps: Vec<Rational>,
        ingress_caps: Vec<Rational>,
        edges: impl IntoIterator<Item = Edge>,
    ) -> Result<Self> {
        let n = prices.len();
        if n == 0 {
            return input("network must have at least one node");
        }
        if egress_caps.len() != n || ingress_caps.len() != n {
            return input(format!(
                "network has {n} prices but {} egress caps and {} ingress caps",
                egress_caps.len(),
                ingress_caps.len()
            ));
        }
        for (name, values) in [
            ("prices", &prices),
            ("egress_caps", &egress_caps),
            ("ingress_caps", &ingress_caps),
        ] {
            if let Some(pos) = values.iter().position(|v| !v.is_positive()) {
                return input(format!("network.{name}[{pos}] must be positive"));
            }
        }
        let edges: BTreeSet<Edge> = edges.into_iter().collect();
        for &(i, j) in &edges {
            if i == j {
                return input(format!("self-loop edge ({i},{j})"));
            }
            if !(1..=n).contains(&i) || !(1..=n).contains(&j) {
                return input(format!("edge ({i},{j}) has an endpoint outside 1..={n}"));
            }
        }
        Ok(Network {
            n,
            prices,
            egress_caps,
            ingress_caps,
            edges,
        })
    }

    /// Complete digraph with uniform parameters.
    pub fn complete(n: usize, price: Rational, cap: Rational) -> Result<Self> {
        let edges = (1..=n).flat_map(|i| (1..=n).filter(move |&j| j != i).map(move |j| (i, j)));
        Network::new(vec![price; n], vec![cap; n], vec![cap; n], edges)
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> {
        1..=self.n
    }

    pub fn price(&self, i: NodeId) -> Rational {
        self.prices[i - 1]
    }

    pub fn egress_cap(&self, i: NodeId) -> Rational {
        self.egress_caps[i - 1]
    }

    pub fn ingress_cap(&self, i: NodeId) -> Rational {
        self.ingress_caps[i - 1]
    }

    pub fn prices(&self) -> &[Rational] {
        &self.prices
    }

    pub fn egress_caps(&self) -> &[Rational] {
        &self.egress_caps
    }

    pub fn ingress_caps(&self) -> &[Rational] {
        &self.ingress_caps
    }

    pub fn edges(&self) -> &BTreeSet<Edge> {
        &self.edges
    }

    pub fn contains(&self, i: NodeId) -> bool {
        (1..=self.n).contains(&i)
    }

    /// Same topology and capacities with every price multiplied by `factor`.
    pub fn scale_prices(&self, factor: Rational) -> Result<Network> {
        Network::new(
            self.prices.iter().map(|&u| u * factor).collect(),
            self.egress_caps.clone(),
            self.ingress_caps.clone(),
            self.edges.iter().copied(),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceDemand {
    pub w: Rational,
    pub dests: BTreeSet<NodeId>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SlotDemand {
    pub t: usize,
    pub edges: BTreeSet<Edge>,
    pub sources: BTreeMap<NodeId, SourceDemand>,
}

impl SlotDemand {
    pub fn new(t: usize, edges: impl IntoIterator<Item = Edge>) -> Self {
        SlotDemand {
            t,
            edges: edges.into_iter().collect(),
            sources: BTreeMap::new(),
        }
    }

    pub fn with_source(
        mut self,
        s: NodeId,
        w: Rational,
        dests: impl IntoIterator<Item = NodeId>,
    ) -> Self {
        self.sources.insert(
            s,
            SourceDemand {
                w,
                dests: dests.into_iter().collect(),
            },
        );
        self
    }
}

/// Restrictions used by lowered scenario models.
///
/// Nodes `1..=servers` are servers: only their egress is billed and
/// capacity-limited, and only they are bound by the relay inequality. Nodes
/// above `servers` are endpoints (producers, viewers) that are never billed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScenarioRules {
    pub servers: usize,
    /// A source with at least one destination uses exactly one out-edge.
    pub single_ingest: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    network: Network,
    billing: BillingConfig,
    demands: Vec<SlotDemand>,
    rules: Option<ScenarioRules>,
}

impl Instance {
    pub fn new(network: Network, billing: BillingConfig, demands: Vec<SlotDemand>) -> Result<Self> {
        Self::with_rules(network, billing, demands, None)
    }

    pub fn with_rules(
        network: Network,
        billing: BillingConfig,
        demands: Vec<SlotDemand>,
        rules: Option<ScenarioRules>,
    ) -> Result<Self> {
        if demands.len() != billing.p() {
            return input(format!(
                "expected {} slot demands, got {}",
                billing.p(),
                demands.len()
            ));
        }
        for (idx, slot) in demands.iter().enumerate() {
            let t = slot.t;
            if t != idx + 1 {
                return input(format!("demands[{idx}] has t = {t}, expected {}", idx + 1));
            }
            for e in &slot.edges {
                if !network.edges().contains(e) {
                    return input(format!("slot {t}: edge ({},{}) is not in E", e.0, e.1));
                }
            }
            for (&s, d) in &slot.sources {
                if !network.contains(s) {
                    return input(format!("slot {t}: source {s} is not a node"));
                }
                if !d.w.is_positive() {
                    return input(format!("slot {t}: source {s} has non-positive weight {}", d.w));
                }
                for &j in &d.dests {
                    if j == s {
                        return input(format!("slot {t}: source {s} lists itself as destination"));
                    }
                    if !network.contains(j) {
                        return input(format!("slot {t}: destination {j} of source {s} is not a node"));
                    }
                }
            }
        }
        if let Some(r) = rules {
            if r.servers == 0 || r.servers > network.node_count() {
                return input(format!("rules.servers = {} out of range", r.servers));
            }
        }
        Ok(Instance {
            network,
            billing,
            demands,
            rules,
        })
    }

    pub fn network(&self) -> &Network {
        &self.network
    }

    pub fn billing(&self) -> &BillingConfig {
        &self.billing
    }

    pub fn demands(&self) -> &[SlotDemand] {
        &self.demands
    }

    pub fn rules(&self) -> Option<&ScenarioRules> {
        self.rules.as_ref()
    }

    pub fn n(&self) -> usize {
        self.network.node_count()
    }

    pub fn p(&self) -> usize {
        self.billing.p()
    }

    /// Slot `t` (1-based).
    pub fn slot(&self, t: usize) -> &SlotDemand {
        &self.demands[t - 1]
    }

    /// All `(t, s)` pairs in slot-then-source order.
    pub fn pairs(&self) -> Vec<(usize, NodeId)> {
        self.demands
            .iter()
            .flat_map(|d| d.sources.keys().map(move |&s| (d.t, s)))
            .collect()
    }

    pub fn is_server(&self, i: NodeId) -> bool {
        match self.rules {
            Some(r) => i <= r.servers,
            None => true,
        }
    }

    /// Whether node `i` contributes to the objective.
    pub fn is_billed(&self, i: NodeId) -> bool {
        self.is_server(i)
    }

    /// Whether ingress bandwidth is billed and capacity-limited.
    pub fn tracks_ingress(&self) -> bool {
        self.rules.is_none()
    }

    /// Whether the relay inequality (ingress copies ≤ egress copies) binds at `j`.
    pub fn relay_constrained(&self, j: NodeId) -> bool {
        self.is_server(j)
    }

    pub fn single_ingest(&self) -> bool {
        self.rules.map(|r| r.single_ingest).unwrap_or(false)
    }

    /// Same instance with prices scaled.
    pub fn scale_prices(&self, factor: Rational) -> Result<Instance> {
        Instance::with_rules(
            self.network.scale_prices(factor)?,
            self.billing.clone(),
            self.demands.clone(),
            self.rules,
        )
    }
}

/// Chosen edges per slot and per source: edge `(i,j)` in the set for `(t,s)`
/// means data from `s` crosses `(i,j)` in slot `t`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AllocationPlan {
    slots: BTreeMap<usize, BTreeMap<NodeId, BTreeSet<Edge>>>,
}

impl AllocationPlan {
    pub fn new() -> Self {
        Self::default()
    }

    /// Plan with an empty edge set for every `(t, s)` of the instance.
    pub fn empty_for(instance: &Instance) -> Self {
        let mut plan = Self::new();
        for (t, s) in instance.pairs() {
            plan.ensure(t, s);
        }
        plan
    }

    pub fn ensure(&mut self, t: usize, s: NodeId) -> &mut BTreeSet<Edge> {
        self.slots.entry(t).or_default().entry(s).or_default()
    }

    pub fn insert(&mut self, t: usize, s: NodeId, edge: Edge) -> bool {
        self.ensure(t, s).insert(edge)
    }

    pub fn remove(&mut self, t: usize, s: NodeId, edge: Edge) -> bool {
        self.slots
            .get_mut(&t)
            .and_then(|m| m.get_mut(&s))
            .map(|set| set.remove(&edge))
            .unwrap_or(false)
    }

    pub fn set_edges(&mut self, t: usize, s: NodeId, edges: BTreeSet<Edge>) {
        *self.ensure(t, s) = edges;
    }

    pub fn edges(&self, t: usize, s: NodeId) -> Option<&BTreeSet<Edge>> {
        self.slots.get(&t).and_then(|m| m.get(&s))
    }

    pub fn edges_or_empty(&self, t: usize, s: NodeId) -> BTreeSet<Edge> {
        self.edges(t, s).cloned().unwrap_or_default()
    }

    /// Iterates `(t, s, edges)` in order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, NodeId, &BTreeSet<Edge>)> {
        self.slots
            .iter()
            .flat_map(|(&t, m)| m.iter().map(move |(&s, e)| (t, s, e)))
    }

    pub fn slots(&self) -> &BTreeMap<usize, BTreeMap<NodeId, BTreeSet<Edge>>> {
        &self.slots
    }

    pub fn edge_count(&self) -> usize {
        self.iter().map(|(_, _, e)| e.len()).sum()
    }

    /// Checks that every slot, source and edge exists in the instance.
    pub fn check_shape(&self, instance: &Instance) -> Result<()> {
        for (t, s, edges) in self.iter() {
            if t == 0 || t > instance.p() {
                return Err(Error::PlanShape(format!("slot {t} is outside 1..={}", instance.p())));
            }
            let slot = instance.slot(t);
            if !slot.sources.contains_key(&s) {
                return Err(Error::PlanShape(format!("slot {t}: {s} is not a source")));
            }
            if let Some(e) = edges.iter().find(|e| !slot.edges.contains(e)) {
                return Err(Error::PlanShape(format!(
                    "slot {t}, source {s}: edge ({},{}) is not available",
                    e.0, e.1
                )));
            }
        }
        Ok(())
    }
}
