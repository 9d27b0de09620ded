//! Content delivery over a tree of caching servers.
//!
//! Server 1..=n form a rooted tree given by `parents` (0 marks the root).
//! Leaves are edge servers, every other server (the root included) is a
//! central server. In slot `t` customer number `c` (0-based) has id
//! `n + c + 1`, demand `w` and a list of eligible edge servers. An edge
//! server's load is the demand it serves; a central server's load is the
//! traffic its children fetch from it because of cache misses:
//!
//! ```text
//! b_k = sum over children c of r_c * (L_c if c is a leaf, else b_c)
//! ```
//!
//! Each server pays its price times the percentile of its load series and
//! must stay within its capacity.

use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::Strategy;
use crate::cost::kth_largest;
use crate::error::{input, Error, Result};
use crate::gen::{count, int, GenSpec, Prng};
use crate::io::{check_schema, to_pretty, BillingFile};
use crate::model::{AllocationPlan, BillingConfig, Edge, Instance, Network, NodeId, ScenarioRules, SlotDemand};
use crate::rational::Rational;
use crate::solvers::{elapsed_ms, SolveReport, SolveStats, SolveStatus};

pub const CDN_SCHEMA: &str = "nba-cdn/1";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CdnInstance {
    pub schema: String,
    /// `parents[i - 1]` is the parent of server `i`; 0 for the root.
    pub parents: Vec<NodeId>,
    pub prices: Vec<Rational>,
    pub caps: Vec<Rational>,
    pub billing: BillingFile,
    pub slots: Vec<CdnSlot>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CdnSlot {
    pub t: usize,
    /// Miss probability of every server, in `[0, 1]`.
    pub miss: Vec<Rational>,
    pub customers: Vec<CdnCustomer>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CdnCustomer {
    pub w: Rational,
    pub eligible: Vec<NodeId>,
}

impl CdnInstance {
    pub fn from_json(text: &str) -> Result<Self> {
        let inst: CdnInstance = serde_json::from_str(text)?;
        inst.validate()?;
        Ok(inst)
    }

    pub fn to_json(&self) -> String {
        to_pretty(self)
    }

    pub fn n(&self) -> usize {
        self.parents.len()
    }

    pub fn billing_config(&self) -> Result<BillingConfig> {
        self.billing.config()
    }

    pub fn root(&self) -> NodeId {
        self.parents.iter().position(|&p| p == 0).map_or(1, |i| i + 1)
    }

    pub fn children(&self) -> BTreeMap<NodeId, Vec<NodeId>> {
        let mut out: BTreeMap<NodeId, Vec<NodeId>> = BTreeMap::new();
        for (idx, &p) in self.parents.iter().enumerate() {
            if p != 0 {
                out.entry(p).or_default().push(idx + 1);
            }
        }
        out
    }

    pub fn is_leaf(&self, i: NodeId) -> bool {
        !self.parents.contains(&i)
    }

    pub fn customer_id(&self, index: usize) -> NodeId {
        self.n() + index + 1
    }

    /// Servers ordered so every child precedes its parent.
    fn bottom_up(&self) -> Vec<NodeId> {
        let kids = self.children();
        let mut order = vec![self.root()];
        let mut idx = 0;
        while idx < order.len() {
            order.extend(kids.get(&order[idx]).into_iter().flatten().copied());
            idx += 1;
        }
        order.reverse();
        order
    }

    pub fn validate(&self) -> Result<()> {
        check_schema(&self.schema, CDN_SCHEMA)?;
        let n = self.n();
        if n < 2 {
            return input("cdn: need a root and at least one edge server");
        }
        if self.prices.len() != n || self.caps.len() != n {
            return input(format!("cdn: prices and caps must have {n} entries"));
        }
        if self.prices.iter().chain(&self.caps).any(|v| !v.is_positive()) {
            return input("cdn: prices and caps must be positive");
        }
        if self.parents.iter().filter(|&&p| p == 0).count() != 1 {
            return input("cdn: exactly one server must have parent 0");
        }
        if let Some(i) = self.parents.iter().enumerate().position(|(i, &p)| p > n || p == i + 1) {
            return input(format!("cdn: server {} has invalid parent {}", i + 1, self.parents[i]));
        }
        if self.bottom_up().len() != n {
            return input("cdn: parents do not form a tree");
        }
        let billing = self.billing_config()?;
        if self.slots.len() != billing.p() {
            return input(format!("cdn: expected {} slots, got {}", billing.p(), self.slots.len()));
        }
        for (idx, slot) in self.slots.iter().enumerate() {
            if slot.t != idx + 1 {
                return input(format!("cdn: slots[{idx}] has t = {}, expected {}", slot.t, idx + 1));
            }
            if slot.miss.len() != n {
                return input(format!("cdn: slot {}: miss must have {n} entries", slot.t));
            }
            if slot.miss.iter().any(|r| r.is_negative() || *r > Rational::ONE) {
                return input(format!("cdn: slot {}: miss probabilities must lie in [0, 1]", slot.t));
            }
            for (c, cust) in slot.customers.iter().enumerate() {
                if !cust.w.is_positive() {
                    return input(format!("cdn: slot {}: customer {c} has non-positive demand", slot.t));
                }
                if let Some(&i) = cust.eligible.iter().find(|&&i| i == 0 || i > n || !self.is_leaf(i)) {
                    return input(format!("cdn: slot {}: customer {c} lists {i}, not an edge server", slot.t));
                }
            }
        }
        Ok(())
    }

    /// Edge-server loads of slot `t` (index = server id, entry 0 unused).
    pub fn leaf_loads(&self, t: usize, edges: &BTreeSet<Edge>) -> Result<Vec<Rational>> {
        let slot = &self.slots[t - 1];
        let mut loads = vec![Rational::ZERO; self.n() + 1];
        let mut assigned = vec![0usize; slot.customers.len()];
        for &(i, j) in edges {
            let c = j.checked_sub(self.n() + 1).filter(|&c| c < slot.customers.len());
            let Some(c) = c else {
                return Err(Error::PlanShape(format!("slot {t}: ({i},{j}) does not end at a customer")));
            };
            if !slot.customers[c].eligible.contains(&i) {
                return Err(Error::PlanShape(format!("slot {t}: ({i},{j}) is not an eligible edge")));
            }
            assigned[c] += 1;
            loads[i] += slot.customers[c].w;
        }
        if let Some(c) = assigned.iter().position(|&a| a != 1) {
            return Err(Error::PlanShape(format!(
                "slot {t}: customer {} has {} assignments, expected 1",
                self.customer_id(c),
                assigned[c]
            )));
        }
        Ok(loads)
    }

    /// Every server's load in slot `t`: leaves from `loads`, central servers
    /// by the miss-probability recursion.
    fn server_loads(&self, t: usize, mut loads: Vec<Rational>) -> Vec<Rational> {
        let miss = &self.slots[t - 1].miss;
        for i in self.bottom_up() {
            let p = self.parents[i - 1];
            if p != 0 {
                let v = loads[i];
                loads[p] += miss[i - 1] * v;
            }
        }
        loads
    }

    /// Per-slot customer assignments as a plan keyed by the serving edge server.
    pub fn assignment_plan(assignment: &[BTreeSet<Edge>]) -> AllocationPlan {
        let mut plan = AllocationPlan::new();
        for (idx, edges) in assignment.iter().enumerate() {
            for &e in edges {
                plan.insert(idx + 1, e.0, e);
            }
        }
        plan
    }

    fn assignment_from_plan(&self, plan: &AllocationPlan) -> Vec<BTreeSet<Edge>> {
        let mut out = vec![BTreeSet::new(); self.slots.len()];
        for (t, _, edges) in plan.iter() {
            if let Some(slot) = out.get_mut(t.wrapping_sub(1)) {
                slot.extend(edges.iter().copied());
            }
        }
        out
    }

    /// Total cost of an assignment plan; errors on any customer served by
    /// zero or several edge servers.
    pub fn cost(&self, plan: &AllocationPlan) -> Result<Rational> {
        let billing = self.billing_config()?;
        let series = self.series(plan)?;
        Ok(series_cost(&self.prices, &series, billing.discard_count()))
    }

    /// Capacity violations of an assignment plan as `(t, server, load)`.
    pub fn overloads(&self, plan: &AllocationPlan) -> Result<Vec<(usize, NodeId, Rational)>> {
        let series = self.series(plan)?;
        let mut out = Vec::new();
        for i in 1..=self.n() {
            for (t, &v) in series[i].iter().enumerate() {
                if v > self.caps[i - 1] {
                    out.push((t + 1, i, v));
                }
            }
        }
        Ok(out)
    }

    fn series(&self, plan: &AllocationPlan) -> Result<Vec<Vec<Rational>>> {
        let assignment = self.assignment_from_plan(plan);
        let mut series = vec![Vec::with_capacity(self.slots.len()); self.n() + 1];
        for t in 1..=self.slots.len() {
            let loads = self.server_loads(t, self.leaf_loads(t, &assignment[t - 1])?);
            for (i, v) in loads.into_iter().enumerate() {
                series[i].push(v);
            }
        }
        Ok(series)
    }
}

fn series_cost(prices: &[Rational], series: &[Vec<Rational>], k: usize) -> Rational {
    (1..series.len()).map(|i| prices[i - 1] * kth_largest(&series[i], k)).sum()
}

/// Upstream traffic of every central server in slot `t` under an assignment.
pub fn cdn_estimate_upstream(cdn: &CdnInstance, t: usize, edges: &BTreeSet<Edge>) -> Result<BTreeMap<NodeId, Rational>> {
    if t == 0 || t > cdn.slots.len() {
        return Err(Error::PlanShape(format!("slot {t} outside 1..={}", cdn.slots.len())));
    }
    let loads = cdn.server_loads(t, cdn.leaf_loads(t, edges)?);
    Ok((1..=cdn.n()).filter(|&i| !cdn.is_leaf(i)).map(|i| (i, loads[i])).collect())
}

/// The generic instance matching one assignment plan, and its cost offset.
///
/// Every edge server that serves customers in slot `t` becomes a source
/// whose destinations are those customers, with `w` set to its load divided
/// by their number, so its egress equals its load. Servers are billed on
/// egress, customers are unbilled endpoints. Central servers carry no edges;
/// their cost is returned separately so that
/// `total_cost(lowered, plan) + upstream == cdn.cost(plan)`.
pub fn cdn_lower(cdn: &CdnInstance, plan: &AllocationPlan) -> Result<(Instance, Rational)> {
    let assignment = cdn.assignment_from_plan(plan);
    let n = cdn.n();
    let max_customers = cdn.slots.iter().map(|s| s.customers.len()).max().unwrap_or(0);
    let total = n + max_customers;
    let mut all_edges = BTreeSet::new();
    let mut demands = Vec::new();
    for (idx, slot) in cdn.slots.iter().enumerate() {
        let t = idx + 1;
        let eligible: BTreeSet<Edge> = slot
            .customers
            .iter()
            .enumerate()
            .flat_map(|(c, cust)| cust.eligible.iter().map(move |&i| (i, n + c + 1)))
            .collect();
        all_edges.extend(eligible.iter().copied());
        let loads = cdn.leaf_loads(t, &assignment[idx])?;
        let mut by_server: BTreeMap<NodeId, Vec<NodeId>> = BTreeMap::new();
        for &(i, j) in &assignment[idx] {
            by_server.entry(i).or_default().push(j);
        }
        let mut sd = SlotDemand::new(t, eligible);
        for (i, dests) in by_server {
            let w = loads[i] / Rational::from(dests.len());
            sd = sd.with_source(i, w, dests);
        }
        demands.push(sd);
    }
    let mut prices = cdn.prices.clone();
    let mut caps = cdn.caps.clone();
    prices.resize(total, Rational::ONE);
    caps.resize(total, Rational::ONE);
    let network = Network::new(prices, caps.clone(), caps, all_edges)?;
    let rules = ScenarioRules {
        servers: n,
        single_ingest: false,
    };
    let inst = Instance::with_rules(network, cdn.billing_config()?, demands, Some(rules))?;

    let billing = cdn.billing_config()?;
    let series = cdn.series(plan)?;
    let upstream = (1..=n)
        .filter(|&i| !cdn.is_leaf(i))
        .map(|i| cdn.prices[i - 1] * kth_largest(&series[i], billing.discard_count()))
        .sum();
    Ok((inst, upstream))
}

/// Per-slot factors: adding `w` at leaf `i` adds `w * f` to each `(node, f)`.
fn propagation(cdn: &CdnInstance, t: usize) -> Vec<Vec<(NodeId, Rational)>> {
    let miss = &cdn.slots[t - 1].miss;
    let mut out = vec![Vec::new(); cdn.n() + 1];
    for (i, entry) in out.iter_mut().enumerate().skip(1) {
        let mut f = Rational::ONE;
        let mut v = i;
        entry.push((v, f));
        while cdn.parents[v - 1] != 0 {
            f = f * miss[v - 1];
            v = cdn.parents[v - 1];
            entry.push((v, f));
        }
    }
    out
}

struct Search<'a> {
    cdn: &'a CdnInstance,
    k: usize,
    /// (t, customer index) in search order.
    order: Vec<(usize, usize)>,
    factors: Vec<Vec<Vec<(NodeId, Rational)>>>,
    series: Vec<Vec<Rational>>,
    choice: Vec<NodeId>,
    best: Option<(Rational, Vec<NodeId>)>,
    nodes: u64,
    max_nodes: u64,
}

impl Search<'_> {
    fn apply(&mut self, t: usize, leaf: NodeId, w: Rational, sign: bool) -> bool {
        let mut ok = true;
        for &(v, f) in &self.factors[t][leaf] {
            let cell = &mut self.series[v][t - 1];
            if sign {
                *cell += w * f;
                ok &= *cell <= self.cdn.caps[v - 1];
            } else {
                *cell -= w * f;
            }
        }
        ok
    }

    fn run(&mut self, depth: usize) -> Result<()> {
        self.nodes += 1;
        if self.nodes > self.max_nodes {
            return Err(Error::Resource(format!("cdn exact search exceeded {} nodes", self.max_nodes)));
        }
        let lb = series_cost(&self.cdn.prices, &self.series, self.k);
        if matches!(&self.best, Some((c, _)) if lb >= *c) {
            return Ok(());
        }
        if depth == self.order.len() {
            self.best = Some((lb, self.choice.clone()));
            return Ok(());
        }
        let (t, c) = self.order[depth];
        let cust = &self.cdn.slots[t - 1].customers[c];
        let (w, eligible) = (cust.w, cust.eligible.clone());
        for leaf in eligible {
            if self.apply(t, leaf, w, true) {
                self.choice.push(leaf);
                self.run(depth + 1)?;
                self.choice.pop();
            }
            self.apply(t, leaf, w, false);
        }
        Ok(())
    }
}

/// Minimum-cost customer assignment.
///
/// `Exact` is a depth-first search over assignments (heaviest customers
/// first) cut by the cost of the partial loads, which can only grow; it fails
/// with a resource error after `max_nodes` search nodes. `Greedy` assigns
/// customers slot by slot in descending demand (ties by index) to the
/// eligible edge server with the smallest cost increase that fits (ties by
/// id). The plan maps each edge server to the customers it serves.
pub fn cdn_solve(cdn: &CdnInstance, strategy: Strategy, max_nodes: u64) -> Result<SolveReport> {
    let start = Instant::now();
    let billing = cdn.billing_config()?;
    let k = billing.discard_count();
    let p = cdn.slots.len();
    let mut order = Vec::new();
    for (idx, slot) in cdn.slots.iter().enumerate() {
        let mut cs: Vec<usize> = (0..slot.customers.len()).collect();
        cs.sort_by_key(|&c| (std::cmp::Reverse(slot.customers[c].w), c));
        order.extend(cs.into_iter().map(|c| (idx + 1, c)));
    }
    let mut factors = vec![Vec::new()];
    factors.extend((1..=p).map(|t| propagation(cdn, t)));
    let mut search = Search {
        cdn,
        k,
        order,
        factors,
        series: vec![vec![Rational::ZERO; p]; cdn.n() + 1],
        choice: Vec::new(),
        best: None,
        nodes: 0,
        max_nodes,
    };
    let mut stats = SolveStats::default();
    let (status, found) = match strategy {
        Strategy::Exact => {
            search.run(0)?;
            (SolveStatus::ProvenOptimal, search.best.take())
        }
        Strategy::Greedy => {
            let mut ok = true;
            for depth in 0..search.order.len() {
                let (t, c) = search.order[depth];
                let cust = &cdn.slots[t - 1].customers[c];
                let (w, eligible) = (cust.w, cust.eligible.clone());
                let mut pick: Option<(Rational, NodeId)> = None;
                for leaf in eligible {
                    if search.apply(t, leaf, w, true) {
                        let c = series_cost(&cdn.prices, &search.series, k);
                        if pick.is_none_or(|(bc, bl)| (c, leaf) < (bc, bl)) {
                            pick = Some((c, leaf));
                        }
                    }
                    search.apply(t, leaf, w, false);
                }
                let Some((_, leaf)) = pick else {
                    ok = false;
                    break;
                };
                search.apply(t, leaf, w, true);
                search.choice.push(leaf);
            }
            let cost = series_cost(&cdn.prices, &search.series, k);
            (SolveStatus::Heuristic, ok.then(|| (cost, search.choice.clone())))
        }
    };
    stats.nodes_explored = search.nodes;
    stats.wall_ms = elapsed_ms(start);
    let Some((cost, choice)) = found else {
        return Ok(SolveReport::infeasible(stats));
    };
    let mut assignment = vec![BTreeSet::new(); p];
    for (&(t, c), &leaf) in search.order.iter().zip(&choice) {
        assignment[t - 1].insert((leaf, cdn.customer_id(c)));
    }
    Ok(SolveReport {
        status,
        plan: CdnInstance::assignment_plan(&assignment),
        cost: Some(cost),
        stats,
        trace: Vec::new(),
    })
}

/// Random tree (each server's parent is an earlier server), random miss
/// probabilities in quarters, and customers eligible for a random subset of
/// edge servers. Feasible mode raises every capacity to the load it would
/// carry if each customer were served by all of its eligible servers.
pub fn generate(spec: &GenSpec) -> Result<CdnInstance> {
    let mut rng = Prng::new(spec.seed);
    let n = spec.n.max(2);
    let mut parents = vec![0];
    for i in 2..=n {
        parents.push(rng.range(1, i as u64 - 1) as usize);
    }
    let prices: Vec<Rational> = (0..n).map(|_| int(&mut rng, spec.price)).collect();
    let mut caps: Vec<Rational> = (0..n).map(|_| int(&mut rng, spec.capacity)).collect();
    let mult = spec.multipliers();
    let mut inst = CdnInstance {
        schema: CDN_SCHEMA.into(),
        parents,
        prices,
        caps: caps.clone(),
        billing: BillingFile { p: spec.p, q: spec.q },
        slots: Vec::new(),
    };
    let leaves: Vec<NodeId> = (1..=n).filter(|&i| inst.is_leaf(i)).collect();
    for t in 1..=spec.p {
        let miss = (0..n).map(|_| Rational::new(rng.range(0, 4) as i128, 4)).collect();
        let m = count(&mut rng, spec.endpoints);
        let customers = (0..m)
            .map(|_| {
                let w = int(&mut rng, spec.weight) * mult[t - 1];
                let d = count(&mut rng, spec.dests).clamp(1, leaves.len());
                CdnCustomer {
                    w,
                    eligible: rng.sample(&leaves, d),
                }
            })
            .collect();
        inst.slots.push(CdnSlot { t, miss, customers });
    }
    if spec.feasible {
        for t in 1..=spec.p {
            let mut loads = vec![Rational::ZERO; n + 1];
            for c in &inst.slots[t - 1].customers {
                for &i in &c.eligible {
                    loads[i] += c.w;
                }
            }
            for (i, v) in inst.server_loads(t, loads).into_iter().enumerate().skip(1) {
                caps[i - 1] = caps[i - 1].max(v);
            }
        }
        inst.caps = caps;
    }
    inst.validate()?;
    Ok(inst)
}
