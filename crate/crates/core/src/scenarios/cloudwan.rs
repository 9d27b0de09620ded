//! Cloud WAN egress: PoPs serve integer client demands.
//!
//! PoPs are nodes `1..=pops`, clients `pops + 1 ..= pops + clients`. In each
//! slot every client's demand is split over its eligible PoPs in whole Mbps,
//! and a PoP's load (its egress) may not exceed its capacity. PoPs pay their
//! price times the percentile of their load series.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::flow::FlowNet;
use super::simplex::{LinearProgram, Sense};
use super::Strategy;
use crate::cost::kth_largest;
use crate::error::{input, Error, Result};
use crate::gen::{count, int, GenSpec, Prng};
use crate::io::{check_schema, to_pretty, BillingFile};
use crate::model::{BillingConfig, Edge, NodeId};
use crate::rational::Rational;
use crate::solvers::{elapsed_ms, SolveStats, SolveStatus};

pub const CWAN_SCHEMA: &str = "nba-cwan/1";
pub const CWAN_REPORT_SCHEMA: &str = "nba-cwan-report/1";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CloudWanInstance {
    pub schema: String,
    pub pops: usize,
    pub clients: usize,
    pub prices: Vec<Rational>,
    pub caps: Vec<u64>,
    pub billing: BillingFile,
    pub slots: Vec<CwanSlot>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CwanSlot {
    pub t: usize,
    /// `[pop, client]` pairs.
    pub edges: Vec<[NodeId; 2]>,
    /// Demand of every client, zero allowed.
    pub demands: Vec<u64>,
}

/// Integer flows per slot: `flows[t - 1][(pop, client)]`.
pub type CwanFlows = Vec<BTreeMap<Edge, u64>>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CwanReport {
    pub status: SolveStatus,
    pub cost: Option<Rational>,
    pub flows: CwanFlows,
    /// First slot whose demand cannot be met, when infeasible.
    pub infeasible_slot: Option<usize>,
    pub stats: SolveStats,
}

#[derive(Serialize)]
struct CwanReportFile<'a> {
    schema: &'a str,
    status: SolveStatus,
    cost: Option<Rational>,
    #[serde(skip_serializing_if = "Option::is_none")]
    infeasible_slot: Option<usize>,
    flows: Vec<FlowSlotFile>,
    stats: &'a SolveStats,
}

#[derive(Serialize)]
struct FlowSlotFile {
    t: usize,
    flows: Vec<[u64; 3]>,
}

impl CwanReport {
    /// `flows` lists `[pop, client, amount]` for positive amounts.
    pub fn to_json(&self) -> String {
        to_pretty(&CwanReportFile {
            schema: CWAN_REPORT_SCHEMA,
            status: self.status,
            cost: self.cost,
            infeasible_slot: self.infeasible_slot,
            flows: self
                .flows
                .iter()
                .enumerate()
                .map(|(i, f)| FlowSlotFile {
                    t: i + 1,
                    flows: f
                        .iter()
                        .filter(|(_, &v)| v > 0)
                        .map(|(&(a, b), &v)| [a as u64, b as u64, v])
                        .collect(),
                })
                .collect(),
            stats: &self.stats,
        })
    }
}

impl CloudWanInstance {
    pub fn from_json(text: &str) -> Result<Self> {
        let inst: CloudWanInstance = serde_json::from_str(text)?;
        inst.validate()?;
        Ok(inst)
    }

    pub fn to_json(&self) -> String {
        to_pretty(self)
    }

    pub fn billing_config(&self) -> Result<BillingConfig> {
        self.billing.config()
    }

    pub fn validate(&self) -> Result<()> {
        check_schema(&self.schema, CWAN_SCHEMA)?;
        let m = self.pops;
        if m == 0 {
            return input("cwan: need at least one PoP");
        }
        if self.prices.len() != m || self.caps.len() != m {
            return input(format!("cwan: prices and caps must have {m} entries"));
        }
        if self.prices.iter().any(|u| !u.is_positive()) || self.caps.contains(&0) {
            return input("cwan: prices and caps must be positive");
        }
        let billing = self.billing_config()?;
        if self.slots.len() != billing.p() {
            return input(format!("cwan: expected {} slots, got {}", billing.p(), self.slots.len()));
        }
        for (idx, slot) in self.slots.iter().enumerate() {
            let t = slot.t;
            if t != idx + 1 {
                return input(format!("cwan: slots[{idx}] has t = {t}, expected {}", idx + 1));
            }
            if slot.demands.len() != self.clients {
                return input(format!("cwan: slot {t}: expected {} demands", self.clients));
            }
            let mut seen = BTreeSet::new();
            for &[i, j] in &slot.edges {
                if !(1..=m).contains(&i) || j <= m || j > m + self.clients {
                    return input(format!("cwan: slot {t}: edge [{i},{j}] is not PoP to client"));
                }
                if !seen.insert((i, j)) {
                    return input(format!("cwan: slot {t}: duplicate edge [{i},{j}]"));
                }
            }
        }
        Ok(())
    }

    fn total_demand(&self, t: usize) -> u64 {
        self.slots[t - 1].demands.iter().sum()
    }

    /// A flow meeting every demand of slot `t` with PoP loads at most
    /// `limits`, if one exists.
    pub fn slot_flow(&self, t: usize, limits: &[u64]) -> Option<BTreeMap<Edge, u64>> {
        let slot = &self.slots[t - 1];
        let m = self.pops;
        let (src, sink) = (0, m + self.clients + 1);
        let mut net = FlowNet::new(m + self.clients + 2);
        for i in 1..=m {
            net.add(src, i, limits[i - 1]);
        }
        let handles: Vec<(Edge, usize)> = slot
            .edges
            .iter()
            .map(|&[i, j]| ((i, j), net.add(i, j, slot.demands[j - m - 1])))
            .collect();
        for (c, &d) in slot.demands.iter().enumerate() {
            net.add(m + c + 1, sink, d);
        }
        if net.max_flow(src, sink) != self.total_demand(t) {
            return None;
        }
        Some(handles.into_iter().map(|(e, h)| (e, net.flow(h))).collect())
    }

    /// Load series per PoP (index = PoP id, entry 0 unused).
    fn loads(&self, flows: &CwanFlows) -> Vec<Vec<u64>> {
        let mut out = vec![vec![0u64; self.slots.len()]; self.pops + 1];
        for (idx, slot) in flows.iter().enumerate() {
            for (&(i, _), &v) in slot {
                out[i][idx] += v;
            }
        }
        out
    }

    pub fn cost(&self, flows: &CwanFlows) -> Result<Rational> {
        let k = self.billing_config()?.discard_count();
        Ok(self.loads_cost(&self.loads(flows), k))
    }

    fn loads_cost(&self, loads: &[Vec<u64>], k: usize) -> Rational {
        (1..=self.pops)
            .map(|i| {
                let series: Vec<Rational> = loads[i].iter().map(|&v| Rational::from(v)).collect();
                self.prices[i - 1] * kth_largest(&series, k)
            })
            .sum()
    }

    /// Human-readable problems with `flows`; empty when every demand is met
    /// exactly over eligible edges within capacity.
    pub fn check_flows(&self, flows: &CwanFlows) -> Vec<String> {
        let mut out = Vec::new();
        if flows.len() != self.slots.len() {
            out.push(format!("expected {} slots of flows, got {}", self.slots.len(), flows.len()));
            return out;
        }
        let loads = self.loads(flows);
        for (idx, slot) in self.slots.iter().enumerate() {
            let t = idx + 1;
            let eligible: BTreeSet<Edge> = slot.edges.iter().map(|&[i, j]| (i, j)).collect();
            let mut served = vec![0u64; self.clients];
            for (&(i, j), &v) in &flows[idx] {
                if v > 0 && !eligible.contains(&(i, j)) {
                    out.push(format!("slot {t}: flow on ineligible edge ({i},{j})"));
                    continue;
                }
                served[j - self.pops - 1] += v;
            }
            for (c, (&got, &want)) in served.iter().zip(&slot.demands).enumerate() {
                if got != want {
                    out.push(format!("slot {t}: client {} receives {got}, demands {want}", self.pops + c + 1));
                }
            }
            for i in 1..=self.pops {
                if loads[i][idx] > self.caps[i - 1] {
                    out.push(format!("slot {t}: PoP {i} carries {} > {}", loads[i][idx], self.caps[i - 1]));
                }
            }
        }
        out
    }

    /// Per-slot LP relaxation with a peak objective: variables are the edge
    /// flows (in slot edge order) followed by one peak `y_i` per PoP;
    /// minimize `sum u_i y_i` subject to demand equalities, `load_i - y_i <= 0`
    /// and `y_i <= c_i`.
    pub fn slot_lp(&self, t: usize) -> LinearProgram {
        let slot = &self.slots[t - 1];
        let (e, m) = (slot.edges.len(), self.pops);
        let mut objective = vec![Rational::ZERO; e + m];
        objective[e..].copy_from_slice(&self.prices);
        let mut rows = Vec::new();
        for c in 0..self.clients {
            let j = m + c + 1;
            let a = (0..e + m)
                .map(|v| Rational::from(usize::from(v < e && slot.edges[v][1] == j)))
                .collect();
            rows.push((a, Sense::Eq, Rational::from(slot.demands[c])));
        }
        for i in 1..=m {
            let mut a: Vec<Rational> = (0..e + m)
                .map(|v| Rational::from(usize::from(v < e && slot.edges[v][0] == i)))
                .collect();
            a[e + i - 1] = -Rational::ONE;
            rows.push((a, Sense::Le, Rational::ZERO));
            let mut cap = vec![Rational::ZERO; e + m];
            cap[e + i - 1] = Rational::ONE;
            rows.push((cap, Sense::Le, Rational::from(self.caps[i - 1])));
        }
        LinearProgram { objective, rows }
    }
}

/// Limits of [`cloudwan_solve`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CwanLimits {
    /// Candidate level vectors the exact search may examine.
    pub max_levels: u64,
}

impl Default for CwanLimits {
    fn default() -> Self {
        CwanLimits { max_levels: 2_000_000 }
    }
}

/// Minimum-cost integer flows.
///
/// `Exact` enumerates charge levels `L` (one per PoP) in ascending
/// `sum u_i L_i` (ties lexicographic). `L` is achievable when every slot can
/// be served with each PoP at most at `L_i`, except that a PoP may go up to
/// its capacity in at most `k` slots; that is decided per slot by maximum
/// flow, trying the smallest sets of exceeding PoPs first. The first
/// achievable `L` is optimal because the optimum's own percentiles form an
/// achievable `L` of equal cost. Flows come from maximum flow at the chosen
/// limits.
///
/// `Greedy` fills demand one unit at a time, largest client first, into the
/// eligible PoP whose bill grows least (ties by id); a slot where that gets
/// stuck is solved by maximum flow at full capacity instead.
pub fn cloudwan_solve(cw: &CloudWanInstance, strategy: Strategy, limits: &CwanLimits) -> Result<CwanReport> {
    let start = Instant::now();
    let billing = cw.billing_config()?;
    let k = billing.discard_count();
    let mut stats = SolveStats::default();
    for t in 1..=cw.slots.len() {
        if cw.slot_flow(t, &cw.caps).is_none() {
            stats.wall_ms = elapsed_ms(start);
            return Ok(CwanReport {
                status: SolveStatus::Infeasible,
                cost: None,
                flows: Vec::new(),
                infeasible_slot: Some(t),
                stats,
            });
        }
    }
    let (status, flows) = match strategy {
        Strategy::Exact => (SolveStatus::ProvenOptimal, exact(cw, k, limits, &mut stats)?),
        Strategy::Greedy => (SolveStatus::Heuristic, greedy(cw, k)),
    };
    let cost = cw.cost(&flows)?;
    stats.wall_ms = elapsed_ms(start);
    Ok(CwanReport {
        status,
        cost: Some(cost),
        flows,
        infeasible_slot: None,
        stats,
    })
}

fn exact(cw: &CloudWanInstance, k: usize, limits: &CwanLimits, stats: &mut SolveStats) -> Result<CwanFlows> {
    let m = cw.pops;
    let p = cw.slots.len();
    // A PoP never needs a level above its largest possible slot load.
    let hi: Vec<u64> = (1..=m)
        .map(|i| {
            let reach = (0..p)
                .map(|idx| {
                    let slot = &cw.slots[idx];
                    slot.edges.iter().filter(|e| e[0] == i).map(|e| slot.demands[e[1] - m - 1]).sum::<u64>()
                })
                .max()
                .unwrap_or(0);
            reach.min(cw.caps[i - 1])
        })
        .collect();
    let total: u128 = hi.iter().map(|&h| h as u128 + 1).product();
    if total > limits.max_levels as u128 {
        return Err(Error::Resource(format!(
            "cwan exact search needs {total} level vectors, limit {}",
            limits.max_levels
        )));
    }
    let mut levels: Vec<(Rational, Vec<u64>)> = Vec::with_capacity(total as usize);
    let mut cur = vec![0u64; m];
    loop {
        let cost = cur.iter().zip(&cw.prices).map(|(&l, u)| *u * Rational::from(l)).sum();
        levels.push((cost, cur.clone()));
        let mut i = 0;
        while i < m && cur[i] == hi[i] {
            cur[i] = 0;
            i += 1;
        }
        if i == m {
            break;
        }
        cur[i] += 1;
    }
    levels.sort();
    for (_, level) in levels {
        stats.enumerated += 1;
        let mut search = Exclusions {
            cw,
            level: &level,
            failed: HashSet::new(),
            chosen: Vec::new(),
            nodes: 0,
        };
        if search.run(1, vec![k; m]) {
            stats.nodes_explored += search.nodes;
            let flows = search
                .chosen
                .iter()
                .enumerate()
                .map(|(idx, over)| {
                    let lim = search.limits(over);
                    cw.slot_flow(idx + 1, &lim).expect("checked slot")
                })
                .collect();
            return Ok(flows);
        }
        stats.nodes_explored += search.nodes;
    }
    unreachable!("full-capacity levels are achievable once every slot is feasible")
}

struct Exclusions<'a> {
    cw: &'a CloudWanInstance,
    level: &'a [u64],
    /// (slot, remaining budgets) known to fail.
    failed: HashSet<(usize, Vec<usize>)>,
    /// Exceeding PoPs per slot, on success.
    chosen: Vec<Vec<NodeId>>,
    nodes: u64,
}

impl Exclusions<'_> {
    fn limits(&self, over: &[NodeId]) -> Vec<u64> {
        let mut lim = self.level.to_vec();
        for &i in over {
            lim[i - 1] = self.cw.caps[i - 1];
        }
        lim
    }

    fn run(&mut self, t: usize, budget: Vec<usize>) -> bool {
        if t > self.cw.slots.len() {
            return true;
        }
        if self.failed.contains(&(t, budget.clone())) {
            return false;
        }
        let open: Vec<NodeId> = (1..=self.cw.pops).filter(|&i| budget[i - 1] > 0).collect();
        self.nodes += 1;
        if self.cw.slot_flow(t, &self.limits(&open)).is_some() {
            // Smallest exceeding sets first; supersets of a working set are skipped.
            let mut working: Vec<u64> = Vec::new();
            let n = open.len();
            let mut masks: Vec<u64> = (0..1u64 << n).collect();
            masks.sort_by_key(|&mask| (mask.count_ones(), mask.reverse_bits()));
            for mask in masks {
                if working.iter().any(|&w| w & mask == w) {
                    continue;
                }
                let over: Vec<NodeId> = (0..n).filter(|b| mask >> b & 1 == 1).map(|b| open[b]).collect();
                self.nodes += 1;
                if self.cw.slot_flow(t, &self.limits(&over)).is_none() {
                    continue;
                }
                working.push(mask);
                let mut next = budget.clone();
                for &i in &over {
                    next[i - 1] -= 1;
                }
                self.chosen.push(over);
                if self.run(t + 1, next) {
                    return true;
                }
                self.chosen.pop();
            }
        }
        self.failed.insert((t, budget));
        false
    }
}

fn greedy(cw: &CloudWanInstance, k: usize) -> CwanFlows {
    let m = cw.pops;
    let p = cw.slots.len();
    let mut loads = vec![vec![0u64; p]; m + 1];
    let mut flows: CwanFlows = vec![BTreeMap::new(); p];
    let charge = |loads: &Vec<Vec<u64>>, i: NodeId| {
        let series: Vec<Rational> = loads[i].iter().map(|&v| Rational::from(v)).collect();
        cw.prices[i - 1] * kth_largest(&series, k)
    };
    for (idx, slot) in cw.slots.iter().enumerate() {
        let mut order: Vec<usize> = (0..cw.clients).collect();
        order.sort_by_key(|&c| (std::cmp::Reverse(slot.demands[c]), c));
        let saved: Vec<u64> = (1..=m).map(|i| loads[i][idx]).collect();
        let mut stuck = false;
        'clients: for c in order {
            let j = m + c + 1;
            let eligible: Vec<NodeId> = slot.edges.iter().filter(|e| e[1] == j).map(|e| e[0]).collect();
            for _ in 0..slot.demands[c] {
                let mut pick: Option<(Rational, NodeId)> = None;
                for &i in &eligible {
                    if loads[i][idx] >= cw.caps[i - 1] {
                        continue;
                    }
                    let before = charge(&loads, i);
                    loads[i][idx] += 1;
                    let delta = charge(&loads, i) - before;
                    loads[i][idx] -= 1;
                    if pick.is_none_or(|b| (delta, i) < b) {
                        pick = Some((delta, i));
                    }
                }
                let Some((_, i)) = pick else {
                    stuck = true;
                    break 'clients;
                };
                loads[i][idx] += 1;
                *flows[idx].entry((i, j)).or_insert(0) += 1;
            }
        }
        if stuck {
            log::debug!("cwan greedy: slot {} falls back to max flow", idx + 1);
            let f = cw.slot_flow(idx + 1, &cw.caps).expect("slot checked feasible");
            for i in 1..=m {
                loads[i][idx] = saved[i - 1];
            }
            for (&(i, _), &v) in &f {
                loads[i][idx] += v;
            }
            flows[idx] = f;
        }
    }
    flows
}

/// Clients are fixed; each slot draws demands in `0..=weight.hi` and edges
/// with probability `density`. Feasible mode gives every client with demand
/// an edge to a random PoP and raises that PoP's capacity to carry it.
pub fn generate(spec: &GenSpec) -> Result<CloudWanInstance> {
    let mut rng = Prng::new(spec.seed);
    let m = spec.n;
    let clients = spec.endpoints[1].max(1);
    let prices: Vec<Rational> = (0..m).map(|_| int(&mut rng, spec.price)).collect();
    let mut caps: Vec<u64> = (0..m).map(|_| rng.range(spec.capacity[0], spec.capacity[1])).collect();
    let mult = spec.multipliers();
    let mut slots = Vec::new();
    for t in 1..=spec.p {
        let active = count(&mut rng, spec.endpoints).min(clients);
        let chosen: BTreeSet<usize> = rng.sample(&(0..clients).collect::<Vec<_>>(), active).into_iter().collect();
        let demands: Vec<u64> = (0..clients)
            .map(|c| {
                let d = rng.range(0, spec.weight[1]);
                let scaled = Rational::from(d) * mult[t - 1];
                if chosen.contains(&c) {
                    scaled.floor() as u64
                } else {
                    0
                }
            })
            .collect();
        let mut edges = BTreeSet::new();
        for i in 1..=m {
            for c in 0..clients {
                if rng.chance(spec.density) {
                    edges.insert([i, m + c + 1]);
                }
            }
        }
        if spec.feasible {
            let mut load = vec![0u64; m + 1];
            for (c, &d) in demands.iter().enumerate() {
                if d > 0 {
                    let home = 1 + rng.below(m as u64) as usize;
                    edges.insert([home, m + c + 1]);
                    load[home] += d;
                }
            }
            for i in 1..=m {
                caps[i - 1] = caps[i - 1].max(load[i]);
            }
        }
        slots.push(CwanSlot {
            t,
            edges: edges.into_iter().collect(),
            demands,
        });
    }
    let inst = CloudWanInstance {
        schema: CWAN_SCHEMA.into(),
        pops: m,
        clients,
        prices,
        caps,
        billing: BillingFile { p: spec.p, q: spec.q },
        slots,
    };
    inst.validate()?;
    Ok(inst)
}
