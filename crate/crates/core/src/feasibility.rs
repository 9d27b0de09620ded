//! Constraint checking, in-edge pruning and arborescence validation.
//!
//! A plan is feasible when, for every slot `t` and source `s`:
//!
//! * `s` sends on at least one edge whenever it has destinations
//!   (exactly one under single-ingest rules);
//! * every destination receives the data over an edge whose tail is reachable
//!   from `s` in the source's edge set;
//! * per-node egress and ingress loads stay within capacity;
//! * every non-destination node forwards at least as many copies as it
//!   receives.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::cost::BandwidthSeries;
use crate::error::{Error, Result};
use crate::io::to_pretty;
use crate::model::{AllocationPlan, Edge, Instance, NodeId};
use crate::rational::Rational;

pub const VIOLATIONS_SCHEMA: &str = "nba-violations/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    SourceUncovered,
    DestinationUncovered,
    EgressCapExceeded,
    IngressCapExceeded,
    ReplicationFlowViolated,
    ForeignEdge,
    IngestNotUnique,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub t: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<NodeId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub node: Option<NodeId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edge: Option<[NodeId; 2]>,
    pub measured: Rational,
    pub bound: Rational,
}

impl Violation {
    fn new(kind: ViolationKind, t: usize, s: Option<NodeId>, node: Option<NodeId>) -> Self {
        Violation {
            kind,
            t,
            s,
            node,
            edge: None,
            measured: Rational::ZERO,
            bound: Rational::ZERO,
        }
    }

    fn values(mut self, measured: impl Into<Rational>, bound: impl Into<Rational>) -> Self {
        self.measured = measured.into();
        self.bound = bound.into();
        self
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ViolationReport {
    pub schema: String,
    pub feasible: bool,
    pub violations: Vec<Violation>,
}

impl ViolationReport {
    pub fn new(violations: Vec<Violation>) -> Self {
        ViolationReport {
            schema: VIOLATIONS_SCHEMA.to_string(),
            feasible: violations.is_empty(),
            violations,
        }
    }

    pub fn to_json(&self) -> String {
        to_pretty(self)
    }
}

/// In/out degree of every node touched by an edge set.
pub(crate) fn degrees(edges: &BTreeSet<Edge>) -> (BTreeMap<NodeId, usize>, BTreeMap<NodeId, usize>) {
    let mut indeg = BTreeMap::new();
    let mut outdeg = BTreeMap::new();
    for &(i, j) in edges {
        *outdeg.entry(i).or_insert(0) += 1;
        *indeg.entry(j).or_insert(0) += 1;
    }
    (indeg, outdeg)
}

/// Nodes reachable from `root` along `edges` (including `root`).
pub(crate) fn reachable(edges: &BTreeSet<Edge>, root: NodeId) -> BTreeSet<NodeId> {
    let mut adj: BTreeMap<NodeId, Vec<NodeId>> = BTreeMap::new();
    for &(i, j) in edges {
        adj.entry(i).or_default().push(j);
    }
    let mut seen = BTreeSet::from([root]);
    let mut queue = VecDeque::from([root]);
    while let Some(v) = queue.pop_front() {
        for &w in adj.get(&v).into_iter().flatten() {
            if seen.insert(w) {
                queue.push_back(w);
            }
        }
    }
    seen
}

/// Every violated constraint of `plan`; empty iff the plan is feasible.
///
/// Entries that do not belong to the instance are reported as
/// [`ViolationKind::ForeignEdge`] and ignored by the remaining checks.
pub fn check_feasible(instance: &Instance, plan: &AllocationPlan) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut valid = AllocationPlan::new();
    for (t, s, edges) in plan.iter() {
        if t == 0 || t > instance.p() || !instance.slot(t).sources.contains_key(&s) {
            out.push(Violation::new(ViolationKind::ForeignEdge, t, Some(s), None));
            continue;
        }
        let slot = instance.slot(t);
        for &e in edges {
            if slot.edges.contains(&e) {
                valid.insert(t, s, e);
            } else {
                let mut v = Violation::new(ViolationKind::ForeignEdge, t, Some(s), None);
                v.edge = Some([e.0, e.1]);
                out.push(v);
            }
        }
    }

    let mut series = BandwidthSeries::zeros(instance.n(), instance.p());
    for (t, s, edges) in valid.iter() {
        let w = instance.slot(t).sources[&s].w;
        for &e in edges {
            series.add_edge(t, e, w);
        }
    }

    let net = instance.network();
    for slot in instance.demands() {
        let t = slot.t;
        for (&s, demand) in &slot.sources {
            let edges = valid.edges_or_empty(t, s);
            let (indeg, outdeg) = degrees(&edges);
            let out_s = outdeg.get(&s).copied().unwrap_or(0);
            if !demand.dests.is_empty() {
                if out_s == 0 {
                    out.push(
                        Violation::new(ViolationKind::SourceUncovered, t, Some(s), Some(s)).values(0usize, 1usize),
                    );
                } else if instance.single_ingest() && out_s > 1 {
                    out.push(
                        Violation::new(ViolationKind::IngestNotUnique, t, Some(s), Some(s)).values(out_s, 1usize),
                    );
                }
            }
            let reach = reachable(&edges, s);
            for &j in &demand.dests {
                let fed = edges.iter().filter(|&&(i, k)| k == j && reach.contains(&i)).count();
                if fed == 0 {
                    out.push(
                        Violation::new(ViolationKind::DestinationUncovered, t, Some(s), Some(j)).values(fed, 1usize),
                    );
                }
            }
            let touched: BTreeSet<NodeId> = indeg.keys().chain(outdeg.keys()).copied().collect();
            for j in touched {
                if demand.dests.contains(&j) || !instance.relay_constrained(j) {
                    continue;
                }
                let din = indeg.get(&j).copied().unwrap_or(0);
                let dout = outdeg.get(&j).copied().unwrap_or(0);
                if din > dout {
                    out.push(
                        Violation::new(ViolationKind::ReplicationFlowViolated, t, Some(s), Some(j))
                            .values(din, dout),
                    );
                }
            }
        }
        for i in net.nodes() {
            let egress = series.egress(i)[t - 1];
            if instance.is_server(i) && egress > net.egress_cap(i) {
                out.push(
                    Violation::new(ViolationKind::EgressCapExceeded, t, None, Some(i)).values(egress, net.egress_cap(i)),
                );
            }
            let ingress = series.ingress(i)[t - 1];
            if instance.tracks_ingress() && ingress > net.ingress_cap(i) {
                out.push(
                    Violation::new(ViolationKind::IngressCapExceeded, t, None, Some(i))
                        .values(ingress, net.ingress_cap(i)),
                );
            }
        }
    }
    out
}

/// Whether every `(t, s)` edge set has no in-edge at the source and at most
/// one in-edge elsewhere.
pub fn is_pruned(plan: &AllocationPlan) -> bool {
    plan.iter().all(|(_, s, edges)| {
        let (indeg, _) = degrees(edges);
        !indeg.contains_key(&s) && indeg.values().all(|&d| d <= 1)
    })
}

/// Removes redundant edges from a feasible plan without increasing its cost.
///
/// Per `(t, s)`: edges into the source, edges whose tail is unreachable from
/// the source and relays left without an out-edge are dropped; then, while
/// some node has two or more in-edges, one of them is deleted. Only in-edges
/// whose removal keeps the node reachable are candidates; among them the one
/// whose tail currently carries the most egress in slot `t` goes first, ties
/// to the smaller tail id.
pub fn prune_plan(instance: &Instance, plan: &AllocationPlan) -> Result<AllocationPlan> {
    let violations = check_feasible(instance, plan);
    if !violations.is_empty() {
        return Err(Error::Precondition {
            message: "prune_plan requires a feasible plan".into(),
            violations,
        });
    }
    let mut series = crate::cost::bandwidth_series(instance, plan)?;
    let mut out = plan.clone();
    for (t, s) in instance.pairs() {
        let Some(current) = out.edges(t, s).cloned() else {
            continue;
        };
        let demand = &instance.slot(t).sources[&s];
        let w = demand.w;
        let mut edges = current.clone();
        let remove = |edges: &mut BTreeSet<Edge>, e: Edge, series: &mut BandwidthSeries| {
            edges.remove(&e);
            series.remove_edge(t, e, w);
        };

        tidy(&mut edges, s, &demand.dests, |e, set| remove(set, e, &mut series));
        loop {
            let (indeg, _) = degrees(&edges);
            let Some((&j, _)) = indeg.iter().find(|(_, &d)| d >= 2) else {
                break;
            };
            let mut best: Option<(Rational, NodeId)> = None;
            for &(i, k) in edges.iter().filter(|e| e.1 == j) {
                let mut trial = edges.clone();
                trial.remove(&(i, k));
                if !reachable(&trial, s).contains(&j) {
                    continue;
                }
                let load = series.egress(i)[t - 1];
                let better = match best {
                    None => true,
                    Some((bl, bi)) => load > bl || (load == bl && i < bi),
                };
                if better {
                    best = Some((load, i));
                }
            }
            // A reachable node with two in-edges always has a removable one.
            let (_, tail) = best.expect("removable in-edge");
            remove(&mut edges, (tail, j), &mut series);
            tidy(&mut edges, s, &demand.dests, |e, set| remove(set, e, &mut series));
        }
        if edges != current {
            out.set_edges(t, s, edges);
        }
    }
    Ok(out)
}

/// Drops edges into `s`, edges with unreachable tails and dangling relays
/// until nothing changes.
pub(crate) fn tidy(
    edges: &mut BTreeSet<Edge>,
    s: NodeId,
    dests: &BTreeSet<NodeId>,
    mut drop: impl FnMut(Edge, &mut BTreeSet<Edge>),
) {
    loop {
        let reach = reachable(edges, s);
        let (_, outdeg) = degrees(edges);
        let doomed: Vec<Edge> = edges
            .iter()
            .copied()
            .filter(|&(i, j)| {
                j == s
                    || !reach.contains(&i)
                    || (!dests.contains(&j) && !outdeg.contains_key(&j))
            })
            .collect();
        if doomed.is_empty() {
            return;
        }
        for e in doomed {
            drop(e, edges);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "defect", rename_all = "snake_case")]
pub enum TreeDefect {
    Cycle { nodes: Vec<NodeId> },
    SourceHasInEdge,
    Unreachable { node: NodeId },
    MultipleParents { node: NodeId },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeCheck {
    pub is_tree: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub defect: Option<TreeDefect>,
}

/// Whether the edges for `(t, s)` form an out-arborescence rooted at `s`.
/// An empty edge set is the trivial tree.
pub fn is_directed_tree(plan: &AllocationPlan, t: usize, s: NodeId) -> TreeCheck {
    let edges = plan.edges_or_empty(t, s);
    match tree_defect(&edges, s) {
        None => TreeCheck { is_tree: true, defect: None },
        Some(d) => TreeCheck { is_tree: false, defect: Some(d) },
    }
}

pub(crate) fn tree_defect(edges: &BTreeSet<Edge>, s: NodeId) -> Option<TreeDefect> {
    if edges.is_empty() {
        return None;
    }
    if let Some(nodes) = find_cycle(edges) {
        return Some(TreeDefect::Cycle { nodes });
    }
    let (indeg, outdeg) = degrees(edges);
    if indeg.contains_key(&s) {
        return Some(TreeDefect::SourceHasInEdge);
    }
    let reach = reachable(edges, s);
    if let Some(&node) = indeg.keys().chain(outdeg.keys()).filter(|v| !reach.contains(v)).min() {
        return Some(TreeDefect::Unreachable { node });
    }
    if let Some((&node, _)) = indeg.iter().find(|(_, &d)| d > 1) {
        return Some(TreeDefect::MultipleParents { node });
    }
    None
}

/// Nodes of some directed cycle, sorted, if one exists.
pub(crate) fn find_cycle(edges: &BTreeSet<Edge>) -> Option<Vec<NodeId>> {
    let mut adj: BTreeMap<NodeId, Vec<NodeId>> = BTreeMap::new();
    for &(i, j) in edges {
        adj.entry(i).or_default().push(j);
        adj.entry(j).or_default();
    }
    // 0 = unvisited, 1 = on stack, 2 = done
    let mut state: BTreeMap<NodeId, u8> = adj.keys().map(|&v| (v, 0)).collect();
    let roots: Vec<NodeId> = adj.keys().copied().collect();
    for root in roots {
        if state[&root] != 0 {
            continue;
        }
        let mut stack: Vec<(NodeId, usize)> = vec![(root, 0)];
        let mut path: Vec<NodeId> = vec![root];
        state.insert(root, 1);
        while let Some(&mut (v, ref mut idx)) = stack.last_mut() {
            let next = adj[&v].get(*idx).copied();
            *idx += 1;
            match next {
                Some(w) => match state[&w] {
                    0 => {
                        state.insert(w, 1);
                        stack.push((w, 0));
                        path.push(w);
                    }
                    1 => {
                        let pos = path.iter().position(|&x| x == w).expect("on path");
                        let mut cycle = path[pos..].to_vec();
                        cycle.sort_unstable();
                        return Some(cycle);
                    }
                    _ => {}
                },
                None => {
                    state.insert(v, 2);
                    stack.pop();
                    path.pop();
                }
            }
        }
    }
    None
}

/// Whether the underlying undirected multigraph of `edges` is a forest.
pub fn is_acyclic_undirected(edges: &BTreeSet<Edge>) -> bool {
    let mut parent: BTreeMap<NodeId, NodeId> = BTreeMap::new();
    fn root(parent: &mut BTreeMap<NodeId, NodeId>, v: NodeId) -> NodeId {
        let p = *parent.entry(v).or_insert(v);
        if p == v {
            return v;
        }
        let r = root(parent, p);
        parent.insert(v, r);
        r
    }
    for &(i, j) in edges {
        let (a, b) = (root(&mut parent, i), root(&mut parent, j));
        if a == b {
            return false;
        }
        parent.insert(a, b);
    }
    true
}
