use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use super::{elapsed_ms, SolveReport, SolveStats, SolveStatus};
use crate::cost::{kth_largest, total_cost, LoadLedger};
use crate::error::{Error, Result};
use crate::feasibility::{check_feasible, degrees, prune_plan, reachable, tidy};
use crate::model::{AllocationPlan, Edge, Instance, NodeId};
use crate::rational::Rational;

/// Best-improvement hill climbing from a feasible plan.
///
/// The plan is pruned first (the in-edge deletion move, applied until no
/// node has two in-edges). Each round then evaluates every
///
/// * reattach move: cut the edge into a node `j` and feed `j` from another
///   tree node outside its subtree, directly or through one new relay
///   spliced under the old parent;
/// * peak reroute move: at a slot where a billed node carries its charged
///   egress, remove that node's out-edges in one tree and hang each orphaned
///   subtree from the cheapest other tree node;
///
/// and applies the cheapest one if it lowers the cost. Stops at a local
/// optimum or after `budget` applied moves. `trace` holds the input cost and
/// the cost after every applied move.
pub fn improve_local(instance: &Instance, plan: &AllocationPlan, budget: usize) -> Result<SolveReport> {
    let start = Instant::now();
    let violations = check_feasible(instance, plan);
    if !violations.is_empty() {
        return Err(Error::Precondition {
            message: "improve_local requires a feasible plan".into(),
            violations,
        });
    }
    let mut stats = SolveStats::default();
    let mut cost = total_cost(instance, plan)?;
    let mut trace = vec![cost];
    let mut input = plan.clone();
    for (t, s) in instance.pairs() {
        input.ensure(t, s);
    }
    let mut current = prune_plan(instance, &input)?;
    for (t, s) in instance.pairs() {
        current.ensure(t, s);
    }
    if current != input {
        cost = total_cost(instance, &current)?;
        trace.push(cost);
        stats.moves_applied += 1;
    }

    let mut ledger = LoadLedger::from_plan(instance, &current)?;
    while (stats.moves_applied as usize) < budget {
        let mut best: Option<(Rational, usize, NodeId, BTreeSet<Edge>)> = None;
        for (t, s) in instance.pairs() {
            let tree = current.edges_or_empty(t, s);
            if tree.is_empty() {
                continue;
            }
            let w = instance.slot(t).sources[&s].w;
            let mut candidates = reattach_moves(instance, t, s, &tree);
            candidates.extend(reroute_moves(instance, &mut ledger, t, s, &tree));
            for cand in candidates {
                stats.enumerated += 1;
                let Some(c) = evaluate(instance, &mut ledger, t, w, &tree, &cand) else {
                    continue;
                };
                if c < cost && best.as_ref().is_none_or(|b| c < b.0) {
                    best = Some((c, t, s, cand));
                }
            }
        }
        let Some((c, t, s, cand)) = best else { break };
        let w = instance.slot(t).sources[&s].w;
        for &e in &current.edges_or_empty(t, s) {
            ledger.remove_edge(t, e, w);
        }
        for &e in &cand {
            ledger.add_edge(t, e, w);
        }
        current.set_edges(t, s, cand);
        cost = c;
        trace.push(c);
        stats.moves_applied += 1;
    }
    debug_assert_eq!(cost, total_cost(instance, &current)?);
    stats.wall_ms = elapsed_ms(start);
    Ok(SolveReport {
        status: SolveStatus::Heuristic,
        plan: current,
        cost: Some(cost),
        stats,
        trace,
    })
}

/// Cost with `old` replaced by `new` in slot `t`, or `None` if a capacity breaks.
fn evaluate(
    instance: &Instance,
    ledger: &mut LoadLedger,
    t: usize,
    w: Rational,
    old: &BTreeSet<Edge>,
    new: &BTreeSet<Edge>,
) -> Option<Rational> {
    let removed: Vec<Edge> = old.difference(new).copied().collect();
    let added: Vec<Edge> = new.difference(old).copied().collect();
    for &e in &removed {
        ledger.remove_edge(t, e, w);
    }
    for &e in &added {
        ledger.add_edge(t, e, w);
    }
    let net = instance.network();
    let ok = added.iter().all(|&(i, j)| {
        (!instance.is_server(i) || ledger.egress(i, t) <= net.egress_cap(i))
            && (!instance.tracks_ingress() || ledger.ingress(j, t) <= net.ingress_cap(j))
    });
    let cost = ok.then(|| ledger.total());
    for &e in &added {
        ledger.remove_edge(t, e, w);
    }
    for &e in &removed {
        ledger.add_edge(t, e, w);
    }
    cost
}

fn children(tree: &BTreeSet<Edge>) -> BTreeMap<NodeId, Vec<NodeId>> {
    let mut out: BTreeMap<NodeId, Vec<NodeId>> = BTreeMap::new();
    for &(i, j) in tree {
        out.entry(i).or_default().push(j);
    }
    out
}

fn subtree(kids: &BTreeMap<NodeId, Vec<NodeId>>, root: NodeId) -> BTreeSet<NodeId> {
    let mut seen = BTreeSet::from([root]);
    let mut stack = vec![root];
    while let Some(v) = stack.pop() {
        for &c in kids.get(&v).into_iter().flatten() {
            if seen.insert(c) {
                stack.push(c);
            }
        }
    }
    seen
}

/// Tidies a candidate and keeps it only if it still serves every destination.
fn finish(instance: &Instance, t: usize, s: NodeId, mut cand: BTreeSet<Edge>, out: &mut Vec<BTreeSet<Edge>>) {
    let dests = &instance.slot(t).sources[&s].dests;
    tidy(&mut cand, s, dests, |e, set| {
        set.remove(&e);
    });
    let reach = reachable(&cand, s);
    if !dests.iter().all(|d| reach.contains(d)) {
        return;
    }
    let (indeg, outdeg) = degrees(&cand);
    if indeg.values().any(|&d| d > 1) {
        return;
    }
    if instance.single_ingest() && outdeg.get(&s).copied().unwrap_or(0) != 1 {
        return;
    }
    out.push(cand);
}

fn reattach_moves(instance: &Instance, t: usize, s: NodeId, tree: &BTreeSet<Edge>) -> Vec<BTreeSet<Edge>> {
    let avail = &instance.slot(t).edges;
    let kids = children(tree);
    let nodes = reachable(tree, s);
    let mut out = Vec::new();
    for &(p, j) in tree {
        let sub = subtree(&kids, j);
        let mut base = tree.clone();
        base.remove(&(p, j));
        for &q in nodes.iter().filter(|q| !sub.contains(q) && **q != p) {
            if avail.contains(&(q, j)) {
                let mut cand = base.clone();
                cand.insert((q, j));
                finish(instance, t, s, cand, &mut out);
            }
        }
        for r in instance.network().nodes().filter(|r| !nodes.contains(r)) {
            if avail.contains(&(p, r)) && avail.contains(&(r, j)) {
                let mut cand = base.clone();
                cand.insert((p, r));
                cand.insert((r, j));
                finish(instance, t, s, cand, &mut out);
            }
        }
    }
    out
}

fn reroute_moves(
    instance: &Instance,
    ledger: &mut LoadLedger,
    t: usize,
    s: NodeId,
    tree: &BTreeSet<Edge>,
) -> Vec<BTreeSet<Edge>> {
    let k = instance.billing().discard_count();
    let w = instance.slot(t).sources[&s].w;
    let avail = &instance.slot(t).edges;
    let kids = children(tree);
    let mut out = Vec::new();
    for (&i, orphans) in &kids {
        if i == s || !instance.is_billed(i) {
            continue;
        }
        let series: Vec<Rational> = (1..=instance.p()).map(|u| ledger.egress(i, u)).collect();
        let charged = kth_largest(&series, k);
        if ledger.egress(i, t) < charged {
            continue;
        }
        let mut cand = tree.clone();
        for &c in orphans {
            cand.remove(&(i, c));
        }
        let mut attached = reachable(&cand, s);
        let mut ok = true;
        for &c in orphans {
            let sub = subtree(&kids, c);
            let pick = attached
                .iter()
                .copied()
                .filter(|&q| q != i && !sub.contains(&q) && avail.contains(&(q, c)))
                .map(|q| (ledger.edge_delta(t, (q, c), w), q))
                .min();
            let Some((_, q)) = pick else {
                ok = false;
                break;
            };
            cand.insert((q, c));
            attached.extend(sub);
        }
        if ok {
            finish(instance, t, s, cand, &mut out);
        }
    }
    out
}
