use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};
use std::time::Instant;

use super::{elapsed_ms, SolveReport, SolveStats, SolveStatus};
use crate::cost::LoadLedger;
use crate::gen::Prng;
use crate::model::{AllocationPlan, Edge, Instance, NodeId, SourceDemand};
use crate::rational::Rational;

/// Builds one tree per `(t, s)`, slot by slot, heaviest source first.
///
/// A tree starts at its source and repeatedly attaches the cheapest path to
/// an uncovered destination, where an edge costs its marginal cost increase
/// against the loads placed so far and edges that would break a capacity are
/// unusable. Seed 0 breaks every tie by node id; any other seed breaks ties
/// by a seeded permutation of the nodes. Returns an infeasible report when a
/// destination cannot be reached.
pub fn solve_greedy(instance: &Instance, seed: u64) -> SolveReport {
    let start = Instant::now();
    let n = instance.n();
    let mut rank: Vec<usize> = (0..=n).collect();
    if seed != 0 {
        Prng::new(seed).shuffle(&mut rank[1..]);
    }
    let mut ledger = LoadLedger::new(instance);
    let mut plan = AllocationPlan::empty_for(instance);
    let mut stats = SolveStats::default();
    for slot in instance.demands() {
        let mut sources: Vec<(NodeId, &SourceDemand)> = slot.sources.iter().map(|(&s, d)| (s, d)).collect();
        sources.sort_by_key(|&(s, d)| (Reverse(d.w), rank[s]));
        let mut adj: BTreeMap<NodeId, Vec<NodeId>> = BTreeMap::new();
        for &(i, j) in &slot.edges {
            adj.entry(i).or_default().push(j);
        }
        for (s, demand) in sources {
            let Some(tree) = grow(instance, &mut ledger, &adj, &rank, slot.t, s, demand) else {
                log::debug!("greedy: slot {}, source {s} cannot be completed", slot.t);
                stats.wall_ms = elapsed_ms(start);
                return SolveReport::infeasible(stats);
            };
            stats.enumerated += 1;
            plan.set_edges(slot.t, s, tree);
        }
    }
    stats.wall_ms = elapsed_ms(start);
    SolveReport {
        status: SolveStatus::Heuristic,
        cost: Some(ledger.total()),
        plan,
        stats,
        trace: Vec::new(),
    }
}

fn grow(
    instance: &Instance,
    ledger: &mut LoadLedger,
    adj: &BTreeMap<NodeId, Vec<NodeId>>,
    rank: &[usize],
    t: usize,
    s: NodeId,
    demand: &SourceDemand,
) -> Option<BTreeSet<Edge>> {
    let n = instance.n();
    let w = demand.w;
    let mut in_tree = vec![false; n + 1];
    in_tree[s] = true;
    let mut tree = BTreeSet::new();
    let mut uncovered = demand.dests.clone();
    while !uncovered.is_empty() {
        let source_closed = instance.single_ingest() && tree.iter().any(|e: &Edge| e.0 == s);
        let mut dist: Vec<Option<Rational>> = vec![None; n + 1];
        let mut pred: Vec<NodeId> = vec![0; n + 1];
        let mut done = vec![false; n + 1];
        let mut heap = BinaryHeap::new();
        for v in (1..=n).filter(|&v| in_tree[v]) {
            dist[v] = Some(Rational::ZERO);
            heap.push(Reverse((Rational::ZERO, rank[v], v)));
        }
        let mut target = None;
        while let Some(Reverse((dv, _, v))) = heap.pop() {
            if done[v] {
                continue;
            }
            done[v] = true;
            if !in_tree[v] && uncovered.contains(&v) {
                target = Some(v);
                break;
            }
            if v == s && source_closed {
                continue;
            }
            for &j in adj.get(&v).into_iter().flatten() {
                if in_tree[j] || done[j] || !ledger.fits(t, (v, j), w) {
                    continue;
                }
                let nd = dv + ledger.edge_delta(t, (v, j), w);
                if dist[j].is_none_or(|d| nd < d) {
                    dist[j] = Some(nd);
                    pred[j] = v;
                    heap.push(Reverse((nd, rank[j], j)));
                }
            }
        }
        let mut v = target?;
        while !in_tree[v] {
            let u = pred[v];
            tree.insert((u, v));
            ledger.add_edge(t, (u, v), w);
            in_tree[v] = true;
            uncovered.remove(&v);
            v = u;
        }
    }
    Some(tree)
}
