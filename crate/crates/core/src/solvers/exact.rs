use std::collections::{BTreeMap, BTreeSet};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::RwLock;
use std::time::Instant;

use super::{covering_arborescences, elapsed_ms, SolveReport, SolveStats, SolveStatus};
use crate::cost::{series_cost, BandwidthSeries};
use crate::error::{Error, Result};
use crate::model::{AllocationPlan, Edge, Instance, NodeId};
use crate::par;
use crate::rational::Rational;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExactLimits {
    /// Covering trees allowed per `(t, s)` before giving up.
    pub max_trees_per_pair: usize,
    /// Search nodes allowed across all workers.
    pub max_nodes: u64,
    /// 1 runs sequentially; anything else uses the rayon pool.
    pub workers: usize,
}

impl Default for ExactLimits {
    fn default() -> Self {
        ExactLimits {
            max_trees_per_pair: 100_000,
            max_nodes: 20_000_000,
            workers: 0,
        }
    }
}

struct Pair {
    t: usize,
    s: NodeId,
    w: Rational,
    trees: Vec<BTreeSet<Edge>>,
}

/// Minimum-cost plan by exhaustive search over covering trees.
///
/// Restricting each `(t, s)` to an out-arborescence whose leaves are
/// destinations loses nothing: any feasible plan prunes to such trees without
/// a cost increase. Trees with identical degree vectors load the network
/// identically, so only the first of each is kept. The product search cuts a
/// branch once the cost of the partial loads reaches the best complete plan.
///
/// The branches below the first pair run in parallel; the winner is the
/// lowest cost, ties to the lowest branch, so the plan does not depend on the
/// worker count.
pub fn solve_exact(instance: &Instance, limits: &ExactLimits) -> Result<SolveReport> {
    let start = Instant::now();
    let mut stats = SolveStats::default();
    let mut pairs = Vec::new();
    for (t, s) in instance.pairs() {
        let trees = covering_arborescences(instance, t, s, limits.max_trees_per_pair)?;
        stats.enumerated += trees.len() as u64;
        if trees.is_empty() {
            log::debug!("slot {t}, source {s}: no covering tree");
            stats.wall_ms = elapsed_ms(start);
            return Ok(SolveReport::infeasible(stats));
        }
        let mut seen = BTreeSet::new();
        let mut trees: Vec<_> = trees.into_iter().filter(|tree| seen.insert(signature(tree))).collect();
        trees.sort_by_key(|tree| tree.len());
        pairs.push(Pair {
            t,
            s,
            w: instance.slot(t).sources[&s].w,
            trees,
        });
    }

    let shared = Shared {
        instance,
        pairs: &pairs,
        bound: RwLock::new(None),
        nodes: AtomicU64::new(0),
        max_nodes: limits.max_nodes,
        aborted: AtomicBool::new(false),
    };
    let best = if pairs.is_empty() {
        Some((Rational::ZERO, Vec::new()))
    } else {
        let first: Vec<usize> = (0..pairs[0].trees.len()).collect();
        let results = par::map(&first, limits.workers, |&idx| shared.branch(idx));
        if shared.aborted.load(Ordering::Relaxed) {
            return Err(Error::Resource(format!(
                "exact search exceeded {} nodes ({} trees enumerated)",
                limits.max_nodes, stats.enumerated
            )));
        }
        results.into_iter().flatten().min_by(|a, b| a.0.cmp(&b.0))
    };
    stats.nodes_explored = shared.nodes.load(Ordering::Relaxed);
    stats.wall_ms = elapsed_ms(start);
    let Some((cost, choice)) = best else {
        return Ok(SolveReport::infeasible(stats));
    };
    let mut plan = AllocationPlan::empty_for(instance);
    for (pair, &idx) in pairs.iter().zip(&choice) {
        plan.set_edges(pair.t, pair.s, pair.trees[idx].clone());
    }
    Ok(SolveReport {
        status: SolveStatus::ProvenOptimal,
        plan,
        cost: Some(cost),
        stats,
        trace: Vec::new(),
    })
}

fn signature(tree: &BTreeSet<Edge>) -> BTreeMap<NodeId, (usize, usize)> {
    let mut sig: BTreeMap<NodeId, (usize, usize)> = BTreeMap::new();
    for &(i, j) in tree {
        sig.entry(i).or_default().0 += 1;
        sig.entry(j).or_default().1 += 1;
    }
    sig
}

struct Shared<'a> {
    instance: &'a Instance,
    pairs: &'a [Pair],
    /// Best cost found by any branch.
    bound: RwLock<Option<Rational>>,
    nodes: AtomicU64,
    max_nodes: u64,
    aborted: AtomicBool,
}

struct Branch {
    series: BandwidthSeries,
    choice: Vec<usize>,
    best: Option<(Rational, Vec<usize>)>,
}

impl Shared<'_> {
    fn branch(&self, first: usize) -> Option<(Rational, Vec<usize>)> {
        let mut b = Branch {
            series: BandwidthSeries::zeros(self.instance.n(), self.instance.p()),
            choice: Vec::with_capacity(self.pairs.len()),
            best: None,
        };
        self.descend(&mut b, 0, first);
        b.best
    }

    /// Whether the loads of slot `t` on the nodes of `tree` are within capacity.
    fn fits(&self, series: &BandwidthSeries, t: usize, tree: &BTreeSet<Edge>) -> bool {
        let net = self.instance.network();
        tree.iter().all(|&(i, j)| {
            (!self.instance.is_server(i) || series.egress(i)[t - 1] <= net.egress_cap(i))
                && (!self.instance.tracks_ingress() || series.ingress(j)[t - 1] <= net.ingress_cap(j))
        })
    }

    fn pruned(&self, b: &Branch, lb: Rational) -> bool {
        if matches!(&b.best, Some((c, _)) if lb >= *c) {
            return true;
        }
        // Another branch's incumbent only cuts strictly worse nodes, so every
        // branch still finds its own optimum when it ties the global one.
        matches!(*self.bound.read().unwrap(), Some(c) if lb > c)
    }

    fn descend(&self, b: &mut Branch, depth: usize, idx: usize) {
        if self.aborted.load(Ordering::Relaxed) {
            return;
        }
        if self.nodes.fetch_add(1, Ordering::Relaxed) >= self.max_nodes {
            self.aborted.store(true, Ordering::Relaxed);
            return;
        }
        let pair = &self.pairs[depth];
        let tree = &pair.trees[idx];
        for &e in tree {
            b.series.add_edge(pair.t, e, pair.w);
        }
        b.choice.push(idx);
        if self.fits(&b.series, pair.t, tree) {
            let lb = series_cost(self.instance, &b.series);
            if !self.pruned(b, lb) {
                if depth + 1 == self.pairs.len() {
                    b.best = Some((lb, b.choice.clone()));
                    let mut g = self.bound.write().unwrap();
                    if g.is_none_or(|c| lb < c) {
                        *g = Some(lb);
                    }
                } else {
                    for next in 0..self.pairs[depth + 1].trees.len() {
                        self.descend(b, depth + 1, next);
                    }
                }
            }
        }
        b.choice.pop();
        for &e in tree {
            b.series.remove_edge(pair.t, e, pair.w);
        }
    }
}
