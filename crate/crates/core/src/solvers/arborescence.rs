use std::collections::{BTreeSet, VecDeque};

use crate::error::{Error, Result};
use crate::model::{Edge, Instance, NodeId};

/// All out-arborescences rooted at `s` inside slot `t`'s edge set that
/// contain every destination of `s` and whose leaves are all destinations.
///
/// Trees that overload a node on their own are skipped, as is any tree with
/// more than one root edge under single-ingest rules. A source without
/// destinations yields only the empty tree. Fails with a resource error once
/// more than `limit` trees have been produced.
///
/// Each rooted subtree is produced exactly once: the search branches on the
/// smallest frontier edge, either taking it or excluding it for good.
pub fn covering_arborescences(
    instance: &Instance,
    t: usize,
    s: NodeId,
    limit: usize,
) -> Result<Vec<BTreeSet<Edge>>> {
    let slot = instance.slot(t);
    let demand = &slot.sources[&s];
    if demand.dests.is_empty() {
        return Ok(vec![BTreeSet::new()]);
    }
    let n = instance.n();
    let mut search = Search {
        instance,
        t,
        s,
        w: demand.w,
        dests: &demand.dests,
        edges: slot.edges.iter().copied().filter(|&(_, j)| j != s).collect(),
        in_tree: vec![false; n + 1],
        outdeg: vec![0; n + 1],
        indeg: vec![0; n + 1],
        excluded: BTreeSet::new(),
        chosen: Vec::new(),
        out: Vec::new(),
        limit,
    };
    search.in_tree[s] = true;
    search.run()?;
    Ok(search.out)
}

struct Search<'a> {
    instance: &'a Instance,
    t: usize,
    s: NodeId,
    w: crate::rational::Rational,
    dests: &'a BTreeSet<NodeId>,
    edges: Vec<Edge>,
    in_tree: Vec<bool>,
    outdeg: Vec<usize>,
    indeg: Vec<usize>,
    excluded: BTreeSet<Edge>,
    chosen: Vec<Edge>,
    out: Vec<BTreeSet<Edge>>,
    limit: usize,
}

impl Search<'_> {
    fn usable(&self, &(i, j): &Edge) -> bool {
        if self.excluded.contains(&(i, j)) {
            return false;
        }
        !(i == self.s && self.instance.single_ingest() && self.outdeg[i] >= 1)
    }

    fn frontier(&self) -> Option<Edge> {
        self.edges
            .iter()
            .copied()
            .find(|e| self.in_tree[e.0] && !self.in_tree[e.1] && self.usable(e))
    }

    /// Every destination outside the tree can still be reached.
    fn coverable(&self) -> bool {
        let mut seen = self.in_tree.clone();
        let mut queue: VecDeque<NodeId> = (1..seen.len()).filter(|&v| seen[v]).collect();
        while let Some(v) = queue.pop_front() {
            for e in self.edges.iter().filter(|e| e.0 == v) {
                if !seen[e.1] && self.usable(e) {
                    seen[e.1] = true;
                    queue.push_back(e.1);
                }
            }
        }
        self.dests.iter().all(|&d| seen[d])
    }

    fn fits(&self, (i, j): Edge) -> bool {
        let net = self.instance.network();
        let w = self.w;
        if self.instance.is_server(i) && w * crate::rational::Rational::from(self.outdeg[i] + 1) > net.egress_cap(i) {
            return false;
        }
        !(self.instance.tracks_ingress() && w > net.ingress_cap(j))
    }

    fn run(&mut self) -> Result<()> {
        if !self.coverable() {
            return Ok(());
        }
        let Some(e) = self.frontier() else {
            self.emit()?;
            return Ok(());
        };
        if self.fits(e) {
            self.chosen.push(e);
            self.in_tree[e.1] = true;
            self.outdeg[e.0] += 1;
            self.indeg[e.1] += 1;
            self.run()?;
            self.indeg[e.1] -= 1;
            self.outdeg[e.0] -= 1;
            self.in_tree[e.1] = false;
            self.chosen.pop();
        }
        self.excluded.insert(e);
        self.run()?;
        self.excluded.remove(&e);
        Ok(())
    }

    fn emit(&mut self) -> Result<()> {
        let leaves_ok = (1..self.in_tree.len())
            .filter(|&v| self.in_tree[v] && v != self.s && self.outdeg[v] == 0)
            .all(|v| self.dests.contains(&v));
        if !leaves_ok || !self.dests.iter().all(|&d| self.in_tree[d]) {
            return Ok(());
        }
        if self.out.len() >= self.limit {
            return Err(Error::Resource(format!(
                "slot {}, source {}: more than {} covering trees",
                self.t, self.s, self.limit
            )));
        }
        self.out.push(self.chosen.iter().copied().collect());
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::feasibility::tree_defect;
    use crate::model::{BillingConfig, Network, SlotDemand};
    use crate::rational::Rational;

    fn inst(n: usize, dests: &[NodeId]) -> Instance {
        let net = Network::complete(n, Rational::ONE, Rational::from_int(100)).unwrap();
        let edges = net.edges().clone();
        let slot = SlotDemand::new(1, edges).with_source(1, Rational::ONE, dests.iter().copied());
        Instance::new(net, BillingConfig::percentile95(1).unwrap(), vec![slot]).unwrap()
    }

    #[test]
    fn spanning_count_matches_cayley() {
        // Spanning arborescences of K_n rooted at a fixed node: n^(n-2).
        for n in 2..=5 {
            let dests: Vec<NodeId> = (2..=n).collect();
            let trees = covering_arborescences(&inst(n, &dests), 1, 1, 1_000_000).unwrap();
            assert_eq!(trees.len(), n.pow(n as u32 - 2));
            for t in &trees {
                assert_eq!(tree_defect(t, 1), None);
            }
        }
    }

    #[test]
    fn triangle_trees() {
        let trees = covering_arborescences(&inst(3, &[2, 3]), 1, 1, 100).unwrap();
        let expected: Vec<BTreeSet<Edge>> = vec![
            [(1, 2), (1, 3)].into_iter().collect(),
            [(1, 2), (2, 3)].into_iter().collect(),
            [(1, 3), (3, 2)].into_iter().collect(),
        ];
        let mut got = trees.clone();
        got.sort();
        let mut exp = expected.clone();
        exp.sort();
        assert_eq!(got, exp);
    }

    #[test]
    fn steiner_relays_allowed_but_not_as_leaves() {
        // 1 -> 3 directly, or through relay 2 or 4, or through both.
        let trees = covering_arborescences(&inst(4, &[3]), 1, 1, 100).unwrap();
        assert_eq!(trees.len(), 5);
        assert!(trees.iter().all(|t| tree_defect(t, 1).is_none()));
    }

    #[test]
    fn limit_and_unreachable() {
        assert!(matches!(
            covering_arborescences(&inst(5, &[2, 3, 4, 5]), 1, 1, 10),
            Err(Error::Resource(_))
        ));
        let net = Network::complete(3, Rational::ONE, Rational::ONE).unwrap();
        let slot = SlotDemand::new(1, [(1, 2)]).with_source(1, Rational::ONE, [3]);
        let i = Instance::new(net, BillingConfig::percentile95(1).unwrap(), vec![slot]).unwrap();
        assert!(covering_arborescences(&i, 1, 1, 10).unwrap().is_empty());
        assert_eq!(covering_arborescences(&inst(3, &[]), 1, 1, 10).unwrap(), vec![BTreeSet::new()]);
    }
}
