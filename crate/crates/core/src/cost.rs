//! Percentile billing and the total-cost objective.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::model::{AllocationPlan, BillingConfig, Edge, Instance, NodeId};
use crate::rational::Rational;

/// Charged value of a series: its maximum once the `k` largest samples are
/// discarded, with `k = floor((1 - q) p)`.
pub fn q_percentile(series: &[Rational], billing: &BillingConfig) -> Result<Rational> {
    if series.len() != billing.p() {
        return Err(Error::LengthMismatch {
            expected: billing.p(),
            actual: series.len(),
        });
    }
    Ok(kth_largest(series, billing.discard_count()))
}

/// `k`-th largest entry, 0-indexed. Panics if `k >= series.len()`.
pub(crate) fn kth_largest(series: &[Rational], k: usize) -> Rational {
    let mut buf = series.to_vec();
    let (_, v, _) = buf.select_nth_unstable_by(k, |a, b| b.cmp(a));
    *v
}

/// Per-node egress and ingress bandwidth in every slot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BandwidthSeries {
    egress: Vec<Vec<Rational>>,
    ingress: Vec<Vec<Rational>>,
}

impl BandwidthSeries {
    pub fn zeros(n: usize, p: usize) -> Self {
        BandwidthSeries {
            egress: vec![vec![Rational::ZERO; p]; n],
            ingress: vec![vec![Rational::ZERO; p]; n],
        }
    }

    pub fn egress(&self, i: NodeId) -> &[Rational] {
        &self.egress[i - 1]
    }

    pub fn ingress(&self, i: NodeId) -> &[Rational] {
        &self.ingress[i - 1]
    }

    pub fn node_count(&self) -> usize {
        self.egress.len()
    }

    pub fn add_edge(&mut self, t: usize, (i, j): Edge, w: Rational) {
        self.egress[i - 1][t - 1] += w;
        self.ingress[j - 1][t - 1] += w;
    }

    pub fn remove_edge(&mut self, t: usize, (i, j): Edge, w: Rational) {
        self.egress[i - 1][t - 1] -= w;
        self.ingress[j - 1][t - 1] -= w;
    }
}

impl std::ops::Add for &BandwidthSeries {
    type Output = BandwidthSeries;

    fn add(self, rhs: &BandwidthSeries) -> BandwidthSeries {
        let zip = |a: &Vec<Vec<Rational>>, b: &Vec<Vec<Rational>>| {
            a.iter()
                .zip(b)
                .map(|(x, y)| x.iter().zip(y).map(|(p, q)| *p + *q).collect())
                .collect()
        };
        BandwidthSeries {
            egress: zip(&self.egress, &rhs.egress),
            ingress: zip(&self.ingress, &rhs.ingress),
        }
    }
}

pub fn bandwidth_series(instance: &Instance, plan: &AllocationPlan) -> Result<BandwidthSeries> {
    plan.check_shape(instance)?;
    let mut series = BandwidthSeries::zeros(instance.n(), instance.p());
    for (t, s, edges) in plan.iter() {
        let w = instance.slot(t).sources[&s].w;
        for &e in edges {
            series.add_edge(t, e, w);
        }
    }
    Ok(series)
}

/// Charge of a node given its two percentile values. Generic instances bill
/// the larger of egress and ingress; scenario instances bill server egress
/// only.
pub(crate) fn node_charge(instance: &Instance, i: NodeId, egress_q: Rational, ingress_q: Rational) -> Rational {
    if !instance.is_billed(i) {
        return Rational::ZERO;
    }
    let peak = if instance.tracks_ingress() {
        egress_q.max(ingress_q)
    } else {
        egress_q
    };
    instance.network().price(i) * peak
}

pub fn series_cost(instance: &Instance, series: &BandwidthSeries) -> Rational {
    let k = instance.billing().discard_count();
    instance
        .network()
        .nodes()
        .map(|i| {
            node_charge(
                instance,
                i,
                kth_largest(series.egress(i), k),
                kth_largest(series.ingress(i), k),
            )
        })
        .sum()
}

pub fn total_cost(instance: &Instance, plan: &AllocationPlan) -> Result<Rational> {
    Ok(series_cost(instance, &bandwidth_series(instance, plan)?))
}

/// One node's series with an ordered multiset of its values, so the charged
/// value updates without re-sorting.
#[derive(Debug, Clone)]
struct TrackedSeries {
    values: Vec<Rational>,
    sorted: BTreeMap<Rational, usize>,
}

impl TrackedSeries {
    fn zeros(p: usize) -> Self {
        TrackedSeries {
            values: vec![Rational::ZERO; p],
            sorted: BTreeMap::from([(Rational::ZERO, p)]),
        }
    }

    fn add(&mut self, t: usize, delta: Rational) {
        let old = self.values[t - 1];
        let new = old + delta;
        match self.sorted.get_mut(&old) {
            Some(c) if *c > 1 => *c -= 1,
            _ => {
                self.sorted.remove(&old);
            }
        }
        *self.sorted.entry(new).or_insert(0) += 1;
        self.values[t - 1] = new;
    }

    fn kth_largest(&self, k: usize) -> Rational {
        let mut seen = 0;
        for (&v, &c) in self.sorted.iter().rev() {
            seen += c;
            if seen > k {
                return v;
            }
        }
        Rational::ZERO
    }
}

/// Incrementally maintained loads and cost for one instance.
#[derive(Debug, Clone)]
pub struct LoadLedger<'a> {
    instance: &'a Instance,
    egress: Vec<TrackedSeries>,
    ingress: Vec<TrackedSeries>,
}

impl<'a> LoadLedger<'a> {
    pub fn new(instance: &'a Instance) -> Self {
        let (n, p) = (instance.n(), instance.p());
        LoadLedger {
            instance,
            egress: vec![TrackedSeries::zeros(p); n],
            ingress: vec![TrackedSeries::zeros(p); n],
        }
    }

    /// Ledger holding the loads of `plan`; the plan must be shape-valid.
    pub fn from_plan(instance: &'a Instance, plan: &AllocationPlan) -> Result<Self> {
        plan.check_shape(instance)?;
        let mut ledger = Self::new(instance);
        for (t, s, edges) in plan.iter() {
            let w = instance.slot(t).sources[&s].w;
            for &e in edges {
                ledger.add_edge(t, e, w);
            }
        }
        Ok(ledger)
    }

    pub fn add_edge(&mut self, t: usize, (i, j): Edge, w: Rational) {
        self.egress[i - 1].add(t, w);
        self.ingress[j - 1].add(t, w);
    }

    pub fn remove_edge(&mut self, t: usize, (i, j): Edge, w: Rational) {
        self.egress[i - 1].add(t, -w);
        self.ingress[j - 1].add(t, -w);
    }

    pub fn egress(&self, i: NodeId, t: usize) -> Rational {
        self.egress[i - 1].values[t - 1]
    }

    pub fn ingress(&self, i: NodeId, t: usize) -> Rational {
        self.ingress[i - 1].values[t - 1]
    }

    pub fn node_cost(&self, i: NodeId) -> Rational {
        let k = self.instance.billing().discard_count();
        node_charge(
            self.instance,
            i,
            self.egress[i - 1].kth_largest(k),
            self.ingress[i - 1].kth_largest(k),
        )
    }

    pub fn total(&self) -> Rational {
        self.instance.network().nodes().map(|i| self.node_cost(i)).sum()
    }

    /// Cost increase from adding `edge` with weight `w` in slot `t`.
    pub fn edge_delta(&mut self, t: usize, edge: Edge, w: Rational) -> Rational {
        let (i, j) = edge;
        let before = self.node_cost(i) + self.node_cost(j);
        self.add_edge(t, edge, w);
        let after = self.node_cost(i) + self.node_cost(j);
        self.remove_edge(t, edge, w);
        after - before
    }

    /// Whether adding `edge` in slot `t` keeps both endpoints within capacity.
    pub fn fits(&self, t: usize, (i, j): Edge, w: Rational) -> bool {
        let net = self.instance.network();
        if self.instance.is_server(i) && self.egress(i, t) + w > net.egress_cap(i) {
            return false;
        }
        if self.instance.tracks_ingress() && self.ingress(j, t) + w > net.ingress_cap(j) {
            return false;
        }
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Network, SlotDemand};

    fn r(v: i128) -> Rational {
        Rational::from_int(v)
    }

    fn billing(p: usize) -> BillingConfig {
        BillingConfig::percentile95(p).unwrap()
    }

    #[test]
    fn percentile_examples() {
        assert_eq!(q_percentile(&[r(7)], &billing(1)).unwrap(), r(7));
        let ramp: Vec<Rational> = (1..=20).map(r).collect();
        assert_eq!(q_percentile(&ramp, &billing(20)).unwrap(), r(19));
        assert_eq!(q_percentile(&vec![r(5); 40], &billing(40)).unwrap(), r(5));
        assert_eq!(q_percentile(&vec![r(0); 40], &billing(40)).unwrap(), r(0));
        // Ties: duplicates of the largest value are discarded first.
        let ties = [r(9), r(9), r(1)];
        assert_eq!(q_percentile(&ties, &BillingConfig::new(3, Rational::new(2, 3)).unwrap()).unwrap(), r(9));
    }

    #[test]
    fn percentile_length_mismatch_names_both_lengths() {
        let err = q_percentile(&[r(1), r(2)], &billing(3)).unwrap_err();
        match err {
            Error::LengthMismatch { expected, actual } => assert_eq!((expected, actual), (3, 2)),
            other => panic!("unexpected {other:?}"),
        }
    }

    fn triangle() -> Instance {
        let net = Network::complete(3, r(1), r(10)).unwrap();
        let edges = net.edges().clone();
        let slot = SlotDemand::new(1, edges).with_source(1, r(1), [2, 3]);
        Instance::new(net, billing(1), vec![slot]).unwrap()
    }

    #[test]
    fn series_and_cost_examples() {
        let inst = triangle();
        let mut chain = AllocationPlan::new();
        chain.insert(1, 1, (1, 2));
        chain.insert(1, 1, (2, 3));
        let mut star = AllocationPlan::new();
        star.insert(1, 1, (1, 2));
        star.insert(1, 1, (1, 3));
        assert_eq!(total_cost(&inst, &chain).unwrap(), r(3));
        assert_eq!(total_cost(&inst, &star).unwrap(), r(4));
        assert_eq!(total_cost(&inst, &AllocationPlan::new()).unwrap(), r(0));

        let series = bandwidth_series(&inst, &star).unwrap();
        assert_eq!(series.egress(1), &[r(2)]);
        assert_eq!(series.ingress(3), &[r(1)]);
        assert_eq!(series.egress(2), &[r(0)]);
    }

    #[test]
    fn two_sources_sum_on_shared_edge() {
        let net = Network::complete(2, r(1), r(100)).unwrap();
        let mut slot = SlotDemand::new(1, [(1, 2), (2, 1)]).with_source(1, r(2), [2]);
        slot = slot.with_source(2, r(5), [1]);
        let inst = Instance::new(net, billing(1), vec![slot]).unwrap();
        let mut plan = AllocationPlan::new();
        plan.insert(1, 1, (1, 2));
        plan.insert(1, 2, (1, 2));
        let series = bandwidth_series(&inst, &plan).unwrap();
        assert_eq!(series.egress(1), &[r(7)]);
    }

    #[test]
    fn ledger_tracks_direct_evaluation() {
        let inst = triangle();
        let mut ledger = LoadLedger::new(&inst);
        assert_eq!(ledger.edge_delta(1, (1, 2), r(1)), r(2));
        ledger.add_edge(1, (1, 2), r(1));
        // Node 2 already pays for 1 Mbps of ingress, so forwarding is free for it.
        assert_eq!(ledger.edge_delta(1, (2, 3), r(1)), r(1));
        assert_eq!(ledger.edge_delta(1, (1, 3), r(1)), r(2));
        ledger.add_edge(1, (2, 3), r(1));
        assert_eq!(ledger.total(), r(3));
        ledger.remove_edge(1, (2, 3), r(1));
        assert_eq!(ledger.total(), r(2));
    }
}
