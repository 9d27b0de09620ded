mod common;

use common::{oracle_cost, plan_of, r, sort_percentile, triangle};
use nba_core::io::{instance_from_json, instance_to_json, plan_from_json, plan_to_json};
use nba_core::model::{BillingConfig, Network, SlotDemand};
use nba_core::{bandwidth_series, q_percentile, total_cost, AllocationPlan, Instance, Rational};
use proptest::prelude::*;

fn series_strategy() -> impl Strategy<Value = (Vec<Rational>, Rational)> {
    (1usize..60, prop::sample::select(vec![(95, 100), (1, 2), (9, 10), (1, 1), (2, 3)])).prop_flat_map(|(p, (a, b))| {
        (prop::collection::vec((0i128..50, 1i128..4), p), Just(Rational::new(a, b)))
            .prop_map(|(v, q)| (v.into_iter().map(|(n, d)| Rational::new(n, d)).collect(), q))
    })
}

proptest! {
    #[test]
    fn percentile_matches_sort_oracle((series, q) in series_strategy()) {
        let billing = BillingConfig::new(series.len(), q).unwrap();
        prop_assert_eq!(q_percentile(&series, &billing).unwrap(), sort_percentile(&series, q));
    }

    #[test]
    fn percentile_is_monotone((series, q) in series_strategy(), bump in 0usize..60, by in 1i128..10) {
        let billing = BillingConfig::new(series.len(), q).unwrap();
        let mut raised = series.clone();
        let idx = bump % series.len();
        raised[idx] += r(by);
        prop_assert!(q_percentile(&raised, &billing).unwrap() >= q_percentile(&series, &billing).unwrap());
    }
}

#[test]
fn seven_twenty_slots_discard_thirty_six() {
    assert_eq!(BillingConfig::percentile95(720).unwrap().discard_count(), 36);
    let series: Vec<Rational> = (1..=720).map(r).collect();
    let billing = BillingConfig::percentile95(720).unwrap();
    assert_eq!(q_percentile(&series, &billing).unwrap(), r(684));
}

#[test]
fn triangle_chain_and_star() {
    let inst = triangle();
    let chain = plan_of(&[(1, 1, &[(1, 2), (2, 3)])]);
    let star = plan_of(&[(1, 1, &[(1, 2), (1, 3)])]);
    assert_eq!(total_cost(&inst, &chain).unwrap(), r(3));
    assert_eq!(total_cost(&inst, &star).unwrap(), r(4));
    assert_eq!(total_cost(&inst, &AllocationPlan::new()).unwrap(), r(0));
}

#[test]
fn two_sources_add_on_a_shared_edge() {
    let net = Network::new(vec![r(1); 2], vec![r(20); 2], vec![r(20); 2], [(1, 2)]).unwrap();
    let slot = SlotDemand::new(1, [(1, 2)]).with_source(1, r(2), [2]);
    let mut slot2 = slot.clone();
    slot2.sources.clear();
    // Source 2 reuses edge (1, 2) as a relay path of its own content.
    let slot = slot.with_source(2, r(5), []);
    let inst = Instance::new(net, BillingConfig::percentile95(1).unwrap(), vec![slot]).unwrap();
    let plan = plan_of(&[(1, 1, &[(1, 2)]), (1, 2, &[(1, 2)])]);
    let series = bandwidth_series(&inst, &plan).unwrap();
    assert_eq!(series.egress(1), &[r(7)]);
    assert_eq!(series.ingress(2), &[r(7)]);
    assert!(slot2.sources.is_empty());
}

#[test]
fn cost_properties_on_generated_plans() {
    for inst in common::tiny_instances(60, 100) {
        let Some((_, plan)) = common::brute_force(&inst) else { continue };
        let cost = total_cost(&inst, &plan).unwrap();
        assert_eq!(cost, oracle_cost(&inst, &plan));
        // Scaling prices scales cost.
        let lambda = Rational::new(7, 3);
        assert_eq!(total_cost(&inst.scale_prices(lambda).unwrap(), &plan).unwrap(), cost * lambda);
        // Deleting any edge never increases cost.
        for (t, s, edges) in plan.iter() {
            for &e in edges {
                let mut smaller = plan.clone();
                smaller.remove(t, s, e);
                assert!(total_cost(&inst, &smaller).unwrap() <= cost);
            }
        }
        // Series are additive over sources.
        let mut parts = Vec::new();
        for (t, s, edges) in plan.iter() {
            let mut one = AllocationPlan::new();
            one.set_edges(t, s, edges.clone());
            parts.push(bandwidth_series(&inst, &one).unwrap());
        }
        if let Some(first) = parts.first().cloned() {
            let sum = parts[1..].iter().fold(first, |acc, x| &acc + x);
            assert_eq!(sum, bandwidth_series(&inst, &plan).unwrap());
        }
    }
}

#[test]
fn json_round_trips_are_byte_stable() {
    for inst in common::tiny_instances(12, 7) {
        let text = instance_to_json(&inst);
        let back = instance_from_json(&text).unwrap();
        assert_eq!(back, inst);
        assert_eq!(instance_to_json(&back), text);
    }
    let plan = plan_of(&[(1, 1, &[(1, 2), (2, 3)])]);
    let text = plan_to_json(&plan);
    assert_eq!(plan_to_json(&plan_from_json(&text).unwrap()), text);
}

#[test]
fn foreign_plan_entries_are_shape_errors() {
    let inst = triangle();
    let plan = plan_of(&[(2, 1, &[(1, 2)])]);
    assert!(matches!(total_cost(&inst, &plan), Err(nba_core::Error::PlanShape(_))));
}
