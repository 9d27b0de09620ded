mod common;

use common::{has_cycle, padded_plans, plan_of, triangle};
use nba_core::feasibility::{is_acyclic_undirected, is_pruned, TreeDefect};
use nba_core::{check_feasible, is_directed_tree, prune_plan, total_cost, AllocationPlan, Error, Instance, ViolationKind};

fn kinds(inst: &Instance, plan: &AllocationPlan) -> Vec<ViolationKind> {
    check_feasible(inst, plan).into_iter().map(|v| v.kind).collect()
}

#[test]
fn triangle_violations() {
    let inst = triangle();
    assert!(kinds(&inst, &plan_of(&[(1, 1, &[(1, 2), (2, 3)])])).is_empty());
    assert_eq!(kinds(&inst, &plan_of(&[(1, 1, &[(1, 2)])])), [ViolationKind::DestinationUncovered]);
    assert!(kinds(&inst, &AllocationPlan::new()).contains(&ViolationKind::SourceUncovered));
}

#[test]
fn tree_defects() {
    let cyc = plan_of(&[(1, 1, &[(1, 2), (2, 3), (3, 2)])]);
    let check = is_directed_tree(&cyc, 1, 1);
    assert!(!check.is_tree);
    assert!(matches!(check.defect, Some(TreeDefect::Cycle { .. } | TreeDefect::MultipleParents { .. })));
    let back = plan_of(&[(1, 1, &[(1, 2), (2, 1)])]);
    assert_eq!(is_directed_tree(&back, 1, 1).defect, Some(TreeDefect::Cycle { nodes: vec![1, 2] }));
    let into_root = plan_of(&[(1, 1, &[(1, 2), (3, 1)])]);
    assert!(!is_directed_tree(&into_root, 1, 1).is_tree);
    let island = plan_of(&[(1, 1, &[(1, 2), (3, 2)])]);
    assert!(!is_directed_tree(&island, 1, 1).is_tree);
    assert!(is_directed_tree(&AllocationPlan::new(), 1, 1).is_tree);
    assert!(is_acyclic_undirected(&[(1, 2), (2, 3)].into_iter().collect()));
    assert!(!is_acyclic_undirected(&[(1, 2), (2, 3), (1, 3)].into_iter().collect()));
}

#[test]
fn prune_rejects_infeasible_plans() {
    let inst = triangle();
    let err = prune_plan(&inst, &plan_of(&[(1, 1, &[(1, 2)])])).unwrap_err();
    assert!(matches!(err, Error::Precondition { .. }));
}

#[test]
fn prune_drops_the_redundant_parent() {
    let inst = triangle();
    let plan = plan_of(&[(1, 1, &[(1, 2), (1, 3), (2, 3), (3, 1)])]);
    let pruned = prune_plan(&inst, &plan).unwrap();
    assert!(is_pruned(&pruned));
    assert!(is_directed_tree(&pruned, 1, 1).is_tree);
    assert!(total_cost(&inst, &pruned).unwrap() <= total_cost(&inst, &plan).unwrap());
}

#[test]
fn pruning_random_feasible_plans() {
    for (inst, plan) in padded_plans(300, 11) {
        let pruned = prune_plan(&inst, &plan).unwrap();
        assert!(check_feasible(&inst, &pruned).is_empty());
        assert!(is_pruned(&pruned));
        assert!(total_cost(&inst, &pruned).unwrap() <= total_cost(&inst, &plan).unwrap());
        for (t, s, edges) in pruned.iter() {
            assert!(is_directed_tree(&pruned, t, s).is_tree);
            assert!(!has_cycle(edges));
            assert!(edges.is_subset(plan.edges(t, s).unwrap()));
        }
        assert_eq!(prune_plan(&inst, &pruned).unwrap(), pruned);
    }
}
