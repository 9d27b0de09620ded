use nba_core::gen::{generate, generate_instance, DemandPattern, GenSpec, ScenarioKind};
use nba_core::solvers::{solve_exact, ExactLimits, SolveStatus};
use nba_core::{Error, Rational};

#[test]
fn same_seed_same_bytes() {
    for scenario in [ScenarioKind::Generic, ScenarioKind::Cdn, ScenarioKind::Lvdn, ScenarioKind::Rtcn, ScenarioKind::Cwan] {
        let spec = GenSpec { scenario, ..GenSpec::generic(42, 4, 3) };
        assert_eq!(generate(&spec).unwrap().to_json(), generate(&spec).unwrap().to_json());
    }
    let a = generate_instance(&GenSpec::generic(1, 5, 3)).unwrap();
    let b = generate_instance(&GenSpec::generic(2, 5, 3)).unwrap();
    assert_ne!(a, b);
}

#[test]
fn full_density_is_complete() {
    let inst = generate_instance(&GenSpec::generic(9, 5, 2)).unwrap();
    assert_eq!(inst.network().edges().len(), 20);
}

#[test]
fn bad_specs_are_rejected() {
    let bad = [
        GenSpec { n: 0, ..GenSpec::generic(0, 3, 2) },
        GenSpec { dests: [1, 3], ..GenSpec::generic(0, 3, 2) },
        GenSpec { weight: [4, 2], ..GenSpec::generic(0, 3, 2) },
        GenSpec { density: Rational::new(3, 2), ..GenSpec::generic(0, 3, 2) },
        GenSpec {
            pattern: DemandPattern::Bursty { spike_count: 5, spike_multiplier: Rational::from_int(10) },
            ..GenSpec::generic(0, 3, 2)
        },
    ];
    for spec in bad {
        assert!(matches!(generate(&spec), Err(Error::Spec(_))), "{spec:?}");
    }
    assert!(GenSpec::from_json(r#"{"seed": 1, "n": 3, "p": 2, "bogus": 1}"#).is_err());
}

#[test]
fn feasible_mode_is_solvable() {
    for seed in 0..20 {
        let spec = GenSpec { density: Rational::new(1, 3), ..GenSpec::generic(seed, 4, 2) };
        let report = solve_exact(&generate_instance(&spec).unwrap(), &ExactLimits::default()).unwrap();
        assert_eq!(report.status, SolveStatus::ProvenOptimal, "seed {seed}");
    }
}

fn bursty(seed: u64, n: usize, spikes: Option<usize>, weight: [u64; 2]) -> GenSpec {
    GenSpec {
        sources: [1, 1],
        dests: [1, 1],
        weight,
        capacity: [1000, 1000],
        feasible: false,
        pattern: spikes.map_or(DemandPattern::Uniform, |spike_count| DemandPattern::Bursty {
            spike_count,
            spike_multiplier: Rational::from_int(10),
        }),
        ..GenSpec::generic(seed, n, 20)
    }
}

fn best(spec: &GenSpec) -> Rational {
    solve_exact(&generate_instance(spec).unwrap(), &ExactLimits::default()).unwrap().cost.unwrap()
}

// With one possible route and a constant weight every spike lands on a
// slot already at the node's peak, so one spike hides in the free slot.
#[test]
fn spikes_within_the_free_slots_cost_nothing_on_constant_demand() {
    for seed in 0..10 {
        assert_eq!(best(&bursty(seed, 2, Some(1), [3, 3])), best(&bursty(seed, 2, None, [3, 3])));
    }
}

// In general a spike can push a lower sample above the old percentile, so
// only monotonicity holds.
#[test]
fn spikes_never_lower_the_optimum() {
    for seed in 0..6 {
        assert!(best(&bursty(seed, 3, Some(1), [1, 5])) >= best(&bursty(seed, 3, None, [1, 5])));
    }
}
