//! Cross-cutting invariants checked on randomized instances: description
//! round-trips, diagnosis against a brute-force oracle, partition validity
//! and determinism of the random generator.

mod common;

use std::collections::{BTreeMap, BTreeSet};

use common::{brute_force_minimal, random_instance};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use faultdiag::diagnose;
use faultdiag::engine::{self, HealthAssignment};
use faultdiag::generate::generate_random_eps;
use faultdiag::model::{ComponentId, EnvAssumptions, Observation};
use faultdiag::modular;
use faultdiag::place;
use faultdiag::sdl::{self, fixtures};

const FIXTURES: [&str; 5] = [
    fixtures::HALF_ADDER,
    fixtures::FULL_ADDER,
    fixtures::ADDER3,
    fixtures::EPS_SMALL,
    fixtures::EPS_LARGE,
];

#[test]
fn descriptions_round_trip_through_the_emitter() {
    for src in FIXTURES {
        let desc = sdl::parse_system(src).unwrap();
        let emitted = sdl::emit_system(&desc).unwrap();
        let reparsed = sdl::parse_system(&emitted).unwrap();
        assert_eq!(desc, reparsed);
    }
}

#[test]
fn basic_diagnose_matches_brute_force_on_100_random_systems() {
    for seed in 0..100u64 {
        let inst = random_instance(seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xDEAD);
        // Observe the readings some random fault scenario actually produces.
        let comps: Vec<ComponentId> = inst.system.components.keys().cloned().collect();
        let faulty: BTreeSet<ComponentId> = (0..rng.gen_range(0..=2usize))
            .map(|_| comps[rng.gen_range(0..comps.len())].clone())
            .collect();
        let health = HealthAssignment::from_faulty(&inst.system, &faulty);
        let val = engine::simulate(
            &inst.system,
            &inst.ground_rules,
            &health,
            &inst.config,
            &inst.inputs,
        )
        .unwrap();
        let readings: BTreeMap<ComponentId, String> = comps
            .iter()
            .filter(|_| rng.gen_bool(0.6))
            .filter_map(|c| {
                val.component_value(&inst.system, c).map(|v| (c.clone(), v.to_string()))
            })
            .collect();
        let obs = Observation { readings };

        let env = EnvAssumptions::default();
        let got = diagnose::basic_diagnose(
            &inst.system,
            &inst.ground_rules,
            &env,
            &inst.config,
            &inst.inputs,
            &obs,
            inst.system.components.len(),
        )
        .unwrap();
        let (want_card, want_sets) = brute_force_minimal(
            &inst.system,
            &inst.ground_rules,
            &env,
            &inst.config,
            &inst.inputs,
            &obs,
        );
        assert_eq!(got.cardinality, want_card, "seed {seed}");
        let got_sets: BTreeSet<BTreeSet<ComponentId>> =
            got.diagnoses.into_iter().map(|d| d.delta).collect();
        let want_sets: BTreeSet<BTreeSet<ComponentId>> = want_sets.into_iter().collect();
        assert_eq!(got_sets, want_sets, "seed {seed}");
    }
}

#[test]
fn synthesized_schedules_identify_every_injected_single_fault() {
    let env = EnvAssumptions::default();
    for seed in 0..25u64 {
        let inst = random_instance(seed);
        let result = place::greedy_place_sensors(
            &inst.system,
            &inst.ground_rules,
            &env,
            &[],
            inst.system.components.len(),
            16,
            &inst.inputs,
            None,
        )
        .unwrap()
        .expect("a fully sensed system is separable");
        assert!(result.certified);
        for x in diagnose::fault_candidates(&inst.system, &env) {
            let scenario = faultdiag::model::FaultScenario::single(x.clone());
            let observations: Vec<Observation> = result
                .configurations
                .iter()
                .map(|c| {
                    diagnose::expected_observation(
                        &inst.system,
                        &inst.ground_rules,
                        &scenario,
                        c,
                        &inst.inputs,
                        &result.sensors,
                    )
                    .unwrap()
                })
                .collect();
            let per_config_inputs = vec![inst.inputs.clone(); result.configurations.len()];
            let diag = diagnose::active_diagnose(
                &inst.system,
                &inst.ground_rules,
                &env,
                &result.configurations,
                &per_config_inputs,
                &observations,
            )
            .unwrap();
            assert_eq!(
                diag.delta,
                [x.clone()].into_iter().collect::<BTreeSet<_>>(),
                "seed {seed}, injected {x}"
            );
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn module_partitions_are_valid_on_random_graphs(n in 4usize..60, seed in 0u64..1000) {
        let system = generate_random_eps(n, seed);
        let partition = modular::find_modules(&system);
        prop_assert!(partition.validate(&system).is_empty());
        // Deterministic: recomputing gives the identical partition.
        prop_assert_eq!(partition, modular::find_modules(&system));
    }

    #[test]
    fn generation_is_deterministic_in_the_seed(n in 4usize..60, seed in 0u64..1000) {
        prop_assert_eq!(generate_random_eps(n, seed), generate_random_eps(n, seed));
    }

    #[test]
    fn simulation_is_monotone_in_health(seed in 0u64..400) {
        // Faults only remove power: every live reading under a fault
        // scenario is also live when that component is healthy.
        let inst = random_instance(seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xBEEF);
        let comps: Vec<ComponentId> = inst.system.components.keys().cloned().collect();
        let faulty: BTreeSet<ComponentId> =
            [comps[rng.gen_range(0..comps.len())].clone()].into_iter().collect();
        let healthy = HealthAssignment::all_healthy(&inst.system);
        let injected = HealthAssignment::from_faulty(&inst.system, &faulty);
        let full = engine::simulate(
            &inst.system, &inst.ground_rules, &healthy, &inst.config, &inst.inputs,
        ).unwrap();
        let degraded = engine::simulate(
            &inst.system, &inst.ground_rules, &injected, &inst.config, &inst.inputs,
        ).unwrap();
        for c in &comps {
            let after = degraded.component_value(&inst.system, c).unwrap_or("off");
            let before = full.component_value(&inst.system, c).unwrap_or("off");
            if after != "off" {
                prop_assert_eq!(after, before, "component {}", c);
            }
        }
    }
}
