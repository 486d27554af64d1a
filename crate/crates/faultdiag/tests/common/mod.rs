//! Helpers shared by the integration test suites.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use faultdiag::diagnose;
use faultdiag::engine::{self, GroundRule, HealthAssignment};
use faultdiag::generate::generate_random_eps;
use faultdiag::model::{ComponentId, Configuration, EnvAssumptions, Edge, Observation, System};
use faultdiag::sdl;

/// Exhaustive minimal-diagnosis oracle: try every subset of the fault
/// candidates in order of cardinality.
pub fn brute_force_minimal(
    system: &System,
    ground_rules: &[GroundRule],
    env: &EnvAssumptions,
    config: &Configuration,
    inputs: &BTreeMap<ComponentId, String>,
    obs: &Observation,
) -> (usize, Vec<BTreeSet<ComponentId>>) {
    let candidates = diagnose::fault_candidates(system, env);
    let n = candidates.len();
    assert!(n <= 20, "oracle is exponential in the candidate count");
    for size in 0..=n {
        let mut found = Vec::new();
        for mask in 0u32..(1u32 << n) {
            if mask.count_ones() as usize != size {
                continue;
            }
            let delta: BTreeSet<ComponentId> = candidates
                .iter()
                .enumerate()
                .filter(|(i, _)| mask & (1 << i) != 0)
                .map(|(_, c)| c.clone())
                .collect();
            let health = HealthAssignment::from_faulty(system, &delta);
            if engine::consistent(system, ground_rules, &health, config, inputs, obs).unwrap() {
                found.push(delta);
            }
        }
        if !found.is_empty() {
            return (size, found);
        }
    }
    (n + 1, Vec::new())
}

pub struct Instance {
    pub system: System,
    pub ground_rules: Vec<GroundRule>,
    pub inputs: BTreeMap<ComponentId, String>,
    pub config: Configuration,
}

/// A small random power system with a random switch configuration.
pub fn random_instance(seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(4..=12);
    let system = generate_random_eps(n, rng.gen());
    let ground_rules = engine::ground(&system, &sdl::power_rules()).unwrap();
    let inputs: BTreeMap<ComponentId, String> =
        system.sources.iter().map(|s| (s.clone(), "on".to_string())).collect();
    let on: BTreeSet<Edge> =
        system.switches.iter().filter(|_| rng.gen::<bool>()).cloned().collect();
    let config = Configuration { on_switches: on, inputs: BTreeMap::new() };
    Instance { system, ground_rules, inputs, config }
}

/// Close the outgoing switch edges of the named components.
#[allow(dead_code)] // not every test target uses the fixture helpers
pub fn switch_config(system: &System, comps: &[&str]) -> Configuration {
    let on = system
        .switches
        .iter()
        .filter(|e| comps.contains(&e.from.as_str()))
        .cloned()
        .collect();
    Configuration { on_switches: on, inputs: BTreeMap::new() }
}

/// The ten-configuration diagnosis schedule shipped with the EPS case
/// study, keyed by switch component.
#[allow(dead_code)]
pub fn eps_schedule(system: &System) -> Vec<Configuration> {
    [
        vec!["C2", "C4"],
        vec!["C1", "C3", "C5", "C7"],
        vec!["C1", "C8"],
        vec!["C2", "C5", "C8"],
        vec!["C3", "C5", "C6", "C8"],
        vec!["C5", "C6", "C7", "C8"],
        vec!["C4", "C9", "C10"],
        vec!["C3", "C7", "C9", "C10"],
        vec!["C2", "C6", "C7", "C9", "C10"],
        vec!["C1", "C5", "C6", "C7", "C9", "C10"],
    ]
    .iter()
    .map(|comps| switch_config(system, comps))
    .collect()
}
